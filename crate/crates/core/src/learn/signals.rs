use faer::Mat;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Noisy community indicators, one signal per column, class-major order.
///
/// Signal `i` of class `c` is `1 + σ_v` on the vertices labelled `c` and
/// `σ_v` elsewhere, with `σ_v ~ N(0, sigma²)` i.i.d.
pub fn generate_step_signals(
    labels: &[usize],
    count_per_class: usize,
    sigma: f64,
    seed: u64,
) -> Result<(Mat<f64>, Vec<usize>)> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::param("noise_sigma", format!("{sigma} must be >= 0")));
    }
    let classes = labels.iter().max().map_or(0, |m| m + 1);
    for c in 0..classes {
        if !labels.contains(&c) {
            return Err(Error::param("labels", format!("class {c} has no vertices")));
        }
    }
    let n = labels.len();
    let noise = Normal::new(0.0, sigma).map_err(|e| Error::param("noise_sigma", e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = classes * count_per_class;
    let mut signals = Mat::<f64>::zeros(n, total);
    let mut ids = Vec::with_capacity(total);
    for c in 0..classes {
        for i in 0..count_per_class {
            let col = c * count_per_class + i;
            for (v, &lab) in labels.iter().enumerate() {
                let step = if lab == c { 1.0 } else { 0.0 };
                signals[(v, col)] = step + noise.sample(&mut rng);
            }
            ids.push(c);
        }
    }
    Ok((signals, ids))
}

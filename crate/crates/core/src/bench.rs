//! Timing harnesses: size scaling of the Jacobi and exact paths, and the
//! accuracy/time trade-off of the Jacobi sweep count.

use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cayley::{
    apply_cayley_exact_with, apply_cayley_jacobi_counted, CayleyFilter, ExactMethod, JacobiConfig, MatvecCounter,
};
use crate::error::{Error, Result};
use crate::graph::{generate_community_graph, CommunitySpec};
use crate::laplacian::{build_laplacian, LaplacianKind, LaplacianOperator};

pub const MIN_REPS: usize = 30;
pub const WARMUP_REPS: usize = 3;
/// Overrides the repetition count when set (must be at least [`MIN_REPS`]).
pub const REPS_ENV: &str = "CAYLEY_BENCH_REPS";

pub const SCALING_HEADER: &str = "n,r,k,path,reps,median_seconds,mean_seconds,matvecs";
pub const SLOPE_HEADER: &str = "r,k,path,slope";
pub const SWEEP_HEADER: &str = "r,k,rel_error,median_seconds,mean_seconds,matvecs";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchPath {
    Jacobi,
    ExactDense,
    ExactSparse,
}

impl BenchPath {
    pub fn name(self) -> &'static str {
        match self {
            BenchPath::Jacobi => "jacobi",
            BenchPath::ExactDense => "exact_dense",
            BenchPath::ExactSparse => "exact_sparse",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScalingConfig {
    pub sizes: Vec<usize>,
    pub r: usize,
    pub k: usize,
    pub paths: Vec<BenchPath>,
    /// Sizes above this are skipped for the dense exact path.
    pub dense_cap: usize,
    pub reps: usize,
    pub community_size: usize,
    pub p_in: f64,
    /// Expected cross-community neighbours per vertex.
    pub inter_degree: f64,
    pub seed: u64,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        Self {
            sizes: vec![250, 500, 1000, 2000, 4000],
            r: 3,
            k: 4,
            paths: vec![BenchPath::Jacobi, BenchPath::ExactDense],
            dense_cap: 2000,
            reps: MIN_REPS,
            community_size: 15,
            p_in: 0.8,
            inter_degree: 2.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub n: usize,
    pub r: usize,
    pub k: usize,
    pub path: BenchPath,
    pub reps: usize,
    pub median_seconds: f64,
    pub mean_seconds: f64,
    /// Sparse mat-vecs per application (Jacobi path only; 0 otherwise).
    pub matvecs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub r: usize,
    pub k: usize,
    pub path: BenchPath,
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub rows: Vec<ScalingRow>,
    pub fits: Vec<SlopeFit>,
}

impl ScalingReport {
    pub fn rows_csv(&self) -> String {
        let mut out = String::from(SCALING_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{:e},{:e},{}\n",
                r.n,
                r.r,
                r.k,
                r.path.name(),
                r.reps,
                r.median_seconds,
                r.mean_seconds,
                r.matvecs
            ));
        }
        out
    }

    pub fn slopes_csv(&self) -> String {
        let mut out = String::from(SLOPE_HEADER);
        out.push('\n');
        for f in &self.fits {
            out.push_str(&format!("{},{},{},{}\n", f.r, f.k, f.path.name(), f.slope));
        }
        out
    }

    pub fn slope(&self, path: BenchPath) -> Option<f64> {
        self.fits.iter().find(|f| f.path == path).map(|f| f.slope)
    }
}

/// Repetition count: `requested`, or the value of [`REPS_ENV`] when set.
pub fn resolve_reps(requested: usize) -> Result<usize> {
    let reps = match std::env::var(REPS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::param("reps", format!("{REPS_ENV}={v} is not a count")))?,
        Err(_) => requested,
    };
    if reps < MIN_REPS {
        return Err(Error::param("reps", format!("{reps} is below the minimum of {MIN_REPS}")));
    }
    Ok(reps)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Timing {
    pub median: f64,
    pub mean: f64,
}

/// Runs `f` [`WARMUP_REPS`] times untimed, then `reps` times timed.
pub fn time_repeated<F: FnMut() -> Result<()>>(reps: usize, mut f: F) -> Result<Timing> {
    for _ in 0..WARMUP_REPS {
        f()?;
    }
    let mut samples = Vec::with_capacity(reps);
    for _ in 0..reps {
        let start = Instant::now();
        f()?;
        samples.push(start.elapsed().as_secs_f64());
    }
    samples.sort_by(f64::total_cmp);
    let mid = samples.len() / 2;
    let median = if samples.len() % 2 == 0 {
        0.5 * (samples[mid - 1] + samples[mid])
    } else {
        samples[mid]
    };
    Ok(Timing {
        median,
        mean: samples.iter().sum::<f64>() / samples.len() as f64,
    })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Random order-`r` filter with coefficients in `[-1, 1]`.
pub fn random_filter(rng: &mut ChaCha8Rng, r: usize, h: f64) -> CayleyFilter {
    let c = (0..r)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    CayleyFilter::new(rng.random_range(-1.0..1.0), c, h).expect("finite coefficients")
}

fn scaling_graph(cfg: &ScalingConfig, n: usize) -> Result<LaplacianOperator> {
    let spec = CommunitySpec::with_constant_degree(n, cfg.community_size, cfg.p_in, cfg.inter_degree, cfg.seed);
    let (g, _) = generate_community_graph(&spec)?;
    build_laplacian(&g, LaplacianKind::Unnormalized)
}

pub fn bench_scaling(cfg: &ScalingConfig) -> Result<ScalingReport> {
    if cfg.sizes.len() < 4 {
        return Err(Error::param("sizes", "need at least 4 sizes"));
    }
    if cfg.sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param("sizes", "must be strictly ascending"));
    }
    if cfg.r == 0 {
        return Err(Error::param("r", "must be > 0"));
    }
    let reps = resolve_reps(cfg.reps)?;
    let mut rows = Vec::new();
    for &n in &cfg.sizes {
        let lap = scaling_graph(cfg, n)?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ n as u64);
        let filt = random_filter(&mut rng, cfg.r, 0.5);
        let f: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        for &path in &cfg.paths {
            if path == BenchPath::ExactDense && n > cfg.dense_cap {
                continue;
            }
            let jcfg = JacobiConfig::new(cfg.k);
            let mut matvecs = 0;
            let timing = match path {
                BenchPath::Jacobi => time_repeated(reps, || {
                    let mut counter = MatvecCounter::default();
                    std::hint::black_box(apply_cayley_jacobi_counted(&filt, &lap, &f, &jcfg, &mut counter)?);
                    matvecs = counter.matvecs;
                    Ok(())
                })?,
                BenchPath::ExactDense | BenchPath::ExactSparse => {
                    let method = if path == BenchPath::ExactDense { ExactMethod::Dense } else { ExactMethod::Sparse };
                    time_repeated(reps, || {
                        std::hint::black_box(apply_cayley_exact_with(&filt, &lap, &f, method)?);
                        Ok(())
                    })?
                }
            };
            rows.push(ScalingRow {
                n,
                r: cfg.r,
                k: cfg.k,
                path,
                reps,
                median_seconds: timing.median,
                mean_seconds: timing.mean,
                matvecs,
            });
        }
    }
    let fits = cfg
        .paths
        .iter()
        .filter_map(|&path| {
            let pts: Vec<&ScalingRow> = rows.iter().filter(|r| r.path == path).collect();
            (pts.len() >= 2).then(|| SlopeFit {
                r: cfg.r,
                k: cfg.k,
                path,
                slope: loglog_slope(
                    &pts.iter().map(|r| r.n as f64).collect::<Vec<_>>(),
                    &pts.iter().map(|r| r.median_seconds).collect::<Vec<_>>(),
                ),
            })
        })
        .collect();
    Ok(ScalingReport { rows, fits })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub r: usize,
    pub k: usize,
    pub rel_error: f64,
    pub median_seconds: f64,
    pub mean_seconds: f64,
    pub matvecs: usize,
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{:e},{:e},{:e},{}\n",
            r.r, r.k, r.rel_error, r.median_seconds, r.mean_seconds, r.matvecs
        ));
    }
    out
}

/// Forward error of the Jacobi path against exact solves, and its cost, for
/// every `(r, K)` pair. One random filter per order, shared across `K`.
pub fn bench_jacobi_sweep(
    lap: &LaplacianOperator,
    orders: &[usize],
    sweeps: &[usize],
    h: f64,
    reps: usize,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    let reps = resolve_reps(reps)?;
    let n = lap.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut rows = Vec::new();
    for &r in orders {
        let filt = random_filter(&mut rng, r, h);
        let exact = apply_cayley_exact_with(&filt, lap, &f, ExactMethod::Auto)?;
        let norm = exact.iter().map(|x| x * x).sum::<f64>().sqrt();
        for &k in sweeps {
            let cfg = JacobiConfig::new(k);
            let mut counter = MatvecCounter::default();
            let approx = apply_cayley_jacobi_counted(&filt, lap, &f, &cfg, &mut counter)?;
            let err = approx.iter().zip(&exact).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let timing = time_repeated(reps, || {
                std::hint::black_box(apply_cayley_jacobi_counted(
                    &filt,
                    lap,
                    &f,
                    &cfg,
                    &mut MatvecCounter::default(),
                )?);
                Ok(())
            })?;
            rows.push(SweepRow {
                r,
                k,
                rel_error: if norm > 0.0 { err / norm } else { err },
                median_seconds: timing.median,
                mean_seconds: timing.mean,
                matvecs: counter.matvecs,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;

    #[test]
    fn slope_of_exact_power_law() {
        let x = [1.0, 2.0, 4.0, 8.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(1.5)).collect();
        assert!((loglog_slope(&x, &y) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_short_or_unsorted_sizes() {
        let cfg = ScalingConfig {
            sizes: vec![100, 200, 300],
            ..ScalingConfig::default()
        };
        assert!(bench_scaling(&cfg).is_err());
        let cfg = ScalingConfig {
            sizes: vec![100, 300, 200, 400],
            ..ScalingConfig::default()
        };
        assert!(bench_scaling(&cfg).is_err());
    }

    #[test]
    fn small_scaling_run_counts_matvecs() {
        let cfg = ScalingConfig {
            sizes: vec![30, 45, 60, 90],
            paths: vec![BenchPath::Jacobi, BenchPath::ExactSparse],
            ..ScalingConfig::default()
        };
        let report = bench_scaling(&cfg).unwrap();
        assert_eq!(report.rows.len(), 8);
        for row in report.rows.iter().filter(|r| r.path == BenchPath::Jacobi) {
            assert_eq!(row.matvecs, 15);
            assert!(row.reps >= MIN_REPS);
        }
        assert_eq!(report.fits.len(), 2);
        assert!(report.rows_csv().starts_with(SCALING_HEADER));
    }

    #[test]
    fn sweep_has_k0_and_decreasing_error() {
        let lap = build_laplacian(&Graph::circulant(40, &[1, 3]).unwrap(), LaplacianKind::Unnormalized).unwrap();
        let rows = bench_jacobi_sweep(&lap, &[2], &[0, 1, 2, 4, 8, 16], 0.3, MIN_REPS, 1).unwrap();
        assert_eq!(rows[0].k, 0);
        for w in rows[2..].windows(2) {
            assert!(w[1].rel_error <= w[0].rel_error.max(1e-9));
        }
        assert!(sweep_csv(&rows).starts_with(SWEEP_HEADER));
    }
}

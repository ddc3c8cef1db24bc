//! Chebyshev polynomial filters `Σ_j α_j T_j(Δ̃)` on the rescaled Laplacian
//! `Δ̃ = 2Δ/λ_max - I`, applied by the three-term recurrence.

use serde::{Deserialize, Serialize};

use crate::cayley::MatvecCounter;
use crate::error::{check_len, Error, Result};
use crate::laplacian::{LaplacianKind, LaplacianOperator};

/// Slack allowed above `|x| = 1` before [`cheb_t`] rejects its argument.
pub const RANGE_GUARD: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChebFilter {
    pub alpha: Vec<f64>,
    pub lambda_max: f64,
}

impl ChebFilter {
    pub fn new(alpha: Vec<f64>, lambda_max: f64) -> Result<Self> {
        if !(lambda_max > 0.0) || !lambda_max.is_finite() {
            return Err(Error::param("lambda_max", format!("{lambda_max} must be positive")));
        }
        if alpha.is_empty() {
            return Err(Error::param("alpha", "needs at least one coefficient"));
        }
        Ok(Self { alpha, lambda_max })
    }

    /// Order `r` (number of coefficients minus one).
    pub fn order(&self) -> usize {
        self.alpha.len() - 1
    }
}

/// Rescaling bound used for a Laplacian kind: 2 for the kinds whose spectrum
/// is known to lie in `[0, 2]`, a power-iteration estimate otherwise.
pub fn default_lambda_max(lap: &LaplacianOperator) -> f64 {
    match lap.kind() {
        LaplacianKind::Normalized | LaplacianKind::ScaledUnnormalized { .. } => 2.0,
        LaplacianKind::Unnormalized => lap.estimate_lambda_max(),
    }
}

/// `T_j(x)` by the recurrence `T_j = 2x T_{j-1} - T_{j-2}`.
pub fn cheb_t(j: usize, x: f64) -> Result<f64> {
    if x.abs() > 1.0 + RANGE_GUARD {
        return Err(Error::param("x", format!("{x} outside [-1, 1]")));
    }
    Ok(cheb_t_unchecked(j, x))
}

fn cheb_t_unchecked(j: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, x);
    match j {
        0 => 1.0,
        _ => {
            for _ in 1..j {
                let next = 2.0 * x * cur - prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// Scalar response `Σ_j α_j T_j(2λ/λ_max - 1)`. Not range-guarded, so it can
/// be evaluated on eigenvalues that spill marginally past `λ_max`.
pub fn cheb_response(filt: &ChebFilter, lambda: f64) -> f64 {
    let x = 2.0 * lambda / filt.lambda_max - 1.0;
    filt.alpha
        .iter()
        .enumerate()
        .map(|(j, a)| a * cheb_t_unchecked(j, x))
        .sum()
}

fn rescaled_matvec(lap: &LaplacianOperator, lambda_max: f64, x: &[f64], out: &mut [f64]) {
    lap.matvec(x, out);
    let s = 2.0 / lambda_max;
    for (o, xi) in out.iter_mut().zip(x) {
        *o = s * *o - xi;
    }
}

/// Basis `t_0..t_r` with `t_j = T_j(Δ̃) f`; costs exactly `r` mat-vecs.
pub fn cheb_basis(
    lap: &LaplacianOperator,
    lambda_max: f64,
    f: &[f64],
    r: usize,
    counter: &mut MatvecCounter,
) -> Result<Vec<Vec<f64>>> {
    check_len(lap.n(), f.len())?;
    let n = f.len();
    let mut basis = Vec::with_capacity(r + 1);
    basis.push(f.to_vec());
    if r >= 1 {
        let mut t1 = vec![0.0; n];
        rescaled_matvec(lap, lambda_max, f, &mut t1);
        counter.matvecs += 1;
        basis.push(t1);
    }
    let mut tmp = vec![0.0; n];
    for j in 2..=r {
        rescaled_matvec(lap, lambda_max, &basis[j - 1], &mut tmp);
        counter.matvecs += 1;
        let next = tmp
            .iter()
            .zip(&basis[j - 2])
            .map(|(a, b)| 2.0 * a - b)
            .collect();
        basis.push(next);
    }
    Ok(basis)
}

pub fn apply_cheb(filt: &ChebFilter, lap: &LaplacianOperator, f: &[f64]) -> Result<Vec<f64>> {
    apply_cheb_counted(filt, lap, f, &mut MatvecCounter::default())
}

pub fn apply_cheb_counted(
    filt: &ChebFilter,
    lap: &LaplacianOperator,
    f: &[f64],
    counter: &mut MatvecCounter,
) -> Result<Vec<f64>> {
    let basis = cheb_basis(lap, filt.lambda_max, f, filt.order(), counter)?;
    let mut out = vec![0.0; f.len()];
    for (a, t) in filt.alpha.iter().zip(&basis) {
        for (o, v) in out.iter_mut().zip(t) {
            *o += a * v;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_grid_graph, Graph};
    use crate::laplacian::build_laplacian;
    use crate::spectral::eigendecompose;

    #[test]
    fn t_examples() {
        for x in [-1.0, -0.3, 0.0, 0.8, 1.0] {
            assert_eq!(cheb_t(0, x).unwrap(), 1.0);
            assert_eq!(cheb_t(1, x).unwrap(), x);
        }
        assert!((cheb_t(2, 0.5).unwrap() + 0.5).abs() < 1e-15);
        let theta: f64 = 0.3;
        assert!((cheb_t(5, theta.cos()).unwrap() - (5.0 * theta).cos()).abs() < 1e-10);
        assert!(cheb_t(3, 1.0 + 1e-10).is_ok());
        assert!(cheb_t(3, 1.01).is_err());
    }

    #[test]
    fn t_matches_trig_form() {
        for j in 0..30 {
            for i in 0..=100 {
                let x = -1.0 + 2.0 * i as f64 / 100.0;
                let trig = (j as f64 * x.acos()).cos();
                assert!((cheb_t(j, x).unwrap() - trig).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn unit_coefficients() {
        let g = generate_grid_graph(3, 3);
        let lap = build_laplacian(&g, LaplacianKind::Normalized).unwrap();
        let f: Vec<f64> = (0..9).map(|i| i as f64 - 3.0).collect();
        let id = ChebFilter::new(vec![1.0, 0.0, 0.0], 2.0).unwrap();
        assert_eq!(apply_cheb(&id, &lap, &f).unwrap(), f);
        let lin = ChebFilter::new(vec![0.0, 1.0, 0.0], 2.0).unwrap();
        let out = apply_cheb(&lin, &lap, &f).unwrap();
        let lf = lap.apply(&f);
        for i in 0..9 {
            assert!((out[i] - (lf[i] - f[i])).abs() < 1e-14);
        }
    }

    #[test]
    fn matvec_count_is_order() {
        let lap = build_laplacian(&Graph::cycle(8), LaplacianKind::Unnormalized).unwrap();
        for r in 0..6 {
            let filt = ChebFilter::new(vec![0.5; r + 1], 4.0).unwrap();
            let mut counter = MatvecCounter::default();
            apply_cheb_counted(&filt, &lap, &[1.0; 8], &mut counter).unwrap();
            assert_eq!(counter.matvecs, r);
        }
    }

    #[test]
    fn equals_expanded_monomial_polynomial() {
        // Expand Σ α_j T_j(x) into monomials in x, then x = 2Δ/λmax - I.
        let g = generate_grid_graph(3, 4);
        let lap = build_laplacian(&g, LaplacianKind::Unnormalized).unwrap();
        let lmax = default_lambda_max(&lap);
        let alpha = [0.3, -1.1, 0.7, 0.25, -0.4];
        let mut t_prev = vec![1.0];
        let mut t_cur = vec![0.0, 1.0];
        let mut mono = vec![0.0; alpha.len()];
        mono[0] += alpha[0];
        mono[1] += alpha[1];
        for a in alpha.iter().skip(2) {
            let mut next = vec![0.0; t_cur.len() + 1];
            for (k, v) in t_cur.iter().enumerate() {
                next[k + 1] += 2.0 * v;
            }
            for (k, v) in t_prev.iter().enumerate() {
                next[k] -= v;
            }
            for (k, v) in next.iter().enumerate() {
                mono[k] += a * v;
            }
            t_prev = t_cur;
            t_cur = next;
        }
        let f: Vec<f64> = (0..12).map(|i| ((i * i) as f64 * 0.1).sin()).collect();
        let n = f.len();
        let mut power = f.clone();
        let mut expect = vec![0.0; n];
        for (k, m) in mono.iter().enumerate() {
            if k > 0 {
                let lp = lap.apply(&power);
                power = lp.iter().zip(&power).map(|(a, b)| 2.0 * a / lmax - b).collect();
            }
            for (e, p) in expect.iter_mut().zip(&power) {
                *e += m * p;
            }
        }
        let filt = ChebFilter::new(alpha.to_vec(), lmax).unwrap();
        let got = apply_cheb(&filt, &lap, &f).unwrap();
        for (a, b) in got.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn matches_spectral_oracle_and_lambda_max_brackets() {
        let g = generate_grid_graph(5, 5);
        for kind in [LaplacianKind::Unnormalized, LaplacianKind::Normalized] {
            let lap = build_laplacian(&g, kind).unwrap();
            let spec = eigendecompose(&lap).unwrap();
            let lmax = default_lambda_max(&lap);
            assert!(lmax >= spec.eigenvalues().last().unwrap() - 1e-6);
            let filt = ChebFilter::new(vec![0.2, -0.5, 1.0, 0.3], lmax).unwrap();
            let f: Vec<f64> = (0..25).map(|i| (i as f64 * 0.37).cos()).collect();
            let got = apply_cheb(&filt, &lap, &f).unwrap();
            let want = spec.apply_spectral_function(|l| cheb_response(&filt, l), &f).unwrap();
            for (a, b) in got.iter().zip(&want) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn r_hop_support_is_exact() {
        let g = Graph::path(15);
        let lap = build_laplacian(&g, LaplacianKind::Unnormalized).unwrap();
        let filt = ChebFilter::new(vec![0.1, 0.4, -0.3, 0.9], 4.0).unwrap();
        let mut delta = vec![0.0; 15];
        delta[7] = 1.0;
        let out = apply_cheb(&filt, &lap, &delta).unwrap();
        for (v, x) in out.iter().enumerate() {
            if v.abs_diff(7) > 3 {
                assert_eq!(*x, 0.0);
            }
        }
        assert!(out[4] != 0.0 && out[10] != 0.0);
    }
}

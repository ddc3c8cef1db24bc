//! Jacobi approximation of the Cayley powers.
//!
//! For each power `j` the system `(hΔ + iI) y_j = (hΔ - iI) ỹ_{j-1}` is
//! approximated by `K` sweeps of `y ← J y + b_j`, started at `b_j`, where
//! `J = -Diag(hΔ + iI)⁻¹ Off(hΔ)` and `b_j = Diag(hΔ + iI)⁻¹ (hΔ - iI) ỹ_{j-1}`.

use faer::{c64, Mat};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{combine_powers, CayleyFilter};
use crate::error::{check_len, Result};
use crate::laplacian::LaplacianOperator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JacobiConfig {
    /// Jacobi sweeps per power.
    pub k: usize,
    /// Rescale each `ỹ_j` to `‖f‖₂`.
    #[serde(default)]
    pub normalize_each_stage: bool,
}

impl JacobiConfig {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            normalize_each_stage: false,
        }
    }

    pub fn normalized(k: usize) -> Self {
        Self {
            k,
            normalize_each_stage: true,
        }
    }
}

/// Counts sparse mat-vecs performed by one application.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct MatvecCounter {
    pub matvecs: usize,
}

pub struct JacobiOperator<'a> {
    lap: &'a LaplacianOperator,
    h: f64,
    inv_diag: Vec<Complex64>,
}

impl<'a> JacobiOperator<'a> {
    pub fn new(lap: &'a LaplacianOperator, h: f64) -> Self {
        let inv_diag = lap
            .diag()
            .iter()
            .map(|&d| Complex64::new(h * d, 1.0).inv())
            .collect();
        Self { lap, h, inv_diag }
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn laplacian(&self) -> &LaplacianOperator {
        self.lap
    }

    /// `(Diag(hΔ + iI))⁻¹`
    pub fn inv_diag(&self) -> &[Complex64] {
        &self.inv_diag
    }

    /// `out = J x = -inv_diag ⊙ (h Off x)`
    pub fn apply_j(&self, x: &[Complex64], out: &mut [Complex64]) {
        self.lap.off_matvec_complex(x, out);
        for (o, d) in out.iter_mut().zip(&self.inv_diag) {
            *o = -(*o * self.h) * d;
        }
    }

    /// `out = inv_diag ⊙ ((hΔ - iI) x)`
    pub fn rhs(&self, x: &[Complex64], out: &mut [Complex64]) {
        self.lap.off_matvec_complex(x, out);
        for (((o, d), xi), lam) in out
            .iter_mut()
            .zip(&self.inv_diag)
            .zip(x)
            .zip(self.lap.diag())
        {
            *o = (*o * self.h + xi * Complex64::new(self.h * lam, -1.0)) * d;
        }
    }

    pub fn to_dense(&self) -> Mat<c64> {
        let n = self.lap.n();
        let mut m = Mat::<c64>::zeros(n, n);
        for i in 0..n {
            for (j, v) in self.lap.off_row(i) {
                m[(i, j)] = -(self.inv_diag[i] * (self.h * v));
            }
        }
        m
    }

    /// One Jacobi-approximated Cayley step `ỹ_j` from `ỹ_{j-1}`.
    pub fn step(&self, prev: &[Complex64], k: usize, counter: &mut MatvecCounter) -> Vec<Complex64> {
        let n = prev.len();
        let mut b = vec![Complex64::new(0.0, 0.0); n];
        self.rhs(prev, &mut b);
        counter.matvecs += 1;
        let mut y = b.clone();
        let mut next = vec![Complex64::new(0.0, 0.0); n];
        for _ in 0..k {
            self.apply_j(&y, &mut next);
            counter.matvecs += 1;
            for (nv, bv) in next.iter_mut().zip(&b) {
                *nv += bv;
            }
            std::mem::swap(&mut y, &mut next);
        }
        y
    }
}

/// Jacobi-approximated powers `ỹ_1..ỹ_r`.
pub fn jacobi_powers(
    lap: &LaplacianOperator,
    h: f64,
    f: &[f64],
    r: usize,
    cfg: &JacobiConfig,
    counter: &mut MatvecCounter,
) -> Result<Vec<Vec<Complex64>>> {
    check_len(lap.n(), f.len())?;
    let op = JacobiOperator::new(lap, h);
    let f_norm = f.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut prev: Vec<Complex64> = f.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let mut powers = Vec::with_capacity(r);
    for _ in 0..r {
        let mut y = op.step(&prev, cfg.k, counter);
        if cfg.normalize_each_stage {
            let ny = y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if ny > 0.0 {
                let s = f_norm / ny;
                y.iter_mut().for_each(|z| *z *= s);
            }
        }
        powers.push(y.clone());
        prev = y;
    }
    Ok(powers)
}

/// `G̃ f = c₀ f + 2 Re Σ_j c_j ỹ_j`.
pub fn apply_cayley_jacobi(
    filt: &CayleyFilter,
    lap: &LaplacianOperator,
    f: &[f64],
    cfg: &JacobiConfig,
) -> Result<Vec<f64>> {
    apply_cayley_jacobi_counted(filt, lap, f, cfg, &mut MatvecCounter::default())
}

pub fn apply_cayley_jacobi_counted(
    filt: &CayleyFilter,
    lap: &LaplacianOperator,
    f: &[f64],
    cfg: &JacobiConfig,
    counter: &mut MatvecCounter,
) -> Result<Vec<f64>> {
    let powers = jacobi_powers(lap, filt.h(), f, filt.order(), cfg, counter)?;
    Ok(combine_powers(filt.c0, &filt.c, f, &powers))
}

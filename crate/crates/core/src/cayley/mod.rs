//! Cayley filters: `g(λ) = c₀ + 2 Re Σ_j c_j C(hλ)^j` with `C(x) = (x - i)/(x + i)`.
//!
//! A filter can be applied through three independent routes:
//!
//! * the dense spectral oracle ([`apply_cayley_spectral`]),
//! * exact complex solves of `(hΔ + iI) y_j = (hΔ - iI) y_{j-1}` ([`apply_cayley_exact`]),
//! * `K` Jacobi sweeps per power ([`apply_cayley_jacobi`]), costing exactly
//!   `(K + 1) r` sparse mat-vecs.
//!
//! [`analysis`] holds the contraction factor, the a-priori error bound, and the
//! localization checks built on top of those routes.

pub mod analysis;
pub mod exact;
pub mod jacobi;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::spectral::DenseSpectrum;

pub use analysis::{
    decay_certificate, jacobi_error_bound, jacobi_support, kappa, DecayCertificate, HopDecay,
};
pub use exact::{apply_cayley_exact, apply_cayley_exact_with, exact_powers, ExactMethod};
pub use jacobi::{
    apply_cayley_jacobi, apply_cayley_jacobi_counted, jacobi_powers, JacobiConfig,
    JacobiOperator, MatvecCounter,
};

/// `C(hλ) = (hλ - i) / (hλ + i)`; always on the unit circle.
pub fn cayley_transform(h: f64, lambda: f64) -> Complex64 {
    let x = h * lambda;
    // (x - i)/(x + i) = (x - i)^2 / (x^2 + 1)
    let denom = x * x + 1.0;
    Complex64::new((x * x - 1.0) / denom, -2.0 * x / denom)
}

/// One real coefficient, `r` complex coefficients and a spectral zoom `h > 0`.
///
/// Learners update the zoom through [`CayleyFilter::set_log_h`], so
/// unconstrained steps keep it positive.
#[derive(Debug, Clone, PartialEq)]
pub struct CayleyFilter {
    pub c0: f64,
    pub c: Vec<Complex64>,
    h: f64,
}

impl CayleyFilter {
    pub fn new(c0: f64, c: Vec<Complex64>, h: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::param("h", format!("{h} must be positive and finite")));
        }
        if !c0.is_finite() || c.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::param("c", "coefficients must be finite"));
        }
        Ok(Self { c0, c, h })
    }

    /// `G = c₀ I`.
    pub fn scaling(c0: f64, h: f64) -> Self {
        Self::new(c0, Vec::new(), h).expect("valid scaling filter")
    }

    pub fn order(&self) -> usize {
        self.c.len()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn log_h(&self) -> f64 {
        self.h.ln()
    }

    pub fn set_log_h(&mut self, log_h: f64) {
        self.h = log_h.exp();
    }

    pub fn set_h(&mut self, h: f64) -> Result<()> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::param("h", format!("{h} must be positive and finite")));
        }
        self.h = h;
        Ok(())
    }

    /// `Σ_j j |c_j|`, the coefficient part of the Jacobi error constant.
    pub fn weighted_coefficient_sum(&self) -> f64 {
        self.c
            .iter()
            .enumerate()
            .map(|(j, c)| (j + 1) as f64 * c.norm())
            .sum()
    }

    /// Real parameter vector `[c₀, Re c₁, Im c₁, …, Re c_r, Im c_r]`.
    pub fn coefficients_realified(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(1 + 2 * self.order());
        out.push(self.c0);
        for z in &self.c {
            out.push(z.re);
            out.push(z.im);
        }
        out
    }

    pub fn with_coefficients_realified(&self, params: &[f64]) -> Self {
        assert_eq!(params.len(), 1 + 2 * self.order());
        Self {
            c0: params[0],
            c: params[1..]
                .chunks(2)
                .map(|p| Complex64::new(p[0], p[1]))
                .collect(),
            h: self.h,
        }
    }
}

/// Wire form: `{"c0": .., "c": [[re, im], ..], "h": ..}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CayleyFilterSpec {
    pub c0: f64,
    #[serde(default)]
    pub c: Vec<[f64; 2]>,
    pub h: f64,
}

impl TryFrom<CayleyFilterSpec> for CayleyFilter {
    type Error = Error;

    fn try_from(spec: CayleyFilterSpec) -> Result<Self> {
        let c = spec.c.iter().map(|p| Complex64::new(p[0], p[1])).collect();
        CayleyFilter::new(spec.c0, c, spec.h)
    }
}

impl From<&CayleyFilter> for CayleyFilterSpec {
    fn from(f: &CayleyFilter) -> Self {
        Self {
            c0: f.c0,
            c: f.c.iter().map(|z| [z.re, z.im]).collect(),
            h: f.h(),
        }
    }
}

/// `g_{c,h}(λ) = c₀ + 2 Re Σ_j c_j C(hλ)^j`, evaluated by Horner's rule.
pub fn eval_cayley_poly(filt: &CayleyFilter, lambda: f64) -> f64 {
    let z = cayley_transform(filt.h(), lambda);
    let mut acc = Complex64::new(0.0, 0.0);
    for c in filt.c.iter().rev() {
        acc = (acc + c) * z;
    }
    filt.c0 + 2.0 * acc.re
}

/// The same response written as the conjugate-even Laurent polynomial
/// `c₀ + Σ_j (c_j z^j + c̄_j z^{-j})`.
pub fn eval_laurent_form(filt: &CayleyFilter, lambda: f64) -> Complex64 {
    let z = cayley_transform(filt.h(), lambda);
    let zinv = z.inv();
    let mut total = Complex64::new(filt.c0, 0.0);
    let (mut zp, mut zn) = (z, zinv);
    for c in &filt.c {
        total += c * zp + c.conj() * zn;
        zp *= z;
        zn *= zinv;
    }
    total
}

/// `c₀ f + 2 Re Σ_j c_j y_j` for precomputed powers `y_j ≈ C(hΔ)^j f`.
pub fn combine_powers(c0: f64, c: &[Complex64], f: &[f64], powers: &[Vec<Complex64>]) -> Vec<f64> {
    debug_assert_eq!(c.len(), powers.len());
    let mut out: Vec<f64> = f.iter().map(|x| c0 * x).collect();
    for (cj, y) in c.iter().zip(powers) {
        for (o, yv) in out.iter_mut().zip(y) {
            *o += 2.0 * (cj.re * yv.re - cj.im * yv.im);
        }
    }
    out
}

/// Spectral-oracle route: `Φ g_{c,h}(Λ) Φᵀ f`.
pub fn apply_cayley_spectral(filt: &CayleyFilter, spec: &DenseSpectrum, f: &[f64]) -> Result<Vec<f64>> {
    check_len(spec.n(), f.len())?;
    spec.apply_spectral_function(|l| eval_cayley_poly(filt, l), f)
}

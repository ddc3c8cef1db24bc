//! Dense eigendecomposition of a Laplacian and exact spectral filtering.
//! This is the small-n ground truth every approximate path is checked against.

use faer::{Mat, Side};

use crate::error::{check_len, Error, Result};
use crate::laplacian::LaplacianOperator;

pub const DEFAULT_ORACLE_CAP: usize = 2000;

/// Eigenvalues in ascending order and the matching orthonormal eigenvectors
/// (as columns).
#[derive(Debug, Clone)]
pub struct DenseSpectrum {
    eigenvalues: Vec<f64>,
    eigenvectors: Mat<f64>,
}

impl DenseSpectrum {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &Mat<f64> {
        &self.eigenvectors
    }

    /// `Φᵀ f`
    pub fn graph_fourier(&self, f: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n(), f.len())?;
        let phi = &self.eigenvectors;
        Ok((0..self.n())
            .map(|k| (0..self.n()).map(|i| phi[(i, k)] * f[i]).sum())
            .collect())
    }

    /// `Φ c`
    pub fn inverse_fourier(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n(), coeffs.len())?;
        let phi = &self.eigenvectors;
        let mut out = vec![0.0; self.n()];
        for (k, &c) in coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            for (i, o) in out.iter_mut().enumerate() {
                *o += phi[(i, k)] * c;
            }
        }
        Ok(out)
    }

    /// `Φ diag(response(λ_k)) Φᵀ f`
    pub fn apply_spectral_function(
        &self,
        response: impl Fn(f64) -> f64,
        f: &[f64],
    ) -> Result<Vec<f64>> {
        let mut coeffs = self.graph_fourier(f)?;
        for (c, &lambda) in coeffs.iter_mut().zip(&self.eigenvalues) {
            *c *= response(lambda);
        }
        self.inverse_fourier(&coeffs)
    }
}

/// Dense eigendecomposition with the default size cap.
pub fn eigendecompose(lap: &LaplacianOperator) -> Result<DenseSpectrum> {
    eigendecompose_with_cap(lap, DEFAULT_ORACLE_CAP)
}

/// Dense eigendecomposition. Eigenvalues in `[-1e-9, 0)` are clipped to zero.
pub fn eigendecompose_with_cap(lap: &LaplacianOperator, cap: usize) -> Result<DenseSpectrum> {
    let n = lap.n();
    if n > cap {
        return Err(Error::OracleCap { n, cap });
    }
    let evd = lap
        .to_dense()
        .self_adjoint_eigen(Side::Lower)
        .map_err(|_| Error::Eigensolver)?;
    let s = evd.S().column_vector();
    let eigenvalues = (0..n)
        .map(|k| {
            let v = s[k];
            if (-1e-9..0.0).contains(&v) {
                0.0
            } else {
                v
            }
        })
        .collect();
    Ok(DenseSpectrum {
        eigenvalues,
        eigenvectors: evd.U().to_owned(),
    })
}

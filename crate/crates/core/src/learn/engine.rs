//! Batched filter bases for a layer whose filters share one zoom.
//!
//! Every filter in a layer is a linear combination of the same basis
//! signals: `[f, 2Re z₁, -2Im z₁, …]` with `z_j ≈ C(hΔ)^j f` for Cayley, or
//! `[T₀(Δ̃)f, …, T_r(Δ̃)f]` for Chebyshev. The basis is computed once per
//! input signal and mixed by the layer weights.

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, Par};
use num_complex::Complex64;

use crate::cayley::{cayley_transform, JacobiConfig, MatvecCounter};
use crate::chebyshev::cheb_basis;
use crate::error::{check_len, Result};
use crate::grad::{cayley_derivative, JacobiTape};
use crate::laplacian::LaplacianOperator;
use crate::spectral::DenseSpectrum;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BasisKind {
    Chebyshev { lambda_max: f64 },
    /// Exact Cayley powers, evaluated through the spectrum.
    CayleyExact,
    CayleyJacobi(JacobiConfig),
}

enum Prepared {
    Chebyshev(Vec<Mat<f64>>),
    Spectral { fhat: Mat<f64> },
    Jacobi,
}

/// Basis machinery bound to one Laplacian and one set of input signals
/// (columns of `signals`).
pub struct BasisEngine<'a> {
    lap: &'a LaplacianOperator,
    spectrum: Option<&'a DenseSpectrum>,
    kind: BasisKind,
    r: usize,
    signals: Mat<f64>,
    prepared: Prepared,
}

/// Basis for a batch: `comps[m]` is `n × batch`.
pub struct BasisBatch<'a> {
    pub comps: Vec<Mat<f64>>,
    columns: Vec<usize>,
    h: f64,
    tapes: Vec<JacobiTape<'a>>,
}

fn gather(src: &Mat<f64>, columns: &[usize]) -> Mat<f64> {
    Mat::from_fn(src.nrows(), columns.len(), |i, j| src[(i, columns[j])])
}

impl<'a> BasisEngine<'a> {
    /// `spectrum` is required for [`BasisKind::CayleyExact`].
    pub fn new(
        lap: &'a LaplacianOperator,
        spectrum: Option<&'a DenseSpectrum>,
        kind: BasisKind,
        r: usize,
        signals: Mat<f64>,
    ) -> Result<Self> {
        check_len(lap.n(), signals.nrows())?;
        let prepared = match kind {
            BasisKind::Chebyshev { lambda_max } => {
                let n = lap.n();
                let mut comps = vec![Mat::<f64>::zeros(n, signals.ncols()); r + 1];
                let mut col = vec![0.0; n];
                let mut counter = MatvecCounter::default();
                for s in 0..signals.ncols() {
                    for (i, c) in col.iter_mut().enumerate() {
                        *c = signals[(i, s)];
                    }
                    let basis = cheb_basis(lap, lambda_max, &col, r, &mut counter)?;
                    for (m, t) in basis.iter().enumerate() {
                        for (i, v) in t.iter().enumerate() {
                            comps[m][(i, s)] = *v;
                        }
                    }
                }
                Prepared::Chebyshev(comps)
            }
            BasisKind::CayleyExact => {
                let spec = spectrum.ok_or_else(|| {
                    crate::error::Error::param("spectrum", "exact Cayley basis needs a dense spectrum")
                })?;
                check_len(lap.n(), spec.n())?;
                let mut fhat = Mat::<f64>::zeros(lap.n(), signals.ncols());
                matmul(
                    fhat.as_mut(),
                    Accum::Replace,
                    spec.eigenvectors().transpose(),
                    signals.as_ref(),
                    1.0,
                    Par::Seq,
                );
                Prepared::Spectral { fhat }
            }
            BasisKind::CayleyJacobi(_) => Prepared::Jacobi,
        };
        Ok(Self {
            lap,
            spectrum,
            kind,
            r,
            signals,
            prepared,
        })
    }

    pub fn len(&self) -> usize {
        self.signals.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n(&self) -> usize {
        self.lap.n()
    }

    pub fn basis_len(&self) -> usize {
        match self.kind {
            BasisKind::Chebyshev { .. } => self.r + 1,
            _ => 2 * self.r + 1,
        }
    }

    pub fn compute(&self, columns: &[usize], h: f64) -> Result<BasisBatch<'a>> {
        let n = self.n();
        let b = columns.len();
        let mut tapes = Vec::new();
        let comps = match (&self.prepared, self.kind) {
            (Prepared::Chebyshev(all), _) => all.iter().map(|c| gather(c, columns)).collect(),
            (Prepared::Spectral { fhat }, _) => {
                let spec = self.spectrum.expect("checked in new");
                let phi = spec.eigenvectors();
                let fh = gather(fhat, columns);
                let z: Vec<Complex64> = spec.eigenvalues().iter().map(|&l| cayley_transform(h, l)).collect();
                let mut zp = vec![Complex64::new(1.0, 0.0); n];
                let mut comps = vec![gather(&self.signals, columns)];
                for _ in 0..self.r {
                    for (p, zk) in zp.iter_mut().zip(&z) {
                        *p *= zk;
                    }
                    let re = Mat::<f64>::from_fn(n, b, |k, s| zp[k].re * fh[(k, s)]);
                    let im = Mat::<f64>::from_fn(n, b, |k, s| zp[k].im * fh[(k, s)]);
                    let mut c_re = Mat::<f64>::zeros(n, b);
                    let mut c_im = Mat::<f64>::zeros(n, b);
                    matmul(c_re.as_mut(), Accum::Replace, phi.as_ref(), re.as_ref(), 2.0, Par::Seq);
                    matmul(c_im.as_mut(), Accum::Replace, phi.as_ref(), im.as_ref(), -2.0, Par::Seq);
                    comps.push(c_re);
                    comps.push(c_im);
                }
                comps
            }
            (Prepared::Jacobi, BasisKind::CayleyJacobi(cfg)) => {
                let mut comps = vec![gather(&self.signals, columns)];
                for _ in 0..2 * self.r {
                    comps.push(Mat::<f64>::zeros(n, b));
                }
                let mut col = vec![0.0; n];
                let mut counter = MatvecCounter::default();
                for (s, &c) in columns.iter().enumerate() {
                    for (i, v) in col.iter_mut().enumerate() {
                        *v = self.signals[(i, c)];
                    }
                    let tape = JacobiTape::record(self.lap, h, &col, self.r, &cfg, &mut counter)?;
                    for j in 0..self.r {
                        for (i, z) in tape.power(j).iter().enumerate() {
                            comps[1 + 2 * j][(i, s)] = 2.0 * z.re;
                            comps[2 + 2 * j][(i, s)] = -2.0 * z.im;
                        }
                    }
                    tapes.push(tape);
                }
                comps
            }
            (Prepared::Jacobi, _) => unreachable!("prepared state follows kind"),
        };
        Ok(BasisBatch {
            comps,
            columns: columns.to_vec(),
            h,
            tapes,
        })
    }

    /// `∂L/∂h` given `∂L/∂comps` for a batch computed by [`Self::compute`].
    /// Zero for Chebyshev bases.
    pub fn vjp_h(&self, batch: &BasisBatch<'_>, d_comps: &[Mat<f64>]) -> f64 {
        let n = self.n();
        let b = batch.columns.len();
        match &self.prepared {
            Prepared::Chebyshev(_) => 0.0,
            Prepared::Spectral { fhat } => {
                let spec = self.spectrum.expect("checked in new");
                let phi = spec.eigenvectors();
                let h = batch.h;
                let lam = spec.eigenvalues();
                let z: Vec<Complex64> = lam.iter().map(|&l| cayley_transform(h, l)).collect();
                let dz: Vec<Complex64> = lam.iter().map(|&l| cayley_derivative(h * l) * l).collect();
                let mut zp = vec![Complex64::new(1.0, 0.0); n]; // z^{j-1}
                let mut proj_re = Mat::<f64>::zeros(n, b);
                let mut proj_im = Mat::<f64>::zeros(n, b);
                let mut total = 0.0;
                for j in 0..self.r {
                    // ẑ = 2 dB_re - 2i dB_im; conj(Φᵀẑ) = 2 Φᵀ dB_re + 2i Φᵀ dB_im
                    matmul(proj_re.as_mut(), Accum::Replace, phi.transpose(), d_comps[1 + 2 * j].as_ref(), 2.0, Par::Seq);
                    matmul(proj_im.as_mut(), Accum::Replace, phi.transpose(), d_comps[2 + 2 * j].as_ref(), 2.0, Par::Seq);
                    for k in 0..n {
                        let w = zp[k] * dz[k] * (j as f64 + 1.0);
                        for (s, &c) in batch.columns.iter().enumerate() {
                            let f = fhat[(k, c)];
                            total += f * (proj_re[(k, s)] * w.re - proj_im[(k, s)] * w.im);
                        }
                    }
                    for (p, zk) in zp.iter_mut().zip(&z) {
                        *p *= zk;
                    }
                }
                total
            }
            Prepared::Jacobi => {
                let mut total = 0.0;
                for (s, tape) in batch.tapes.iter().enumerate() {
                    let seeds: Vec<Vec<Complex64>> = (0..self.r)
                        .map(|j| {
                            (0..n)
                                .map(|i| Complex64::new(2.0 * d_comps[1 + 2 * j][(i, s)], -2.0 * d_comps[2 + 2 * j][(i, s)]))
                                .collect()
                        })
                        .collect();
                    total += tape.vjp_h(&seeds);
                }
                total
            }
        }
    }
}

use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cayley::{apply_cayley_exact, apply_cayley_jacobi, CayleyFilter, JacobiConfig};
use crate::chebyshev::{apply_cheb, ChebFilter};
use crate::error::{check_len, Error, Result};
use crate::laplacian::LaplacianOperator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterFamily {
    Cayley,
    Chebyshev,
}

impl FilterFamily {
    /// Real weights per filter at order `r`.
    pub fn basis_len(self, r: usize) -> usize {
        match self {
            FilterFamily::Cayley => 2 * r + 1,
            FilterFamily::Chebyshev => r + 1,
        }
    }
}

/// How Cayley filters are applied; Chebyshev filters ignore it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterPath {
    Exact,
    Jacobi(JacobiConfig),
}

/// `p → q` spectral convolution, `out_l = ReLU(Σ_{l'} G_{l,l'} x_{l'} + b_l)`.
///
/// Filter `(l, l')` owns `weights[(l * p + l') * m..][..m]`: the realified
/// Cayley coefficients `[c₀, Re c₁, Im c₁, …]` or the Chebyshev `α₀..α_r`.
/// Cayley layers share one zoom `h = exp(log_h)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralConvLayer {
    pub p: usize,
    pub q: usize,
    pub r: usize,
    pub family: FilterFamily,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub log_h: f64,
    pub lambda_max: f64,
}

impl SpectralConvLayer {
    pub fn zeros(p: usize, q: usize, r: usize, family: FilterFamily, h: f64, lambda_max: f64) -> Self {
        Self {
            p,
            q,
            r,
            family,
            weights: vec![0.0; p * q * family.basis_len(r)],
            bias: vec![0.0; q],
            log_h: h.ln(),
            lambda_max,
        }
    }

    pub fn basis_len(&self) -> usize {
        self.family.basis_len(self.r)
    }

    pub fn h(&self) -> f64 {
        self.log_h.exp()
    }

    pub fn filter_weights(&self, l: usize, lp: usize) -> &[f64] {
        let m = self.basis_len();
        let at = (l * self.p + lp) * m;
        &self.weights[at..at + m]
    }

    pub fn cayley_filter(&self, l: usize, lp: usize) -> Result<CayleyFilter> {
        let w = self.filter_weights(l, lp);
        let c = w[1..].chunks(2).map(|p| Complex64::new(p[0], p[1])).collect();
        CayleyFilter::new(w[0], c, self.h())
    }

    pub fn cheb_filter(&self, l: usize, lp: usize) -> Result<ChebFilter> {
        ChebFilter::new(self.filter_weights(l, lp).to_vec(), self.lambda_max)
    }

    fn validate(&self) -> Result<()> {
        if self.weights.len() != self.p * self.q * self.basis_len() {
            return Err(Error::LengthMismatch {
                expected: self.p * self.q * self.basis_len(),
                actual: self.weights.len(),
            });
        }
        check_len(self.q, self.bias.len())
    }

    /// Reference forward through the single-signal filter routines.
    pub fn forward(&self, lap: &LaplacianOperator, x: &Mat<f64>, path: FilterPath) -> Result<Mat<f64>> {
        self.validate()?;
        check_len(lap.n(), x.nrows())?;
        check_len(self.p, x.ncols())?;
        let n = lap.n();
        let cols: Vec<Vec<f64>> = (0..self.p).map(|j| (0..n).map(|i| x[(i, j)]).collect()).collect();
        let mut out = Mat::<f64>::zeros(n, self.q);
        for l in 0..self.q {
            let mut acc = vec![self.bias[l]; n];
            for (lp, col) in cols.iter().enumerate() {
                let y = match self.family {
                    FilterFamily::Cayley => {
                        let filt = self.cayley_filter(l, lp)?;
                        match path {
                            FilterPath::Exact => apply_cayley_exact(&filt, lap, col)?,
                            FilterPath::Jacobi(cfg) => apply_cayley_jacobi(&filt, lap, col, &cfg)?,
                        }
                    }
                    FilterFamily::Chebyshev => apply_cheb(&self.cheb_filter(l, lp)?, lap, col)?,
                };
                for (a, v) in acc.iter_mut().zip(&y) {
                    *a += v;
                }
            }
            for (i, a) in acc.iter().enumerate() {
                out[(i, l)] = a.max(0.0);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_community_graph, CommunitySpec};
    use crate::laplacian::{build_laplacian, LaplacianKind};
    use faer::c64;
    use faer::linalg::solvers::DenseSolveCore;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn graph() -> crate::graph::Graph {
        generate_community_graph(&CommunitySpec {
            k: 3,
            sizes: vec![5, 6, 7],
            p_in: 0.7,
            p_out: 0.1,
            seed: 2,
        })
        .unwrap()
        .0
    }

    #[test]
    fn zero_layer_outputs_zero() {
        let g = graph();
        let lap = build_laplacian(&g, LaplacianKind::Unnormalized).unwrap();
        let x = Mat::<f64>::from_fn(g.n(), 2, |i, j| i as f64 - j as f64);
        for family in [FilterFamily::Cayley, FilterFamily::Chebyshev] {
            let layer = SpectralConvLayer::zeros(2, 3, 2, family, 1.0, 10.0);
            let out = layer.forward(&lap, &x, FilterPath::Exact).unwrap();
            assert!(out.col_iter().all(|c| c.iter().all(|v| *v == 0.0)));
        }
    }

    #[test]
    fn identity_cayley_passes_positive_input() {
        let g = graph();
        let lap = build_laplacian(&g, LaplacianKind::Normalized).unwrap();
        let x = Mat::<f64>::from_fn(g.n(), 1, |i, _| 0.5 + i as f64);
        let mut layer = SpectralConvLayer::zeros(1, 1, 1, FilterFamily::Cayley, 1.0, 2.0);
        layer.weights[0] = 1.0;
        let out = layer.forward(&lap, &x, FilterPath::Exact).unwrap();
        for i in 0..g.n() {
            assert_eq!(out[(i, 0)], x[(i, 0)]);
        }
    }

    fn dense_cayley(lap: &LaplacianOperator, h: f64) -> Mat<c64> {
        let n = lap.n();
        let d = lap.to_dense();
        let plus = Mat::<c64>::from_fn(n, n, |i, j| c64::new(h * d[(i, j)], if i == j { 1.0 } else { 0.0 }));
        let minus = Mat::<c64>::from_fn(n, n, |i, j| c64::new(h * d[(i, j)], if i == j { -1.0 } else { 0.0 }));
        minus * plus.partial_piv_lu().inverse()
    }

    #[test]
    fn matches_dense_reference() {
        let g = graph();
        let n = g.n();
        let lap = build_laplacian(&g, LaplacianKind::Unnormalized).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let (p, q, r) = (2, 3, 2);
        let x = Mat::<f64>::from_fn(n, p, |_, _| rng.random_range(-1.0..1.0));
        for family in [FilterFamily::Cayley, FilterFamily::Chebyshev] {
            let mut layer = SpectralConvLayer::zeros(p, q, r, family, 0.6, 12.0);
            layer.weights.iter_mut().for_each(|w| *w = rng.random_range(-1.0..1.0));
            layer.bias.iter_mut().for_each(|b| *b = rng.random_range(-0.5..0.5));
            let got = layer.forward(&lap, &x, FilterPath::Exact).unwrap();
            // Dense operator for every filter, built from matrix powers.
            let lt = lap.to_dense();
            let cay = dense_cayley(&lap, layer.h());
            for l in 0..q {
                let mut want = vec![layer.bias[l]; n];
                for lp in 0..p {
                    let w = layer.filter_weights(l, lp);
                    let xc = Mat::<f64>::from_fn(n, 1, |i, _| x[(i, lp)]);
                    let mut acc = Mat::<f64>::zeros(n, 1);
                    match family {
                        FilterFamily::Cayley => {
                            let xz = Mat::<c64>::from_fn(n, 1, |i, _| c64::new(xc[(i, 0)], 0.0));
                            let mut pw = xz.clone();
                            acc += &xc * faer::Scale(w[0]);
                            for j in 0..r {
                                pw = &cay * &pw;
                                let cj = c64::new(w[1 + 2 * j], w[2 + 2 * j]);
                                for i in 0..n {
                                    acc[(i, 0)] += 2.0 * (cj * pw[(i, 0)]).re;
                                }
                            }
                        }
                        FilterFamily::Chebyshev => {
                            let id = Mat::<f64>::identity(n, n);
                            let rescaled = &lt * faer::Scale(2.0 / layer.lambda_max) - &id;
                            let mut t_prev = id.clone();
                            let mut t_cur = rescaled.clone();
                            let mut poly = &id * faer::Scale(w[0]) + &rescaled * faer::Scale(w[1]);
                            for wj in &w[2..] {
                                let next = &rescaled * &t_cur * faer::Scale(2.0) - &t_prev;
                                poly += &next * faer::Scale(*wj);
                                t_prev = t_cur;
                                t_cur = next;
                            }
                            acc += &poly * &xc;
                        }
                    }
                    for i in 0..n {
                        want[i] += acc[(i, 0)];
                    }
                }
                for i in 0..n {
                    assert!((got[(i, l)] - want[i].max(0.0)).abs() < 1e-10);
                }
            }
        }
    }
}

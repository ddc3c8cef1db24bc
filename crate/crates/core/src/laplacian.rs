//! Graph Laplacians as split diagonal / off-diagonal sparse operators.

use faer::Mat;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaplacianKind {
    /// `D - W`
    Unnormalized,
    /// `I - D^{-1/2} W D^{-1/2}`
    Normalized,
    /// `(2 / lambda_max) (D - W)`, spectrum in `[0, 2]`.
    ScaledUnnormalized { lambda_max: f64 },
}

impl LaplacianKind {
    /// Scaled unnormalized kind with `lambda_max` estimated by power iteration.
    pub fn scaled_unnormalized(g: &Graph) -> Self {
        let lap = LaplacianOperator::new(g, LaplacianKind::Unnormalized)
            .expect("unnormalized Laplacian always exists");
        LaplacianKind::ScaledUnnormalized {
            lambda_max: lap.estimate_lambda_max(),
        }
    }
}

/// `Δ = Diag(diag) + Off`, with `Off` sharing the adjacency sparsity pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianOperator {
    kind: LaplacianKind,
    diag: Vec<f64>,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    off_values: Vec<f64>,
    regular: bool,
}

pub const POWER_ITERATIONS: usize = 50;
pub const POWER_TOLERANCE: f64 = 1e-6;

impl LaplacianOperator {
    pub fn new(g: &Graph, kind: LaplacianKind) -> Result<Self> {
        let d = g.degrees();
        let (diag, off_values) = match kind {
            LaplacianKind::Unnormalized => {
                let off = g.weights().iter().map(|w| -w).collect();
                (d.to_vec(), off)
            }
            LaplacianKind::ScaledUnnormalized { lambda_max } => {
                if !(lambda_max > 0.0) || !lambda_max.is_finite() {
                    return Err(Error::param("lambda_max", format!("{lambda_max} must be positive")));
                }
                let s = 2.0 / lambda_max;
                let off = g.weights().iter().map(|w| -s * w).collect();
                (d.iter().map(|x| s * x).collect(), off)
            }
            LaplacianKind::Normalized => {
                if let Some(vertex) = d.iter().position(|&x| x <= 0.0) {
                    return Err(Error::IsolatedVertex { vertex });
                }
                let inv_sqrt: Vec<f64> = d.iter().map(|x| 1.0 / x.sqrt()).collect();
                let mut off = Vec::with_capacity(g.weights().len());
                for i in 0..g.n() {
                    for (j, w) in g.neighbors(i) {
                        off.push(-w * inv_sqrt[i] * inv_sqrt[j]);
                    }
                }
                (vec![1.0; g.n()], off)
            }
        };
        Ok(Self {
            kind,
            diag,
            row_offsets: g.row_offsets().to_vec(),
            col_indices: g.col_indices().to_vec(),
            off_values,
            regular: g.is_regular(),
        })
    }

    /// Whether the underlying graph has equal weighted degrees.
    pub fn graph_is_regular(&self) -> bool {
        self.regular
    }

    pub fn kind(&self) -> LaplacianKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// Stored off-diagonal entries.
    pub fn nnz_off(&self) -> usize {
        self.off_values.len()
    }

    pub fn off_row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_offsets[i]..self.row_offsets[i + 1];
        self.col_indices[range.clone()]
            .iter()
            .copied()
            .zip(self.off_values[range].iter().copied())
    }

    /// `out = Off x`
    pub fn off_matvec(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_offsets[i]..self.row_offsets[i + 1] {
                acc += self.off_values[k] * x[self.col_indices[k]];
            }
            *o = acc;
        }
    }

    /// `out = Off x` for a complex vector.
    pub fn off_matvec_complex(&self, x: &[Complex64], out: &mut [Complex64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let (mut re, mut im) = (0.0, 0.0);
            for k in self.row_offsets[i]..self.row_offsets[i + 1] {
                let v = self.off_values[k];
                let xj = x[self.col_indices[k]];
                re += v * xj.re;
                im += v * xj.im;
            }
            *o = Complex64::new(re, im);
        }
    }

    /// `out = Δ x`
    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        self.off_matvec(x, out);
        for ((o, d), xi) in out.iter_mut().zip(&self.diag).zip(x) {
            *o += d * xi;
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        self.matvec(x, &mut out);
        out
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let n = self.n();
        let mut m = Mat::<f64>::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
            for (j, v) in self.off_row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// Largest eigenvalue by power iteration (at most [`POWER_ITERATIONS`]
    /// steps, stopping at relative change [`POWER_TOLERANCE`]). Returns the
    /// Rayleigh quotient plus the final residual norm once the residual has
    /// dropped below the tolerance; an unconverged run falls back to the
    /// Gershgorin bound, which is always an upper bound.
    pub fn estimate_lambda_max(&self) -> f64 {
        let n = self.n();
        let gershgorin = (0..n)
            .map(|i| self.diag[i] + self.off_row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        if n == 0 || gershgorin == 0.0 {
            return gershgorin;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let mut x: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        normalize(&mut x);
        let mut y = vec![0.0; n];
        let mut rho = 0.0;
        for _ in 0..POWER_ITERATIONS {
            self.matvec(&x, &mut y);
            let next = dot(&x, &y);
            std::mem::swap(&mut x, &mut y);
            if normalize(&mut x) == 0.0 {
                return gershgorin;
            }
            let converged = (next - rho).abs() <= POWER_TOLERANCE * next.abs();
            rho = next;
            if converged {
                break;
            }
        }
        self.matvec(&x, &mut y);
        rho = dot(&x, &y);
        let residual = x
            .iter()
            .zip(&y)
            .map(|(xi, yi)| (yi - rho * xi).powi(2))
            .sum::<f64>()
            .sqrt();
        if residual > POWER_TOLERANCE.sqrt() * rho.abs() {
            return gershgorin;
        }
        (rho + residual).min(gershgorin)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(x: &mut [f64]) -> f64 {
    let norm = dot(x, x).sqrt();
    if norm > 0.0 {
        x.iter_mut().for_each(|v| *v /= norm);
    }
    norm
}

/// Builds the Laplacian of `g`. The normalized kind rejects isolated vertices.
pub fn build_laplacian(g: &Graph, kind: LaplacianKind) -> Result<LaplacianOperator> {
    LaplacianOperator::new(g, kind)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_community_graph, generate_grid_graph, CommunitySpec};

    fn dense_rows(l: &LaplacianOperator) -> Vec<Vec<f64>> {
        let m = l.to_dense();
        (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
            .collect()
    }

    #[test]
    fn path2_examples() {
        let g = Graph::path(2);
        let u = build_laplacian(&g, LaplacianKind::Unnormalized).unwrap();
        assert_eq!(dense_rows(&u), vec![vec![1.0, -1.0], vec![-1.0, 1.0]]);
        let nrm = build_laplacian(&g, LaplacianKind::Normalized).unwrap();
        assert_eq!(dense_rows(&nrm), vec![vec![1.0, -1.0], vec![-1.0, 1.0]]);
    }

    #[test]
    fn triangle_unnormalized() {
        let l = build_laplacian(&Graph::complete(3), LaplacianKind::Unnormalized).unwrap();
        assert_eq!(l.diag(), &[2.0, 2.0, 2.0]);
        for i in 0..3 {
            assert!(l.off_row(i).all(|(_, v)| v == -1.0));
        }
    }

    #[test]
    fn isolated_vertex_rejected_for_normalized() {
        let g = Graph::from_unweighted(3, &[(0, 1)]).unwrap();
        let err = build_laplacian(&g, LaplacianKind::Normalized).unwrap_err();
        assert!(matches!(err, Error::IsolatedVertex { vertex: 2 }));
        assert!(build_laplacian(&g, LaplacianKind::Unnormalized).is_ok());
    }

    #[test]
    fn unnormalized_row_sums_vanish_on_generated_graphs() {
        let graphs = [
            generate_community_graph(&CommunitySpec::default()).unwrap().0,
            generate_grid_graph(7, 9),
            Graph::circulant(30, &[1, 4]).unwrap(),
        ];
        for g in &graphs {
            let l = build_laplacian(g, LaplacianKind::Unnormalized).unwrap();
            let ones = vec![1.0; g.n()];
            let y = l.apply(&ones);
            assert!(y.iter().all(|v| v.abs() <= 1e-12));
        }
    }

    #[test]
    fn matvec_matches_dense() {
        let g = generate_grid_graph(4, 5);
        for kind in [LaplacianKind::Unnormalized, LaplacianKind::Normalized] {
            let l = build_laplacian(&g, kind).unwrap();
            let x: Vec<f64> = (0..g.n()).map(|i| (i as f64 * 0.7).sin()).collect();
            let y = l.apply(&x);
            let d = l.to_dense();
            for i in 0..g.n() {
                let expect: f64 = (0..g.n()).map(|j| d[(i, j)] * x[j]).sum();
                assert!((y[i] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn power_iteration_brackets_lambda_max() {
        let g = generate_grid_graph(6, 6);
        let l = build_laplacian(&g, LaplacianKind::Unnormalized).unwrap();
        let eig = l.to_dense().self_adjoint_eigenvalues(faer::Side::Lower).unwrap();
        let truth = *eig.last().unwrap();
        let est = l.estimate_lambda_max();
        assert!(est >= truth - 1e-6, "estimate {est} below {truth}");
        assert!(est <= 2.0 * g.max_degree() + 1e-12);
    }

    #[test]
    fn scaled_unnormalized_is_rescaled_unnormalized() {
        let g = generate_grid_graph(3, 4);
        let kind = LaplacianKind::scaled_unnormalized(&g);
        let LaplacianKind::ScaledUnnormalized { lambda_max } = kind else {
            unreachable!()
        };
        let s = build_laplacian(&g, kind).unwrap();
        let u = build_laplacian(&g, LaplacianKind::Unnormalized).unwrap();
        for (a, b) in s.diag().iter().zip(u.diag()) {
            assert!((a - 2.0 * b / lambda_max).abs() < 1e-15);
        }
    }
}

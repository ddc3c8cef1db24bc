//! Contraction factor, a-priori Jacobi error bound, and localization checks.

use serde::Serialize;

use super::{apply_cayley_exact, apply_cayley_jacobi, CayleyFilter, JacobiConfig};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::laplacian::{LaplacianKind, LaplacianOperator};

/// `κ = ‖J‖_∞`, the largest row sum of `|J|`.
///
/// For the unnormalized Laplacian this equals `h d / sqrt(h² d² + 1)` with `d`
/// the largest degree. For the normalized kind, `hΔ + iI` must be strictly
/// diagonally dominant; the first offending row is reported otherwise.
pub fn kappa(lap: &LaplacianOperator, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::param("h", format!("{h} must be positive")));
    }
    let mut worst = 0.0f64;
    for i in 0..lap.n() {
        let off: f64 = lap.off_row(i).map(|(_, v)| v.abs()).sum();
        let row_sum = h * off / (h * h * lap.diag()[i] * lap.diag()[i] + 1.0).sqrt();
        if matches!(lap.kind(), LaplacianKind::Normalized) && row_sum >= 1.0 {
            return Err(Error::NotDiagonallyDominant { row: i, row_sum });
        }
        worst = worst.max(row_sum);
    }
    Ok(worst)
}

/// `M = Σ_j j |c_j|` on regular graphs, `√n Σ_j j |c_j|` otherwise.
pub fn error_constant(filt: &CayleyFilter, lap: &LaplacianOperator) -> f64 {
    let base = filt.weighted_coefficient_sum();
    if lap.graph_is_regular() {
        base
    } else {
        (lap.n() as f64).sqrt() * base
    }
}

/// `2 M κ^K`
pub fn bound_from_constants(m: f64, kappa: f64, k: usize) -> f64 {
    2.0 * m * kappa.powi(k as i32)
}

/// Upper bound on `‖G f - G̃ f‖₂ / ‖f‖₂` after `K` Jacobi sweeps.
pub fn jacobi_error_bound(filt: &CayleyFilter, lap: &LaplacianOperator, k: usize) -> Result<f64> {
    let kap = kappa(lap, filt.h())?;
    if kap >= 1.0 {
        return Err(Error::KappaNotContractive(kap));
    }
    Ok(bound_from_constants(error_constant(filt, lap), kap, k))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HopDecay {
    pub k: usize,
    /// `‖Gδ_m‖` restricted to vertices outside the `k`-hop ball.
    pub measured: f64,
    /// `c γ^k ‖Gδ_m‖₂`
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayCertificate {
    pub m: usize,
    pub c_const: f64,
    pub gamma: f64,
    pub response_norm: f64,
    pub per_hop: Vec<HopDecay>,
}

pub const DECAY_SLACK: f64 = 1e-9;

impl DecayCertificate {
    pub fn holds(&self) -> bool {
        self.per_hop.iter().all(|h| h.measured <= h.bound + DECAY_SLACK)
    }

    /// Entries where the bound is below the total mass, i.e. not vacuous.
    pub fn informative(&self) -> impl Iterator<Item = &HopDecay> {
        self.per_hop.iter().filter(|h| h.bound < self.response_norm)
    }
}

/// Measures the `L₂` mass of the exact impulse response `Gδ_m` outside each
/// `k`-hop ball, `k = 0..=ecc(m)`, against `c γ^k ‖Gδ_m‖₂` with
/// `c = 4M / ‖Gδ_m‖₂` and `γ = κ^{1/r}`.
pub fn decay_certificate(
    filt: &CayleyFilter,
    lap: &LaplacianOperator,
    g: &Graph,
    m: usize,
) -> Result<DecayCertificate> {
    let r = filt.order();
    if r == 0 {
        return Err(Error::param("r", "decay certificate needs order r >= 1"));
    }
    if m >= g.n() {
        return Err(Error::param("m", format!("vertex {m} out of range")));
    }
    let kap = kappa(lap, filt.h())?;
    if kap >= 1.0 {
        return Err(Error::KappaNotContractive(kap));
    }
    let mut delta = vec![0.0; g.n()];
    delta[m] = 1.0;
    let response = apply_cayley_exact(filt, lap, &delta)?;
    let response_norm = response.iter().map(|x| x * x).sum::<f64>().sqrt();
    if response_norm <= 1e-12 {
        return Err(Error::ZeroResponse(response_norm));
    }
    let c_const = 4.0 * error_constant(filt, lap) / response_norm;
    let gamma = kap.powf(1.0 / r as f64);
    let dist = g.hop_distances(m);
    let ecc = dist.iter().flatten().copied().max().unwrap_or(0);
    let per_hop = (0..=ecc)
        .map(|k| {
            let measured = response
                .iter()
                .zip(&dist)
                .filter(|(_, d)| d.is_none_or(|d| d > k))
                .map(|(x, _)| x * x)
                .sum::<f64>()
                .sqrt();
            HopDecay {
                k,
                measured,
                bound: c_const * gamma.powi(k as i32) * response_norm,
            }
        })
        .collect();
    Ok(DecayCertificate {
        m,
        c_const,
        gamma,
        response_norm,
        per_hop,
    })
}

/// Checks that the Jacobi response to `δ_m` vanishes exactly outside the
/// `r(K + 1)`-hop ball and returns that radius.
pub fn jacobi_support(
    filt: &CayleyFilter,
    lap: &LaplacianOperator,
    g: &Graph,
    m: usize,
    cfg: &JacobiConfig,
) -> Result<usize> {
    let r = filt.order();
    if r == 0 {
        return Err(Error::param("r", "support check needs order r >= 1"));
    }
    let mut delta = vec![0.0; g.n()];
    delta[m] = 1.0;
    let out = apply_cayley_jacobi(filt, lap, &delta, cfg)?;
    let radius = r * (cfg.k + 1);
    for (vertex, (v, d)) in out.iter().zip(g.hop_distances(m)).enumerate() {
        if d.is_none_or(|d| d > radius) && *v != 0.0 {
            return Err(Error::SupportViolation { vertex, radius });
        }
    }
    Ok(radius)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_community_graph, CommunitySpec};
    use crate::laplacian::build_laplacian;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn kappa_closed_form_on_triangle() {
        let lap = build_laplacian(&Graph::complete(3), LaplacianKind::Unnormalized).unwrap();
        let k = kappa(&lap, 1.0).unwrap();
        assert!((k - 2.0 / 5f64.sqrt()).abs() < 1e-12);
        assert!((k - 0.8944272).abs() < 1e-7);
        assert!(kappa(&lap, 1e-9).unwrap() < 1e-8);
    }

    #[test]
    fn kappa_from_dense_j_on_path3() {
        let lap = build_laplacian(&Graph::path(3), LaplacianKind::Unnormalized).unwrap();
        let j = super::super::JacobiOperator::new(&lap, 1.0).to_dense();
        let row_max = (0..3)
            .map(|i| (0..3).map(|k| j[(i, k)].norm()).sum::<f64>())
            .fold(0.0, f64::max);
        let k = kappa(&lap, 1.0).unwrap();
        assert!((k - row_max).abs() < 1e-12);
        assert!((k - 2.0 / 5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn kappa_increases_with_zoom() {
        let (g, _) = generate_community_graph(&CommunitySpec::default()).unwrap();
        let lap = build_laplacian(&g, LaplacianKind::Unnormalized).unwrap();
        let d = g.max_degree();
        let mut prev = 0.0;
        for i in 0..200 {
            let h = 10f64.powf(-3.0 + 4.0 * i as f64 / 199.0);
            let k = kappa(&lap, h).unwrap();
            assert!((k - h * d / (h * h * d * d + 1.0).sqrt()).abs() < 1e-12);
            assert!(k > prev);
            prev = k;
        }
    }

    #[test]
    fn normalized_kappa_requires_dominance() {
        // A star: the hub row of Off(Δ_n) sums to √(leaves).
        let edges: Vec<_> = (1..10).map(|i| (0, i)).collect();
        let g = Graph::from_unweighted(10, &edges).unwrap();
        let lap = build_laplacian(&g, LaplacianKind::Normalized).unwrap();
        match kappa(&lap, 5.0) {
            Err(Error::NotDiagonallyDominant { row, .. }) => assert_eq!(row, 0),
            other => panic!("unexpected {other:?}"),
        }
        assert!(kappa(&lap, 0.1).unwrap() < 1.0);
    }

    #[test]
    fn bound_arithmetic() {
        let b = bound_from_constants(2.0, 0.9, 10);
        assert!((b - 1.394_713_96).abs() < 1e-6);
        let lap = build_laplacian(&Graph::cycle(9), LaplacianKind::Unnormalized).unwrap();
        let filt = CayleyFilter::new(0.0, vec![c(1.0, 0.0), c(0.5, 0.0)], 1.0).unwrap();
        assert_eq!(error_constant(&filt, &lap), 2.0);
        let zero = CayleyFilter::new(3.0, vec![c(0.0, 0.0); 4], 1.0).unwrap();
        assert_eq!(jacobi_error_bound(&zero, &lap, 5).unwrap(), 0.0);
        let irregular = build_laplacian(&Graph::path(9), LaplacianKind::Unnormalized).unwrap();
        assert!((error_constant(&filt, &irregular) - 6.0).abs() < 1e-12);
    }

    #[test]
    fn support_examples() {
        let g = Graph::path(5);
        let lap = build_laplacian(&g, LaplacianKind::Unnormalized).unwrap();
        let filt = CayleyFilter::new(0.3, vec![c(1.0, 0.5)], 0.9).unwrap();
        assert_eq!(jacobi_support(&filt, &lap, &g, 2, &JacobiConfig::new(0)).unwrap(), 1);
        let out = apply_cayley_jacobi(&filt, &lap, &[0.0, 0.0, 1.0, 0.0, 0.0], &JacobiConfig::new(0)).unwrap();
        assert_eq!((out[0], out[4]), (0.0, 0.0));
        assert!(out[1] != 0.0 && out[3] != 0.0);

        let g = Graph::path(20);
        let lap = build_laplacian(&g, LaplacianKind::Unnormalized).unwrap();
        let filt = CayleyFilter::new(0.3, vec![c(1.0, 0.5), c(-0.2, 0.4)], 0.9).unwrap();
        assert_eq!(jacobi_support(&filt, &lap, &g, 10, &JacobiConfig::new(3)).unwrap(), 8);

        // Two disjoint triangles: the response never leaves the clique.
        let g = Graph::from_unweighted(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]).unwrap();
        let lap = build_laplacian(&g, LaplacianKind::Unnormalized).unwrap();
        assert!(jacobi_support(&filt, &lap, &g, 1, &JacobiConfig::new(6)).is_ok());
        assert!(jacobi_support(&CayleyFilter::scaling(1.0, 1.0), &lap, &g, 1, &JacobiConfig::new(1)).is_err());
    }

    #[test]
    fn decay_examples() {
        let g = Graph::path(8);
        let lap = build_laplacian(&g, LaplacianKind::Unnormalized).unwrap();
        let id = CayleyFilter::new(1.0, vec![c(0.0, 0.0)], 1.0).unwrap();
        let cert = decay_certificate(&id, &lap, &g, 3).unwrap();
        assert!(cert.per_hop.iter().all(|h| h.measured == 0.0));
        assert!(cert.holds());

        let filt = CayleyFilter::new(0.1, vec![c(0.7, -0.2), c(0.3, 0.5)], 0.6).unwrap();
        let cert = decay_certificate(&filt, &lap, &g, 0).unwrap();
        assert_eq!(cert.per_hop.len(), 8);
        assert!(cert.per_hop.last().unwrap().measured == 0.0);
        assert!(cert.holds());

        let zero = CayleyFilter::new(0.0, vec![c(0.0, 0.0)], 1.0).unwrap();
        assert!(matches!(decay_certificate(&zero, &lap, &g, 0), Err(Error::ZeroResponse(_))));
    }

    #[test]
    fn decay_on_community_graph() {
        let (g, _) = generate_community_graph(&CommunitySpec::default()).unwrap();
        let lap = build_laplacian(&g, LaplacianKind::Unnormalized).unwrap();
        let filt = CayleyFilter::new(0.5, vec![c(0.8, -0.3), c(-0.4, 0.6)], 0.2).unwrap();
        let cert = decay_certificate(&filt, &lap, &g, 0).unwrap();
        assert!(cert.holds());
    }
}

//! Finite-difference check of the full network gradient on a tiny instance.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{generate_step_signals, BasisEngine, BasisKind, FilterFamily, Network};
use crate::cayley::JacobiConfig;
use crate::chebyshev::default_lambda_max;
use crate::error::Result;
use crate::grad::{relative_error, GRAD_CHECK_EPS, GRAD_CHECK_FLOOR};
use crate::graph::{generate_community_graph, CommunitySpec};
use crate::laplacian::{build_laplacian, LaplacianKind};
use crate::spectral::eigendecompose;

/// Largest relative coordinate error per basis kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkGradCheck {
    pub seed: u64,
    pub params: usize,
    pub cayley_exact: f64,
    pub cayley_jacobi: f64,
    pub chebyshev: f64,
}

impl NetworkGradCheck {
    pub fn max_rel_err(&self) -> f64 {
        self.cayley_exact.max(self.cayley_jacobi).max(self.chebyshev)
    }
}

/// Puts each unit's kink in the middle of the widest gap between its
/// pre-activations, so the loss is smooth around the base point while the
/// ReLU stays active on part of the graph only.
fn place_biases(net: &mut Network, batch: &super::BasisBatch<'_>, signals: usize) {
    let q = net.conv.bias.len();
    net.conv.bias.iter_mut().for_each(|b| *b = 0.0);
    let n = batch.comps[0].nrows();
    let mut pre = vec![0.0; n * q];
    let mut vals = vec![Vec::with_capacity(n * signals); q];
    for s in 0..signals {
        net.pre_activations(batch, s, &mut pre);
        for row in pre.chunks(q) {
            vals.iter_mut().zip(row).for_each(|(v, x)| v.push(*x));
        }
    }
    for (b, v) in net.conv.bias.iter_mut().zip(&mut vals) {
        v.sort_by(f64::total_cmp);
        let lo = v.len() / 4;
        let hi = 3 * v.len() / 4;
        let i = (lo..hi).max_by(|&i, &j| (v[i + 1] - v[i]).total_cmp(&(v[j + 1] - v[j]))).unwrap();
        *b = -0.5 * (v[i] + v[i + 1]);
    }
}

/// 20 vertices in 3 communities, 9 signals, order 2, 4 hidden features.
/// Every parameter, including `log h`, is checked by central differences.
pub fn network_grad_check(seed: u64) -> Result<NetworkGradCheck> {
    let spec = CommunitySpec {
        k: 3,
        sizes: vec![6, 7, 7],
        p_in: 0.7,
        p_out: 0.05,
        seed,
    };
    let (g, labels) = generate_community_graph(&spec)?;
    let lap = build_laplacian(&g, LaplacianKind::Unnormalized)?;
    let spectrum = eigendecompose(&lap)?;
    let (x, y) = generate_step_signals(&labels, 3, 0.3, seed.wrapping_add(7))?;
    let lmax = default_lambda_max(&lap);
    let cols: Vec<usize> = (0..y.len()).collect();

    let mut errs = [0.0; 3];
    let mut params = 0;
    let kinds = [
        (FilterFamily::Cayley, BasisKind::CayleyExact),
        (FilterFamily::Cayley, BasisKind::CayleyJacobi(JacobiConfig::new(2))),
        (FilterFamily::Chebyshev, BasisKind::Chebyshev { lambda_max: lmax }),
    ];
    for (slot, (family, kind)) in kinds.into_iter().enumerate() {
        let engine = BasisEngine::new(&lap, Some(&spectrum), kind, 2, x.clone())?;
        let mut net = Network::init(family, 2, 4, 3, 0.5, lmax, &mut ChaCha8Rng::seed_from_u64(seed));
        let batch = engine.compute(&cols, net.conv.h())?;
        place_biases(&mut net, &batch, cols.len());
        let got = net.loss_and_grad(&engine, &batch, &y).grads;
        let base = net.params();
        params = params.max(base.len());
        let loss_at = |p: &[f64]| -> Result<f64> {
            let mut m = net.clone();
            m.set_params(p);
            let b = engine.compute(&cols, m.conv.h())?;
            Ok(m.loss_and_grad(&engine, &b, &y).loss)
        };
        let scale = got.iter().fold(0.0f64, |a, g| a.max(g.abs()));
        for i in 0..base.len() {
            let mut p = base.clone();
            p[i] += GRAD_CHECK_EPS;
            let up = loss_at(&p)?;
            p[i] -= 2.0 * GRAD_CHECK_EPS;
            let down = loss_at(&p)?;
            let fd = (up - down) / (2.0 * GRAD_CHECK_EPS);
            errs[slot] = f64::max(errs[slot], relative_error(got[i], fd, GRAD_CHECK_FLOOR * scale));
        }
    }
    Ok(NetworkGradCheck {
        seed,
        params,
        cayley_exact: errs[0],
        cayley_jacobi: errs[1],
        chebyshev: errs[2],
    })
}

//! Single-layer spectral network for community classification of noisy
//! step signals: conv(1 → hidden) → ReLU → vertex mean → linear → softmax.

pub mod check;
pub mod engine;
pub mod layer;
pub mod optim;
pub mod signals;

use std::time::Instant;

use faer::Mat;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::cayley::JacobiConfig;
use crate::chebyshev::default_lambda_max;
use crate::error::{Error, Result};
use crate::graph::{generate_community_graph, CommunitySpec};
use crate::laplacian::{build_laplacian, LaplacianKind, LaplacianOperator};
use crate::spectral::{eigendecompose, DenseSpectrum};

pub use check::{network_grad_check, NetworkGradCheck};
pub use engine::{BasisBatch, BasisEngine, BasisKind};
pub use layer::{FilterFamily, FilterPath, SpectralConvLayer};
pub use optim::{Optimizer, OptimizerKind};
pub use signals::generate_step_signals;

/// Columns per forward pass when only predictions are needed.
const EVAL_CHUNK: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub graph: CommunitySpec,
    pub laplacian: LaplacianKind,
    pub filter_family: FilterFamily,
    pub r: usize,
    /// Jacobi sweeps per Cayley power; `None` applies the filters exactly.
    pub jacobi_k: Option<usize>,
    pub normalize_each_stage: bool,
    pub hidden: usize,
    pub classes: usize,
    pub noise_sigma: f64,
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    pub epochs: usize,
    /// Minibatch size; `None` trains full-batch.
    pub batch_size: Option<usize>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            graph: CommunitySpec::default(),
            laplacian: LaplacianKind::Normalized,
            filter_family: FilterFamily::Cayley,
            r: 1,
            jacobi_k: None,
            normalize_each_stage: false,
            hidden: 32,
            classes: 15,
            noise_sigma: 0.3,
            train_per_class: 100,
            test_per_class: 35,
            optimizer: OptimizerKind::Adam,
            learning_rate: 1e-2,
            epochs: 200,
            batch_size: Some(32),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.graph.validate()?;
        let positive = [
            ("r", self.r),
            ("hidden", self.hidden),
            ("classes", self.classes),
            ("train_per_class", self.train_per_class),
            ("test_per_class", self.test_per_class),
            ("epochs", self.epochs),
        ];
        for (field, v) in positive {
            if v == 0 {
                return Err(Error::param(field, "must be > 0"));
            }
        }
        if self.batch_size == Some(0) {
            return Err(Error::param("batch_size", "must be > 0"));
        }
        if self.classes != self.graph.k {
            return Err(Error::param(
                "classes",
                format!("{} does not match the {} graph communities", self.classes, self.graph.k),
            ));
        }
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return Err(Error::param("noise_sigma", format!("{} must be >= 0", self.noise_sigma)));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::param("learning_rate", "must be positive"));
        }
        Ok(())
    }

    fn basis_kind(&self, lambda_max: f64) -> BasisKind {
        match (self.filter_family, self.jacobi_k) {
            (FilterFamily::Chebyshev, _) => BasisKind::Chebyshev { lambda_max },
            (FilterFamily::Cayley, None) => BasisKind::CayleyExact,
            (FilterFamily::Cayley, Some(k)) => BasisKind::CayleyJacobi(JacobiConfig {
                k,
                normalize_each_stage: self.normalize_each_stage,
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub test_accuracy: f64,
    pub train_accuracy: f64,
    /// Mean training loss per epoch.
    pub loss_curve: Vec<f64>,
    pub learned_h: Option<f64>,
    pub parameter_count: usize,
    /// Wall-clock seconds per epoch. Not serialized, so result files stay
    /// reproducible.
    #[serde(skip)]
    pub epoch_seconds: Vec<f64>,
}

/// Network parameters. The flat layout used by the optimizer is
/// `[conv weights, conv bias, log h (Cayley only), out weights, out bias]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub conv: SpectralConvLayer,
    pub out_w: Vec<f64>,
    pub out_b: Vec<f64>,
    pub classes: usize,
}

pub struct BatchOutput {
    pub loss: f64,
    pub correct: usize,
    pub grads: Vec<f64>,
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let mx = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|z| (z - mx).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

impl Network {
    /// Coefficients i.i.d. `N(0, 1/(r+1))`, readout `N(0, 1/hidden)`, biases 0.
    pub fn init(
        family: FilterFamily,
        r: usize,
        hidden: usize,
        classes: usize,
        h0: f64,
        lambda_max: f64,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let mut conv = SpectralConvLayer::zeros(1, hidden, r, family, h0, lambda_max);
        let wstd = Normal::new(0.0, 1.0 / ((r + 1) as f64).sqrt()).expect("valid std");
        conv.weights.iter_mut().for_each(|w| *w = wstd.sample(rng));
        let ostd = Normal::new(0.0, 1.0 / (hidden as f64).sqrt()).expect("valid std");
        let out_w = (0..classes * hidden).map(|_| ostd.sample(rng)).collect();
        Self {
            conv,
            out_w,
            out_b: vec![0.0; classes],
            classes,
        }
    }

    fn learns_h(&self) -> bool {
        self.conv.family == FilterFamily::Cayley
    }

    pub fn params(&self) -> Vec<f64> {
        let mut p = self.conv.weights.clone();
        p.extend_from_slice(&self.conv.bias);
        if self.learns_h() {
            p.push(self.conv.log_h);
        }
        p.extend_from_slice(&self.out_w);
        p.extend_from_slice(&self.out_b);
        p
    }

    pub fn set_params(&mut self, p: &[f64]) {
        assert_eq!(p.len(), self.param_count());
        let mut at = 0;
        let mut take = |dst: &mut [f64]| {
            dst.copy_from_slice(&p[at..at + dst.len()]);
            at += dst.len();
        };
        take(&mut self.conv.weights);
        take(&mut self.conv.bias);
        if self.learns_h() {
            let mut lh = [0.0];
            take(&mut lh);
            self.conv.log_h = lh[0];
        }
        take(&mut self.out_w);
        take(&mut self.out_b);
    }

    pub fn param_count(&self) -> usize {
        self.conv.weights.len()
            + self.conv.bias.len()
            + usize::from(self.learns_h())
            + self.out_w.len()
            + self.out_b.len()
    }

    /// Pre-activations for signal `s` of the batch, laid out `[v * q + l]`.
    fn pre_activations(&self, batch: &BasisBatch<'_>, s: usize, out: &mut [f64]) {
        let q = self.conv.q;
        let m = self.conv.basis_len();
        let w = &self.conv.weights;
        for chunk in out.chunks_mut(q) {
            chunk.copy_from_slice(&self.conv.bias);
        }
        for (mm, comp) in batch.comps.iter().enumerate() {
            let col = comp.col_as_slice(s);
            for (v, &x) in col.iter().enumerate() {
                let row = &mut out[v * q..(v + 1) * q];
                for (l, o) in row.iter_mut().enumerate() {
                    *o += w[l * m + mm] * x;
                }
            }
        }
    }

    fn pooled(&self, pre: &[f64], n: usize) -> Vec<f64> {
        let q = self.conv.q;
        let mut pooled = vec![0.0; q];
        for row in pre.chunks(q) {
            for (p, x) in pooled.iter_mut().zip(row) {
                *p += x.max(0.0);
            }
        }
        pooled.iter_mut().for_each(|p| *p /= n as f64);
        pooled
    }

    fn logits(&self, pooled: &[f64]) -> Vec<f64> {
        let q = self.conv.q;
        (0..self.classes)
            .map(|c| {
                self.out_b[c]
                    + self.out_w[c * q..(c + 1) * q]
                        .iter()
                        .zip(pooled)
                        .map(|(a, b)| a * b)
                        .sum::<f64>()
            })
            .collect()
    }

    /// Class probabilities for every signal in the batch.
    pub fn predict(&self, batch: &BasisBatch<'_>) -> Vec<Vec<f64>> {
        let n = batch.comps[0].nrows();
        let mut pre = vec![0.0; n * self.conv.q];
        (0..batch.comps[0].ncols())
            .map(|s| {
                self.pre_activations(batch, s, &mut pre);
                softmax(&self.logits(&self.pooled(&pre, n)))
            })
            .collect()
    }

    /// Mean cross-entropy over the batch and its gradient in the flat layout.
    pub fn loss_and_grad(&self, engine: &BasisEngine<'_>, batch: &BasisBatch<'_>, labels: &[usize]) -> BatchOutput {
        let n = engine.n();
        let q = self.conv.q;
        let m = self.conv.basis_len();
        let bsz = labels.len();
        let inv_b = 1.0 / bsz as f64;
        let mut d_w = vec![0.0; self.conv.weights.len()];
        let mut d_bias = vec![0.0; q];
        let mut d_out_w = vec![0.0; self.out_w.len()];
        let mut d_out_b = vec![0.0; self.classes];
        let mut d_comps: Vec<Mat<f64>> = if self.learns_h() {
            vec![Mat::<f64>::zeros(n, bsz); m]
        } else {
            Vec::new()
        };
        let mut pre = vec![0.0; n * q];
        let mut loss = 0.0;
        let mut correct = 0;
        for (s, &y) in labels.iter().enumerate() {
            self.pre_activations(batch, s, &mut pre);
            let pooled = self.pooled(&pre, n);
            let probs = softmax(&self.logits(&pooled));
            loss -= probs[y].ln() * inv_b;
            if argmax(&probs) == y {
                correct += 1;
            }
            let mut d_pooled = vec![0.0; q];
            for c in 0..self.classes {
                let g = (probs[c] - if c == y { 1.0 } else { 0.0 }) * inv_b;
                d_out_b[c] += g;
                for l in 0..q {
                    d_out_w[c * q + l] += g * pooled[l];
                    d_pooled[l] += g * self.out_w[c * q + l];
                }
            }
            let scale = 1.0 / n as f64;
            let cols: Vec<&[f64]> = batch.comps.iter().map(|c| c.col_as_slice(s)).collect();
            let mut d_cols: Vec<&mut [f64]> = d_comps.iter_mut().map(|c| c.col_as_slice_mut(s)).collect();
            for (v, row) in pre.chunks(q).enumerate() {
                for l in 0..q {
                    if row[l] <= 0.0 {
                        continue;
                    }
                    let g = d_pooled[l] * scale;
                    d_bias[l] += g;
                    let wl = &self.conv.weights[l * m..(l + 1) * m];
                    let dwl = &mut d_w[l * m..(l + 1) * m];
                    for mm in 0..m {
                        dwl[mm] += g * cols[mm][v];
                    }
                    for (dc, w) in d_cols.iter_mut().zip(wl) {
                        dc[v] += g * w;
                    }
                }
            }
        }
        let mut grads = d_w;
        grads.extend_from_slice(&d_bias);
        if self.learns_h() {
            let d_h = engine.vjp_h(batch, &d_comps);
            grads.push(d_h * self.conv.h());
        }
        grads.extend_from_slice(&d_out_w);
        grads.extend_from_slice(&d_out_b);
        BatchOutput { loss, correct, grads }
    }
}

/// Fraction of signals whose most probable class matches its label.
pub fn evaluate(net: &Network, engine: &BasisEngine<'_>, labels: &[usize]) -> Result<f64> {
    let all: Vec<usize> = (0..labels.len()).collect();
    let mut correct = 0;
    for chunk in all.chunks(EVAL_CHUNK) {
        let batch = engine.compute(chunk, net.conv.h())?;
        for (probs, &s) in net.predict(&batch).iter().zip(chunk) {
            if argmax(probs) == labels[s] {
                correct += 1;
            }
        }
    }
    Ok(correct as f64 / labels.len() as f64)
}

/// Graph, Laplacian and (when needed) spectrum for one configuration.
pub struct Problem {
    pub lap: LaplacianOperator,
    pub labels: Vec<usize>,
    pub spectrum: Option<DenseSpectrum>,
    pub lambda_max: f64,
}

impl Problem {
    pub fn new(cfg: &TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let (g, labels) = generate_community_graph(&cfg.graph)?;
        let lap = build_laplacian(&g, cfg.laplacian)?;
        let spectrum = match (cfg.filter_family, cfg.jacobi_k) {
            (FilterFamily::Cayley, None) => Some(eigendecompose(&lap)?),
            _ => None,
        };
        let lambda_max = default_lambda_max(&lap);
        Ok(Self {
            lap,
            labels,
            spectrum,
            lambda_max,
        })
    }
}

/// Runs the community-classification experiment described by `cfg`.
/// Deterministic for a fixed configuration.
pub fn train_community(cfg: &TrainConfig) -> Result<ExperimentResult> {
    let problem = Problem::new(cfg)?;
    let mut master = ChaCha8Rng::seed_from_u64(cfg.seed);
    let signal_seed: u64 = master.random();
    let init_seed: u64 = master.random();
    let shuffle_seed: u64 = master.random();

    let per_class = cfg.train_per_class + cfg.test_per_class;
    let (signals, ids) = generate_step_signals(&problem.labels, per_class, cfg.noise_sigma, signal_seed)?;
    let (mut train_cols, mut test_cols) = (Vec::new(), Vec::new());
    for (col, _) in ids.iter().enumerate() {
        if col % per_class < cfg.train_per_class {
            train_cols.push(col);
        } else {
            test_cols.push(col);
        }
    }
    let split = |cols: &[usize]| -> (Mat<f64>, Vec<usize>) {
        (
            Mat::from_fn(signals.nrows(), cols.len(), |i, j| signals[(i, cols[j])]),
            cols.iter().map(|&c| ids[c]).collect(),
        )
    };
    let (train_x, train_y) = split(&train_cols);
    let (test_x, test_y) = split(&test_cols);

    let kind = cfg.basis_kind(problem.lambda_max);
    let spec = problem.spectrum.as_ref();
    let train = BasisEngine::new(&problem.lap, spec, kind, cfg.r, train_x)?;
    let test = BasisEngine::new(&problem.lap, spec, kind, cfg.r, test_x)?;

    let h0 = 2.0 / problem.lambda_max;
    let mut net = Network::init(
        cfg.filter_family,
        cfg.r,
        cfg.hidden,
        cfg.classes,
        h0,
        problem.lambda_max,
        &mut ChaCha8Rng::seed_from_u64(init_seed),
    );
    let mut params = net.params();
    let mut opt = Optimizer::new(cfg.optimizer, cfg.learning_rate, params.len());
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(shuffle_seed);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let batch_size = cfg.batch_size.unwrap_or(order.len()).min(order.len());
    let mut loss_curve = Vec::with_capacity(cfg.epochs);
    let mut epoch_seconds = Vec::with_capacity(cfg.epochs);
    let mut train_correct = 0;
    for epoch in 0..cfg.epochs {
        let start = Instant::now();
        if cfg.batch_size.is_some() {
            order.shuffle(&mut shuffle_rng);
        }
        let mut epoch_loss = 0.0;
        train_correct = 0;
        for chunk in order.chunks(batch_size) {
            let batch = train.compute(chunk, net.conv.h())?;
            let labels: Vec<usize> = chunk.iter().map(|&s| train_y[s]).collect();
            let out = net.loss_and_grad(&train, &batch, &labels);
            if !out.loss.is_finite() || out.grads.iter().any(|g| !g.is_finite()) {
                return Err(Error::Diverged { epoch });
            }
            epoch_loss += out.loss * chunk.len() as f64;
            train_correct += out.correct;
            opt.step(&mut params, &out.grads);
            net.set_params(&params);
        }
        loss_curve.push(epoch_loss / order.len() as f64);
        epoch_seconds.push(start.elapsed().as_secs_f64());
    }
    Ok(ExperimentResult {
        test_accuracy: evaluate(&net, &test, &test_y)?,
        // accuracy accumulated during the last epoch's updates
        train_accuracy: train_correct as f64 / order.len() as f64,
        loss_curve,
        learned_h: net.learns_h().then(|| net.conv.h()),
        parameter_count: net.param_count(),
        epoch_seconds,
    })
}

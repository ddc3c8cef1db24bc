use serde::{Deserialize, Serialize};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;
pub const MOMENTUM: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Adam,
    SgdMomentum,
}

/// First-order optimizer over a flat parameter vector. Positive scale
/// parameters are expected to be passed in log form by the caller.
#[derive(Debug, Clone)]
pub struct Optimizer {
    kind: OptimizerKind,
    lr: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64, len: usize) -> Self {
        Self {
            kind,
            lr,
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grads.len(), self.m.len());
        self.t += 1;
        match self.kind {
            OptimizerKind::Adam => {
                let c1 = 1.0 - ADAM_BETA1.powi(self.t);
                let c2 = 1.0 - ADAM_BETA2.powi(self.t);
                for i in 0..params.len() {
                    let g = grads[i];
                    self.m[i] = ADAM_BETA1 * self.m[i] + (1.0 - ADAM_BETA1) * g;
                    self.v[i] = ADAM_BETA2 * self.v[i] + (1.0 - ADAM_BETA2) * g * g;
                    let mh = self.m[i] / c1;
                    let vh = self.v[i] / c2;
                    params[i] -= self.lr * mh / (vh.sqrt() + ADAM_EPS);
                }
            }
            OptimizerKind::SgdMomentum => {
                for i in 0..params.len() {
                    self.m[i] = MOMENTUM * self.m[i] + grads[i];
                    params[i] -= self.lr * self.m[i];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_parameters() {
        for kind in [OptimizerKind::Adam, OptimizerKind::SgdMomentum] {
            let mut opt = Optimizer::new(kind, 0.1, 3);
            let mut p = vec![1.0, -2.0, 0.5];
            for _ in 0..5 {
                opt.step(&mut p, &[0.0; 3]);
            }
            assert_eq!(p, vec![1.0, -2.0, 0.5]);
        }
    }

    #[test]
    fn momentum_converges_on_quadratic() {
        // f(x) = (x - 3)^2 / 2
        let mut opt = Optimizer::new(OptimizerKind::SgdMomentum, 0.1, 1);
        let mut x = [10.0];
        let mut errs = Vec::new();
        for _ in 0..600 {
            let g = [x[0] - 3.0];
            opt.step(&mut x, &g);
            errs.push((x[0] - 3.0).abs());
        }
        assert!(errs[599] < 1e-9);
        // geometric envelope: the worst error in each 50-step window shrinks
        let window_max = |w: usize| errs[w..w + 50].iter().cloned().fold(0.0, f64::max);
        for w in (0..500).step_by(50) {
            assert!(window_max(w + 50) < 0.5 * window_max(w));
        }
    }

    #[test]
    fn adam_first_step_is_lr_sized() {
        let mut opt = Optimizer::new(OptimizerKind::Adam, 0.01, 2);
        let mut p = [0.0, 0.0];
        opt.step(&mut p, &[3.0, -0.2]);
        assert!((p[0] + 0.01).abs() < 1e-9);
        assert!((p[1] - 0.01).abs() < 1e-9);
    }

    #[test]
    fn adam_trajectory_regression() {
        // Rosenbrock from (-1, 1), 200 steps, lr 0.05.
        let mut opt = Optimizer::new(OptimizerKind::Adam, 0.05, 2);
        let mut p = [-1.0, 1.0];
        for _ in 0..200 {
            let (x, y) = (p[0], p[1]);
            let g = [-2.0 * (1.0 - x) - 400.0 * x * (y - x * x), 200.0 * (y - x * x)];
            opt.step(&mut p, &g);
        }
        assert_eq!(p, ADAM_ROSENBROCK_200);
    }

    const ADAM_ROSENBROCK_200: [f64; 2] = [0.7062923501891423, 0.49775398181227243];
}

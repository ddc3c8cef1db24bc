//! Parameter gradients of `⟨u, G_{c,h} f⟩` for a fixed upstream signal `u`.
//!
//! Complex coefficients are realified: `(Re c_j, Im c_j)` are independent
//! real parameters. Adjoints of complex intermediates use the convention
//! `ẑ = ∂L/∂Re z + i ∂L/∂Im z`, so a complex-linear map `w = A z` pulls back
//! as `ẑ = Aᴴ ŵ` and a parameter enters as `Re⟨ŵ, ∂w/∂θ⟩`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cayley::{cayley_transform, CayleyFilter, JacobiConfig, JacobiOperator, MatvecCounter};
use crate::chebyshev::{cheb_basis, ChebFilter};
use crate::error::{check_len, Error, Result};
use crate::laplacian::LaplacianOperator;
use crate::spectral::DenseSpectrum;

type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CayleyGradient {
    pub d_c0: f64,
    /// `[∂/∂Re c_j, ∂/∂Im c_j]` per coefficient.
    pub d_c: Vec<[f64; 2]>,
    pub d_h: f64,
}

impl CayleyGradient {
    pub fn zeros(r: usize) -> Self {
        Self {
            d_c0: 0.0,
            d_c: vec![[0.0; 2]; r],
            d_h: 0.0,
        }
    }

    /// `[d_c0, d Re c_1, d Im c_1, …, d_h]`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(2 + 2 * self.d_c.len());
        v.push(self.d_c0);
        for p in &self.d_c {
            v.extend_from_slice(p);
        }
        v.push(self.d_h);
        v
    }

    pub fn is_finite(&self) -> bool {
        self.to_vec().iter().all(|x| x.is_finite())
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            d_c0: self.d_c0 + other.d_c0,
            d_c: self
                .d_c
                .iter()
                .zip(&other.d_c)
                .map(|(a, b)| [a[0] + b[0], a[1] + b[1]])
                .collect(),
            d_h: self.d_h + other.d_h,
        }
    }
}

/// Per-coordinate relative error `|a - b| / max(|a|, |b|, floor)`.
pub fn relative_error(a: f64, b: f64, floor: f64) -> f64 {
    let den = a.abs().max(b.abs()).max(floor);
    if den == 0.0 {
        0.0
    } else {
        (a - b).abs() / den
    }
}

/// Largest per-coordinate relative error between two gradients. The floor
/// is `floor_rel` times the largest entry of `reference`, so coordinates that
/// are numerically zero compare on the gradient's own scale.
pub fn max_relative_error(got: &CayleyGradient, reference: &CayleyGradient, floor_rel: f64) -> f64 {
    let a = got.to_vec();
    let b = reference.to_vec();
    let scale = b.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    a.iter()
        .zip(&b)
        .map(|(x, y)| relative_error(*x, *y, floor_rel * scale))
        .fold(0.0, f64::max)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn re_inner(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

/// `C'(x) = (x + i)⁻¹ (1 - C(x))`.
pub fn cayley_derivative(x: f64) -> C64 {
    (C64::new(1.0, 0.0) - cayley_transform(1.0, x)) / C64::new(x, 1.0)
}

/// Gradient through the spectrum. Every quantity is evaluated eigenvalue by
/// eigenvalue on the Fourier coefficients of `f` and `upstream`.
pub fn grad_exact(
    filt: &CayleyFilter,
    spec: &DenseSpectrum,
    f: &[f64],
    upstream: &[f64],
) -> Result<CayleyGradient> {
    check_len(spec.n(), f.len())?;
    check_len(spec.n(), upstream.len())?;
    let fh = spec.graph_fourier(f)?;
    let uh = spec.graph_fourier(upstream)?;
    let h = filt.h();
    let r = filt.order();
    let mut grad = CayleyGradient::zeros(r);
    grad.d_c0 = dot(upstream, f);
    for ((&lam, &fk), &uk) in spec.eigenvalues().iter().zip(&fh).zip(&uh) {
        let w = fk * uk;
        if w == 0.0 {
            continue;
        }
        let z = cayley_transform(h, lam);
        let dz = cayley_derivative(h * lam) * lam;
        let mut zp = C64::new(1.0, 0.0); // z^{j-1}
        let mut dg = ZERO;
        for (j, cj) in filt.c.iter().enumerate() {
            dg += cj * zp * (j as f64 + 1.0);
            zp *= z;
            grad.d_c[j][0] += w * 2.0 * zp.re;
            grad.d_c[j][1] -= w * 2.0 * zp.im;
        }
        grad.d_h += w * 2.0 * (dg * dz).re;
    }
    Ok(grad)
}

struct Stage {
    s: Vec<C64>,
    off_iterates: Vec<Vec<C64>>,
    raw: Vec<C64>,
    raw_norm: f64,
    scale: f64,
    out: Vec<C64>,
}

/// Forward record of [`crate::cayley::jacobi_powers`] with enough state to
/// run the reverse pass. The recorded powers are bitwise identical to the
/// plain forward.
pub struct JacobiTape<'a> {
    op: JacobiOperator<'a>,
    normalize: bool,
    f: Vec<C64>,
    stages: Vec<Stage>,
}

impl<'a> JacobiTape<'a> {
    pub fn record(
        lap: &'a LaplacianOperator,
        h: f64,
        f: &[f64],
        r: usize,
        cfg: &JacobiConfig,
        counter: &mut MatvecCounter,
    ) -> Result<Self> {
        check_len(lap.n(), f.len())?;
        let n = f.len();
        let op = JacobiOperator::new(lap, h);
        let f_norm = f.iter().map(|x| x * x).sum::<f64>().sqrt();
        let fc: Vec<C64> = f.iter().map(|&x| C64::new(x, 0.0)).collect();
        let mut stages: Vec<Stage> = Vec::with_capacity(r);
        let mut off = vec![ZERO; n];
        for _ in 0..r {
            let prev = stages.last().map_or(&fc, |s| &s.out);
            lap.off_matvec_complex(prev, &mut off);
            counter.matvecs += 1;
            let s: Vec<C64> = off
                .iter()
                .zip(prev)
                .zip(lap.diag())
                .map(|((o, x), lam)| *o * h + x * C64::new(h * lam, -1.0))
                .collect();
            let b: Vec<C64> = s.iter().zip(op.inv_diag()).map(|(s, d)| s * d).collect();
            let mut y = b.clone();
            let mut off_iterates = Vec::with_capacity(cfg.k);
            for _ in 0..cfg.k {
                lap.off_matvec_complex(&y, &mut off);
                counter.matvecs += 1;
                for ((yv, o), (d, bv)) in y.iter_mut().zip(&off).zip(op.inv_diag().iter().zip(&b)) {
                    *yv = -(*o * h) * d + bv;
                }
                off_iterates.push(off.clone());
            }
            let (raw_norm, scale) = if cfg.normalize_each_stage {
                let ny = y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                (ny, if ny > 0.0 { f_norm / ny } else { 1.0 })
            } else {
                (0.0, 1.0)
            };
            let out = if cfg.normalize_each_stage && raw_norm > 0.0 {
                y.iter().map(|z| z * scale).collect()
            } else {
                y.clone()
            };
            stages.push(Stage {
                s,
                off_iterates,
                raw: y,
                raw_norm,
                scale,
                out,
            });
        }
        Ok(Self {
            op,
            normalize: cfg.normalize_each_stage,
            f: fc,
            stages,
        })
    }

    pub fn order(&self) -> usize {
        self.stages.len()
    }

    /// `ỹ_j` for `j = 1..=r` (index `j - 1`).
    pub fn power(&self, j: usize) -> &[C64] {
        &self.stages[j].out
    }

    pub fn powers(&self) -> Vec<Vec<C64>> {
        self.stages.iter().map(|s| s.out.clone()).collect()
    }

    /// Derivative of `L` with respect to `h`, given the adjoints `seeds[j]`
    /// of the recorded powers `ỹ_{j+1}`.
    pub fn vjp_h(&self, seeds: &[Vec<C64>]) -> f64 {
        assert_eq!(seeds.len(), self.stages.len());
        let lap = self.op.laplacian();
        let h = self.op.h();
        let d = self.op.inv_diag();
        let diag = lap.diag();
        let n = self.f.len();
        // ∂(h·d)/∂h = i d², ∂d/∂h = -diag d²
        let dh_hd: Vec<C64> = d.iter().map(|v| I * v * v).collect();
        let dh_d: Vec<C64> = d.iter().zip(diag).map(|(v, l)| -(v * v) * *l).collect();
        let mut off = vec![ZERO; n];
        let mut work = vec![ZERO; n];
        let mut dh = 0.0;
        let mut carry = vec![ZERO; n];
        for j in (0..self.stages.len()).rev() {
            let st = &self.stages[j];
            let mut y_hat: Vec<C64> = seeds[j].iter().zip(&carry).map(|(a, b)| a + b).collect();
            if self.normalize && st.raw_norm > 0.0 {
                let proj = re_inner(&y_hat, &st.raw) * st.scale / (st.raw_norm * st.raw_norm);
                for (yh, raw) in y_hat.iter_mut().zip(&st.raw) {
                    *yh = *yh * st.scale - raw * proj;
                }
            }
            let mut b_hat = vec![ZERO; n];
            for k in (0..st.off_iterates.len()).rev() {
                for (bh, yh) in b_hat.iter_mut().zip(&y_hat) {
                    *bh += yh;
                }
                // y^{k+1} = -(h d) ⊙ Off y^k + b
                for ((yh, g), o) in y_hat.iter().zip(&dh_hd).zip(&st.off_iterates[k]) {
                    dh -= (yh.conj() * g * o).re;
                }
                for ((w, yh), dv) in work.iter_mut().zip(&y_hat).zip(d) {
                    *w = dv.conj() * yh;
                }
                lap.off_matvec_complex(&work, &mut off);
                for (yh, o) in y_hat.iter_mut().zip(&off) {
                    *yh = -(*o * h);
                }
            }
            for (bh, yh) in b_hat.iter_mut().zip(&y_hat) {
                *bh += yh;
            }
            // b = d ⊙ s
            let s_hat: Vec<C64> = b_hat.iter().zip(d).map(|(bh, dv)| dv.conj() * bh).collect();
            dh += b_hat
                .iter()
                .zip(&dh_d)
                .zip(&st.s)
                .map(|((bh, g), s)| (bh.conj() * g * s).re)
                .sum::<f64>();
            // s = (hΔ - iI) p
            let prev = if j == 0 { &self.f } else { &self.stages[j - 1].out };
            lap.off_matvec_complex(prev, &mut off);
            dh += s_hat
                .iter()
                .zip(&off)
                .zip(prev.iter().zip(diag))
                .map(|((sh, o), (p, l))| (sh.conj() * (o + p * *l)).re)
                .sum::<f64>();
            if j > 0 {
                lap.off_matvec_complex(&s_hat, &mut off);
                for (((c, sh), o), l) in carry.iter_mut().zip(&s_hat).zip(&off).zip(diag) {
                    *c = (o + sh * *l) * h + I * sh;
                }
            }
        }
        dh
    }
}

/// Reverse-mode gradient of the Jacobi-approximated filter map.
pub fn grad_unrolled(
    filt: &CayleyFilter,
    lap: &LaplacianOperator,
    f: &[f64],
    upstream: &[f64],
    cfg: &JacobiConfig,
) -> Result<CayleyGradient> {
    check_len(lap.n(), upstream.len())?;
    let tape = JacobiTape::record(lap, filt.h(), f, filt.order(), cfg, &mut MatvecCounter::default())?;
    let mut grad = CayleyGradient::zeros(filt.order());
    grad.d_c0 = dot(upstream, f);
    let mut seeds = Vec::with_capacity(filt.order());
    for (j, cj) in filt.c.iter().enumerate() {
        let y = tape.power(j);
        grad.d_c[j][0] = 2.0 * y.iter().zip(upstream).map(|(z, u)| z.re * u).sum::<f64>();
        grad.d_c[j][1] = -2.0 * y.iter().zip(upstream).map(|(z, u)| z.im * u).sum::<f64>();
        seeds.push(upstream.iter().map(|&u| cj.conj() * (2.0 * u)).collect());
    }
    grad.d_h = tape.vjp_h(&seeds);
    Ok(grad)
}

/// `∂/∂α_j ⟨u, Σ α_j T_j(Δ̃) f⟩ = ⟨u, T_j(Δ̃) f⟩`.
pub fn grad_cheb(filt: &ChebFilter, lap: &LaplacianOperator, f: &[f64], upstream: &[f64]) -> Result<Vec<f64>> {
    check_len(lap.n(), upstream.len())?;
    let basis = cheb_basis(lap, filt.lambda_max, f, filt.order(), &mut MatvecCounter::default())?;
    Ok(basis.iter().map(|t| dot(t, upstream)).collect())
}

pub const FD_MIN_STEP: f64 = 1e-8;
pub const FD_MAX_STEP: f64 = 1e-3;

/// Central differences of a scalar loss in every real filter coordinate.
/// Coefficients move by `ε·max(1, |θ|)`; `h` moves multiplicatively,
/// `h·e^{±ε}`, and the result is converted back to `∂/∂h`.
pub fn finite_diff<F>(evaluate: F, filt: &CayleyFilter, eps: f64) -> Result<CayleyGradient>
where
    F: Fn(&CayleyFilter) -> Result<f64>,
{
    if !(FD_MIN_STEP..=FD_MAX_STEP).contains(&eps) {
        return Err(Error::param("eps", format!("{eps} outside [1e-8, 1e-3]")));
    }
    let params = filt.coefficients_realified();
    let mut d = Vec::with_capacity(params.len());
    for i in 0..params.len() {
        let step = eps * params[i].abs().max(1.0);
        let mut p = params.clone();
        p[i] = params[i] + step;
        let up = evaluate(&filt.with_coefficients_realified(&p))?;
        p[i] = params[i] - step;
        let down = evaluate(&filt.with_coefficients_realified(&p))?;
        d.push((up - down) / (2.0 * step));
    }
    let mut f_up = filt.clone();
    f_up.set_log_h(filt.log_h() + eps);
    let mut f_down = filt.clone();
    f_down.set_log_h(filt.log_h() - eps);
    let d_logh = (evaluate(&f_up)? - evaluate(&f_down)?) / (2.0 * eps);
    Ok(CayleyGradient {
        d_c0: d[0],
        d_c: d[1..].chunks(2).map(|p| [p[0], p[1]]).collect(),
        d_h: d_logh / filt.h(),
    })
}

/// Worst relative error per coordinate class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassErrors {
    pub c0: f64,
    pub c_re: f64,
    pub c_im: f64,
    pub h: f64,
}

impl ClassErrors {
    fn absorb(&mut self, got: &CayleyGradient, reference: &CayleyGradient, floor_rel: f64) {
        let scale = reference.to_vec().iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let floor = floor_rel * scale;
        self.c0 = self.c0.max(relative_error(got.d_c0, reference.d_c0, floor));
        for (a, b) in got.d_c.iter().zip(&reference.d_c) {
            self.c_re = self.c_re.max(relative_error(a[0], b[0], floor));
            self.c_im = self.c_im.max(relative_error(a[1], b[1], floor));
        }
        self.h = self.h.max(relative_error(got.d_h, reference.d_h, floor));
    }

    pub fn max(&self) -> f64 {
        self.c0.max(self.c_re).max(self.c_im).max(self.h)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub seed: u64,
    pub cases: usize,
    pub eps: f64,
    pub floor_rel: f64,
    /// `grad_exact` against finite differences of the spectral forward.
    pub exact_vs_fd: ClassErrors,
    /// `grad_unrolled` against finite differences of the Jacobi forward.
    pub unrolled_vs_fd: ClassErrors,
    /// Largest `|g(u₁ + u₂) - g(u₁) - g(u₂)|` relative to `1 + |g(u₁ + u₂)|`.
    pub linearity: f64,
    pub max_rel_err: f64,
}

pub const GRAD_CHECK_SIZES: [usize; 3] = [10, 50, 200];
pub const GRAD_CHECK_EPS: f64 = 1e-6;
pub const GRAD_CHECK_FLOOR: f64 = 1e-6;

/// Three-way gradient agreement over `cases` seeded random instances. Case
/// `i` uses a community graph with `GRAD_CHECK_SIZES[i % 3]` vertices,
/// alternates Laplacian kinds, and draws the order, zoom, coefficients,
/// Jacobi sweep count, signal and upstream from the seed.
pub fn grad_check_suite(seed: u64, cases: usize) -> Result<GradCheckReport> {
    use crate::cayley::{apply_cayley_jacobi, apply_cayley_spectral};
    use crate::graph::{generate_community_graph, CommunitySpec};
    use crate::laplacian::{build_laplacian, LaplacianKind};
    use crate::spectral::eigendecompose;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut exact_err = ClassErrors::default();
    let mut unrolled_err = ClassErrors::default();
    let mut linearity = 0.0f64;
    for case in 0..cases {
        let n = GRAD_CHECK_SIZES[case % GRAD_CHECK_SIZES.len()];
        let k = (n / 10).max(2);
        let mut sizes = vec![n / k; k];
        sizes[0] += n - k * (n / k);
        let spec = CommunitySpec {
            k,
            sizes,
            p_in: 0.6,
            p_out: 2.0 / n as f64,
            seed: rng.random(),
        };
        let (g, _) = generate_community_graph(&spec)?;
        let kind = if case % 2 == 0 { LaplacianKind::Unnormalized } else { LaplacianKind::Normalized };
        let lap = build_laplacian(&g, kind)?;
        let dense = eigendecompose(&lap)?;
        let r = rng.random_range(1..=3);
        let h = match kind {
            LaplacianKind::Normalized => rng.random_range(0.2..3.0),
            _ => rng.random_range(0.05..0.6),
        };
        let c = (0..r)
            .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let filt = CayleyFilter::new(rng.random_range(-1.0..1.0), c, h)?;
        let cfg = JacobiConfig::new(rng.random_range(0..=6));
        let f: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let u: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let u2: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();

        let ge = grad_exact(&filt, &dense, &f, &u)?;
        let fe = finite_diff(|p| Ok(dot(&u, &apply_cayley_spectral(p, &dense, &f)?)), &filt, GRAD_CHECK_EPS)?;
        exact_err.absorb(&ge, &fe, GRAD_CHECK_FLOOR);

        let gu = grad_unrolled(&filt, &lap, &f, &u, &cfg)?;
        let fu = finite_diff(|p| Ok(dot(&u, &apply_cayley_jacobi(p, &lap, &f, &cfg)?)), &filt, GRAD_CHECK_EPS)?;
        unrolled_err.absorb(&gu, &fu, GRAD_CHECK_FLOOR);

        let sum: Vec<f64> = u.iter().zip(&u2).map(|(a, b)| a + b).collect();
        let pairs = [
            (grad_exact(&filt, &dense, &f, &sum)?, ge.add(&grad_exact(&filt, &dense, &f, &u2)?)),
            (grad_unrolled(&filt, &lap, &f, &sum, &cfg)?, gu.add(&grad_unrolled(&filt, &lap, &f, &u2, &cfg)?)),
        ];
        for (joint, split) in pairs {
            for (a, b) in joint.to_vec().iter().zip(split.to_vec()) {
                linearity = linearity.max((a - b).abs() / (1.0 + a.abs()));
            }
        }
    }
    Ok(GradCheckReport {
        seed,
        cases,
        eps: GRAD_CHECK_EPS,
        floor_rel: GRAD_CHECK_FLOOR,
        max_rel_err: exact_err.max().max(unrolled_err.max()),
        exact_vs_fd: exact_err,
        unrolled_vs_fd: unrolled_err,
        linearity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cayley::{apply_cayley_jacobi, apply_cayley_spectral, jacobi_powers};
    use crate::graph::{generate_community_graph, CommunitySpec, Graph};
    use crate::laplacian::{build_laplacian, LaplacianKind};
    use crate::spectral::eigendecompose;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_filter(rng: &mut ChaCha8Rng, r: usize) -> CayleyFilter {
        let c = (0..r)
            .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        CayleyFilter::new(rng.random_range(-1.0..1.0), c, rng.random_range(0.2..2.0)).unwrap()
    }

    fn small_graph(seed: u64) -> crate::graph::Graph {
        generate_community_graph(&CommunitySpec {
            k: 2,
            sizes: vec![6, 7],
            p_in: 0.6,
            p_out: 0.1,
            seed,
        })
        .unwrap()
        .0
    }

    fn signal(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    #[test]
    fn derivative_of_transform() {
        for x in [0.0, 0.3, 2.0, 17.0] {
            let e = 1e-6;
            let fd = (cayley_transform(1.0, x + e) - cayley_transform(1.0, x - e)) / (2.0 * e);
            assert!((fd - cayley_derivative(x)).norm() < 1e-8);
        }
    }

    #[test]
    fn zero_upstream_gives_zero_gradient() {
        let g = small_graph(1);
        let lap = build_laplacian(&g, LaplacianKind::Unnormalized).unwrap();
        let spec = eigendecompose(&lap).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let filt = random_filter(&mut rng, 3);
        let f = signal(&mut rng, g.n());
        let zero = vec![0.0; g.n()];
        assert_eq!(grad_exact(&filt, &spec, &f, &zero).unwrap(), CayleyGradient::zeros(3));
        let gu = grad_unrolled(&filt, &lap, &f, &zero, &JacobiConfig::new(3)).unwrap();
        assert!(gu.to_vec().iter().all(|x| *x == 0.0));
    }

    #[test]
    fn scaling_filter_gradient_is_inner_product() {
        let g = Graph::cycle(9);
        let lap = build_laplacian(&g, LaplacianKind::Unnormalized).unwrap();
        let spec = eigendecompose(&lap).unwrap();
        let f: Vec<f64> = (0..9).map(|i| i as f64).collect();
        let u: Vec<f64> = (0..9).map(|i| 1.0 - i as f64 * 0.2).collect();
        let filt = CayleyFilter::new(0.7, vec![C64::new(0.0, 0.0); 2], 1.0).unwrap();
        let grad = grad_exact(&filt, &spec, &f, &u).unwrap();
        assert!((grad.d_c0 - dot(&f, &u)).abs() < 1e-12);
        assert!(grad.d_h.abs() < 1e-12);
    }

    #[test]
    fn tape_matches_forward_bitwise() {
        let g = small_graph(3);
        let lap = build_laplacian(&g, LaplacianKind::Normalized).unwrap();
        let f: Vec<f64> = (0..g.n()).map(|i| (i as f64).sin()).collect();
        for cfg in [JacobiConfig::new(4), JacobiConfig::normalized(2)] {
            let plain = jacobi_powers(&lap, 0.8, &f, 3, &cfg, &mut MatvecCounter::default()).unwrap();
            let mut counter = MatvecCounter::default();
            let tape = JacobiTape::record(&lap, 0.8, &f, 3, &cfg, &mut counter).unwrap();
            assert_eq!(tape.powers(), plain);
            assert_eq!(counter.matvecs, (cfg.k + 1) * 3);
        }
    }

    #[test]
    fn exact_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for case in 0..10 {
            let g = small_graph(case);
            let kind = if case % 2 == 0 { LaplacianKind::Unnormalized } else { LaplacianKind::Normalized };
            let lap = build_laplacian(&g, kind).unwrap();
            let spec = eigendecompose(&lap).unwrap();
            let filt = random_filter(&mut rng, 1 + case as usize % 4);
            let f = signal(&mut rng, g.n());
            let u = signal(&mut rng, g.n());
            let got = grad_exact(&filt, &spec, &f, &u).unwrap();
            let fd = finite_diff(
                |p| Ok(dot(&u, &apply_cayley_spectral(p, &spec, &f)?)),
                &filt,
                1e-6,
            )
            .unwrap();
            assert!(max_relative_error(&got, &fd, 1e-6) < 1e-5, "case {case}: {got:?} vs {fd:?}");
        }
    }

    #[test]
    fn unrolled_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for case in 0..10 {
            let g = small_graph(case + 100);
            let lap = build_laplacian(&g, LaplacianKind::Unnormalized).unwrap();
            let filt = random_filter(&mut rng, 1 + case as usize % 3);
            let cfg = JacobiConfig {
                k: case as usize % 5,
                normalize_each_stage: case % 3 == 0,
            };
            let f = signal(&mut rng, g.n());
            let u = signal(&mut rng, g.n());
            let got = grad_unrolled(&filt, &lap, &f, &u, &cfg).unwrap();
            let fd = finite_diff(
                |p| Ok(dot(&u, &apply_cayley_jacobi(p, &lap, &f, &cfg)?)),
                &filt,
                1e-6,
            )
            .unwrap();
            assert!(max_relative_error(&got, &fd, 1e-6) < 1e-5, "case {case}: {got:?} vs {fd:?}");
        }
    }

    #[test]
    fn unrolled_converges_to_exact() {
        let g = small_graph(4);
        let lap = build_laplacian(&g, LaplacianKind::Normalized).unwrap();
        let spec = eigendecompose(&lap).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let filt = random_filter(&mut rng, 2);
        let f = signal(&mut rng, g.n());
        let u = signal(&mut rng, g.n());
        let exact = grad_exact(&filt, &spec, &f, &u).unwrap();
        let unrolled = grad_unrolled(&filt, &lap, &f, &u, &JacobiConfig::new(60)).unwrap();
        assert!(max_relative_error(&unrolled, &exact, 1e-6) < 1e-4);
    }

    #[test]
    fn linear_in_upstream() {
        let g = small_graph(6);
        let lap = build_laplacian(&g, LaplacianKind::Unnormalized).unwrap();
        let spec = eigendecompose(&lap).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let filt = random_filter(&mut rng, 3);
        let f = signal(&mut rng, g.n());
        let u1 = signal(&mut rng, g.n());
        let u2 = signal(&mut rng, g.n());
        let sum: Vec<f64> = u1.iter().zip(&u2).map(|(a, b)| a + b).collect();
        let cfg = JacobiConfig::new(3);
        let pairs = [
            (
                grad_exact(&filt, &spec, &f, &sum).unwrap(),
                grad_exact(&filt, &spec, &f, &u1).unwrap().add(&grad_exact(&filt, &spec, &f, &u2).unwrap()),
            ),
            (
                grad_unrolled(&filt, &lap, &f, &sum, &cfg).unwrap(),
                grad_unrolled(&filt, &lap, &f, &u1, &cfg)
                    .unwrap()
                    .add(&grad_unrolled(&filt, &lap, &f, &u2, &cfg).unwrap()),
            ),
        ];
        for (a, b) in pairs {
            for (x, y) in a.to_vec().iter().zip(b.to_vec()) {
                assert!((x - y).abs() <= 1e-10 * (1.0 + y.abs()));
            }
        }
    }

    #[test]
    fn suite_passes_on_a_few_cases() {
        let report = grad_check_suite(1, 6).unwrap();
        assert!(report.max_rel_err < 1e-5, "{report:?}");
        assert!(report.linearity < 1e-10);
    }

    #[test]
    fn finite_diff_examples() {
        let filt = CayleyFilter::new(1.5, vec![C64::new(0.0, 0.0)], 2.0).unwrap();
        let quad = finite_diff(|p| Ok(3.0 * p.c0 * p.c0 - p.c0), &filt, 1e-4).unwrap();
        assert!((quad.d_c0 - 8.0).abs() < 1e-9);
        let sym = finite_diff(|p| Ok(p.c[0].norm_sqr()), &filt, 1e-4).unwrap();
        assert_eq!(sym.d_c, vec![[0.0, 0.0]]);
        let hq = finite_diff(|p| Ok(p.h() * p.h()), &filt, 1e-5).unwrap();
        assert!((hq.d_h - 4.0).abs() < 1e-8);
        assert!(finite_diff(|_| Ok(0.0), &filt, 1e-2).is_err());
    }

    #[test]
    fn chebyshev_gradient_matches_finite_differences() {
        let g = small_graph(9);
        let lap = build_laplacian(&g, LaplacianKind::Normalized).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let f = signal(&mut rng, g.n());
        let u = signal(&mut rng, g.n());
        let filt = ChebFilter::new(vec![0.3, -0.2, 0.5, 0.1], 2.0).unwrap();
        let got = grad_cheb(&filt, &lap, &f, &u).unwrap();
        for j in 0..4 {
            let mut a = filt.clone();
            a.alpha[j] += 1e-6;
            let mut b = filt.clone();
            b.alpha[j] -= 1e-6;
            let eval = |x: &ChebFilter| dot(&u, &crate::chebyshev::apply_cheb(x, &lap, &f).unwrap());
            let fd = (eval(&a) - eval(&b)) / 2e-6;
            assert!(relative_error(got[j], fd, 1e-8) < 1e-6);
        }
    }
}

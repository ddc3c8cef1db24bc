//! Exact application through complex LU solves of `(hΔ + iI) y_j = (hΔ - iI) y_{j-1}`.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{c64, Mat};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{combine_powers, CayleyFilter};
use crate::error::{check_len, Error, Result};
use crate::laplacian::LaplacianOperator;

/// Below this size `Auto` uses a dense LU.
pub const DENSE_SOLVE_LIMIT: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExactMethod {
    /// Dense LU below [`DENSE_SOLVE_LIMIT`] vertices, sparse LU otherwise.
    #[default]
    Auto,
    Dense,
    Sparse,
}

enum Factor {
    Dense(faer::linalg::solvers::PartialPivLu<c64>),
    Sparse(faer::sparse::linalg::solvers::Lu<usize, c64>),
}

/// A factorization of `hΔ + iI`, reusable across right-hand sides.
pub struct ShiftedSolver<'a> {
    lap: &'a LaplacianOperator,
    h: f64,
    factor: Factor,
}

impl<'a> ShiftedSolver<'a> {
    pub fn new(lap: &'a LaplacianOperator, h: f64, method: ExactMethod) -> Result<Self> {
        let n = lap.n();
        let dense = match method {
            ExactMethod::Auto => n < DENSE_SOLVE_LIMIT,
            ExactMethod::Dense => true,
            ExactMethod::Sparse => false,
        };
        let factor = if dense {
            let mut a = Mat::<c64>::zeros(n, n);
            for i in 0..n {
                a[(i, i)] = c64::new(h * lap.diag()[i], 1.0);
                for (j, v) in lap.off_row(i) {
                    a[(i, j)] = c64::new(h * v, 0.0);
                }
            }
            Factor::Dense(a.partial_piv_lu())
        } else {
            let mut triplets = Vec::with_capacity(n + lap.nnz_off());
            for i in 0..n {
                triplets.push(Triplet::new(i, i, c64::new(h * lap.diag()[i], 1.0)));
                for (j, v) in lap.off_row(i) {
                    triplets.push(Triplet::new(i, j, c64::new(h * v, 0.0)));
                }
            }
            let a = SparseColMat::<usize, c64>::try_new_from_triplets(n, n, &triplets)
                .map_err(|e| Error::SolverBreakdown(format!("{e:?}")))?;
            Factor::Sparse(a.sp_lu().map_err(|e| Error::SolverBreakdown(format!("{e:?}")))?)
        };
        Ok(Self { lap, h, factor })
    }

    /// Solves `(hΔ + iI) x = rhs` in place.
    pub fn solve_in_place(&self, rhs: &mut [Complex64]) -> Result<()> {
        let n = rhs.len();
        let mut b = Mat::<c64>::from_fn(n, 1, |i, _| rhs[i]);
        match &self.factor {
            Factor::Dense(lu) => lu.solve_in_place(&mut b),
            Factor::Sparse(lu) => lu.solve_in_place(&mut b),
        }
        for (i, r) in rhs.iter_mut().enumerate() {
            *r = b[(i, 0)];
        }
        if rhs.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::SolverBreakdown("non-finite solution".into()));
        }
        Ok(())
    }

    /// `C(hΔ) x = (hΔ + iI)⁻¹ (hΔ - iI) x`
    pub fn apply_cayley(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut y = vec![Complex64::new(0.0, 0.0); x.len()];
        self.lap.off_matvec_complex(x, &mut y);
        for ((yi, xi), d) in y.iter_mut().zip(x).zip(self.lap.diag()) {
            *yi = *yi * self.h + xi * Complex64::new(self.h * d, -1.0);
        }
        self.solve_in_place(&mut y)?;
        Ok(y)
    }
}

/// Exact powers `C(hΔ)^j f` for `j = 1..=r`.
pub fn exact_powers(
    lap: &LaplacianOperator,
    h: f64,
    f: &[f64],
    r: usize,
    method: ExactMethod,
) -> Result<Vec<Vec<Complex64>>> {
    check_len(lap.n(), f.len())?;
    let mut powers = Vec::with_capacity(r);
    if r == 0 {
        return Ok(powers);
    }
    let solver = ShiftedSolver::new(lap, h, method)?;
    let mut prev: Vec<Complex64> = f.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    for _ in 0..r {
        let next = solver.apply_cayley(&prev)?;
        powers.push(next.clone());
        prev = next;
    }
    Ok(powers)
}

/// `G f` with every inverse computed by an exact LU solve.
pub fn apply_cayley_exact(filt: &CayleyFilter, lap: &LaplacianOperator, f: &[f64]) -> Result<Vec<f64>> {
    apply_cayley_exact_with(filt, lap, f, ExactMethod::Auto)
}

pub fn apply_cayley_exact_with(
    filt: &CayleyFilter,
    lap: &LaplacianOperator,
    f: &[f64],
    method: ExactMethod,
) -> Result<Vec<f64>> {
    let powers = exact_powers(lap, filt.h(), f, filt.order(), method)?;
    Ok(combine_powers(filt.c0, &filt.c, f, &powers))
}

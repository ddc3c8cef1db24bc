//! Cayley spectral graph filters.
//!
//! Filters are rational functions of a graph Laplacian,
//! `g(Δ) = c₀ I + 2 Re Σ_j c_j (hΔ - iI)^j (hΔ + iI)^{-j}`, with a learnable
//! spectral zoom `h`. They can be applied exactly or, in linear time, with a
//! fixed number of Jacobi sweeps per inverse. The crate also carries the
//! Chebyshev baseline, parameter gradients, a small training stack for the
//! community-detection experiment, and timing harnesses.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod cayley;
pub mod chebyshev;
pub mod error;
pub mod grad;
pub mod graph;
pub mod io;
pub mod laplacian;
pub mod learn;
pub mod spectral;

pub use error::{Error, Result};

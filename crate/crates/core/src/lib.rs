//! Exact lower bounds for principal-subspace estimation.
//!
//! The crate computes non-asymptotic Bayes-risk lower bounds (uniform prior on
//! the orthogonal group) for three problems:
//!
//! - Hilbert–Schmidt loss for PCA in the model `N(0, UΛUᵀ)^{⊗n}`
//!   ([`bounds::hs_lower_bound`]),
//! - the excess reconstruction risk of PCA ([`bounds::excess_lower_bound`],
//!   [`bounds::relrank_bound`]),
//! - low-rank matrix denoising `X = UΛUᵀ + σW` with GOE noise
//!   ([`bounds::denoise_lower_bound`]).
//!
//! Every bound is the optimum of a capacitated doubly-substochastic program,
//! solved exactly as a max-flow problem and certified by a min cut. The
//! supporting identities (Fisher information of the orbit directions, Lie
//! derivatives of the projector, the weighted-loss form of the excess risk)
//! live in [`fisher`] and [`equivariance`] so they can be checked against
//! independent numerical oracles, and [`risksim`] estimates Bayes risks of
//! concrete estimators by Monte Carlo so the bounds can be compared against
//! achieved risks.
//!
//! Indices are zero-based throughout: row `i` of a program is eigenvalue
//! `lambdas[i]`, and the leading subspace of rank `d` is spanned by columns
//! `0..d`.
//!
//! ```
//! use subspace_bounds::models::{CovModel, Spectrum};
//! use subspace_bounds::bounds::{hs_bound_d1, hs_lower_bound};
//!
//! let spectrum = Spectrum::new(vec![2.0, 1.0], 1).unwrap();
//! let model = CovModel::new(spectrum, 8).unwrap();
//! let bound = hs_lower_bound(&model, 1.0).unwrap();
//! assert!((bound.value - 1.0 / 6.0).abs() < 1e-12);
//! assert!((hs_bound_d1(&model, 1.0).unwrap() - bound.value).abs() < 1e-12);
//! ```

#![forbid(unsafe_code)]
// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bounds;
pub mod cli;
pub mod equivariance;
pub mod fisher;
pub mod linalg;
pub mod models;
pub mod risksim;

mod error;

pub use error::{Error, Result};

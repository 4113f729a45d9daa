//! Distributional gradient boosting for univariate regression.
//!
//! The crate models the full conditional distribution of a response, not just
//! its mean: one boosted tree ensemble is trained per distributional
//! parameter, driven by per-row gradients and hessians of the negative
//! log-likelihood. Two heads are provided:
//!
//! - [`gaussian::GaussianHead`]: location/scale Gaussian with identity and
//!   log links (closed-form derivatives, quantiles and CRPS);
//! - [`flow::BernsteinFlowHead`]: a Bernstein-polynomial normalizing flow
//!   (sigmoid scale-shift, monotone Bernstein map, affine scale-shift) whose
//!   exact likelihood, derivatives and inverse make it a drop-in nonparametric
//!   alternative.
//!
//! The tree engine is histogram-based with Newton split finding, and the
//! `metrics` and `data` modules cover CRPS/pinball scoring, fold protocols,
//! response transforms and the heteroskedastic simulation generator.

pub mod bins;
pub mod boosting;
pub mod data;
pub mod dual;
pub mod error;
pub mod flow;
pub mod gaussian;
pub mod head;
pub mod math;
pub mod metrics;
pub mod tree;

pub use error::{Error, Result};

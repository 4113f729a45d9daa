//! The distribution-head contract shared by all boosted heads.
//!
//! A head exposes K raw parameters (one boosted ensemble each), the per-row
//! NLL with its gradients and diagonal hessians taken w.r.t. the raw scores,
//! plus the distribution surface: cdf, pdf, quantile, sampling and an
//! unconditional fit used for offset initialization.

use crate::error::Result;
use serde::{Deserialize, Serialize};

/// Serializable head identity stored in model files and configs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum HeadDescriptor {
    Gaussian,
    BernsteinFlow { order: usize },
}

impl HeadDescriptor {
    pub const SUPPORTED: &'static [&'static str] = &["gaussian", "bernstein_flow"];
}

impl std::fmt::Display for HeadDescriptor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            HeadDescriptor::Gaussian => write!(f, "gaussian"),
            HeadDescriptor::BernsteinFlow { order } => write!(f, "bernstein_flow(order={order})"),
        }
    }
}

/// Capability contract for a distribution head.
///
/// `eta` is the per-row raw-parameter vector of length [`n_params`]; link
/// functions live inside the head, so the boosting layer only ever sees
/// unconstrained scores.
///
/// [`n_params`]: DistributionHead::n_params
pub trait DistributionHead: Send + Sync {
    /// Number of raw parameters K.
    fn n_params(&self) -> usize;

    fn descriptor(&self) -> HeadDescriptor;

    /// Per-observation negative log-likelihood.
    fn nll(&self, y: f64, eta: &[f64]) -> f64;

    /// Gradient and diagonal hessian of the per-observation NLL w.r.t. each
    /// raw score, written into the provided slices (length K each).
    fn grad_hess(&self, y: f64, eta: &[f64], grad: &mut [f64], hess: &mut [f64]);

    fn cdf(&self, y: f64, eta: &[f64]) -> f64;

    fn pdf(&self, y: f64, eta: &[f64]) -> f64;

    /// Quantile at level `alpha` in (0,1). Heads with a bounded image return
    /// an out-of-support error for unattainable levels.
    fn quantile(&self, alpha: f64, eta: &[f64]) -> Result<f64>;

    /// `n` seed-reproducible draws from the distribution at `eta`.
    fn sample(&self, eta: &[f64], n: usize, seed: u64) -> Vec<f64>;

    /// Unconditional maximum-likelihood raw parameters for `y`, used as
    /// boosting offsets.
    fn unconditional_fit(&self, y: &[f64]) -> Result<Vec<f64>>;
}

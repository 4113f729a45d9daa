//! Bernstein-polynomial normalizing flow head.
//!
//! The flow maps the response to the standard-normal base space through three
//! monotone stages:
//!
//!   ytil = sigmoid(a1' y - b1)                 (scale-shift into (0,1))
//!   h    = sum_m theta'_m C(M,m) ytil^m (1-ytil)^(M-m)   (Bernstein map)
//!   z    = a2' h - b2                          (scale-shift into N(0,1) range)
//!
//! Positivity of a1', a2' and strict monotonicity of theta' come from
//! softplus constraints on the raw parameters, so trees can fit all
//! K = M + 5 raw scores unconstrained. The density follows from the change
//! of variables theorem; the log-Jacobian is
//!
//!   log_det = ln a2' + ln h'(ytil) + ln[ytil (1 - ytil)] + ln a1'
//!
//! Derivatives of the NLL w.r.t. each raw parameter are obtained by pushing
//! second-order dual numbers through the exact same evaluation path, one seed
//! parameter per pass. Inversion is closed form for the affine/sigmoid stages
//! and bisection on the Bernstein stage.
//!
//! Raw parameter layout: `[a1, b1, theta_0, ..., theta_M, a2, b2]`.

use crate::dual::Dual2;
use crate::error::{Error, Result};
use crate::head::{DistributionHead, HeadDescriptor};
use crate::math::{logit, normal_cdf, normal_quantile, softplus, LN_2PI};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::atomic::{AtomicU64, Ordering};

/// Sigmoid saturation clamp: `ytil` is kept inside [EPS_SIGMOID, 1 - EPS_SIGMOID].
pub const EPS_SIGMOID: f64 = 1e-12;
/// Bernstein-stage bisection tolerance on |h(ytil) - target|.
pub const INVERT_TOL: f64 = 1e-10;
/// Out-of-range base-space draws are pulled this far inside the attainable interval.
const SAMPLE_CLAMP_SHIFT: f64 = 1e-9;

/// Constrained flow parameters: positive scales, strictly increasing theta.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowConstrainedParams {
    pub a1: f64,
    pub b1: f64,
    /// theta'_0 < theta'_1 < ... < theta'_M.
    pub theta: Vec<f64>,
    pub a2: f64,
    pub b2: f64,
}

/// Apply the softplus constraints to a raw parameter vector
/// `[a1, b1, theta_0..theta_M, a2, b2]` (length M + 5, M >= 1).
pub fn constrain(raw: &[f64]) -> FlowConstrainedParams {
    let m = order_of(raw);
    let mut theta = Vec::with_capacity(m + 1);
    theta.push(raw[2]);
    for i in 1..=m {
        let prev = *theta.last().unwrap();
        theta.push(prev + softplus(raw[2 + i]));
    }
    FlowConstrainedParams {
        a1: softplus(raw[0]),
        b1: raw[1],
        theta,
        a2: softplus(raw[2 + m + 1]),
        b2: raw[2 + m + 2],
    }
}

#[inline]
fn order_of(raw: &[f64]) -> usize {
    assert!(raw.len() >= 6, "flow raw parameter vector needs at least 6 entries");
    raw.len() - 5
}

/// Evaluate the Bernstein map and its derivative at `ytil` in [0,1].
///
/// Returns (value, derivative); the value interpolates the endpoint
/// coefficients and the derivative is strictly positive for increasing theta.
pub fn bernstein_eval(ytil: f64, theta: &[f64]) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&ytil) {
        return Err(Error::invalid_input(format!(
            "Bernstein argument must lie in [0,1], got {ytil}"
        )));
    }
    let value = de_casteljau(theta, ytil);
    let m = theta.len() - 1;
    let diffs: Vec<f64> = theta.windows(2).map(|w| w[1] - w[0]).collect();
    let deriv = (m as f64) * de_casteljau(&diffs, ytil);
    Ok((value, deriv))
}

/// De Casteljau evaluation of a polynomial in Bernstein form.
fn de_casteljau<T>(coeffs: &[T], t: T) -> T
where
    T: FlowScalar,
{
    let one_minus = T::constant(1.0) - t;
    let mut work: Vec<T> = coeffs.to_vec();
    let mut n = work.len();
    while n > 1 {
        for i in 0..n - 1 {
            work[i] = work[i] * one_minus + work[i + 1] * t;
        }
        n -= 1;
    }
    work[0]
}

/// Scalar abstraction so the flow evaluates identically for f64 and duals.
trait FlowScalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Mul<f64, Output = Self>
{
    fn constant(x: f64) -> Self;
    fn value(self) -> f64;
    fn ln_s(self) -> Self;
    fn softplus_s(self) -> Self;
    fn sigmoid_s(self) -> Self;
}

impl FlowScalar for f64 {
    #[inline]
    fn constant(x: f64) -> Self {
        x
    }
    #[inline]
    fn value(self) -> f64 {
        self
    }
    #[inline]
    fn ln_s(self) -> Self {
        self.ln()
    }
    #[inline]
    fn softplus_s(self) -> Self {
        softplus(self)
    }
    #[inline]
    fn sigmoid_s(self) -> Self {
        crate::math::sigmoid(self)
    }
}

impl FlowScalar for Dual2 {
    #[inline]
    fn constant(x: f64) -> Self {
        Dual2::constant(x)
    }
    #[inline]
    fn value(self) -> f64 {
        self.v
    }
    #[inline]
    fn ln_s(self) -> Self {
        self.ln()
    }
    #[inline]
    fn softplus_s(self) -> Self {
        self.softplus()
    }
    #[inline]
    fn sigmoid_s(self) -> Self {
        self.sigmoid()
    }
}

struct FlowEval<T> {
    z: T,
    log_det: T,
    saturated: bool,
}

/// The full flow in one generic pass. `y` and `raw` may each carry dual parts.
fn forward_generic<T: FlowScalar>(y: T, raw: &[T], order: usize) -> FlowEval<T> {
    let a1 = raw[0].softplus_s();
    let b1 = raw[1];
    let a2 = raw[2 + order + 1].softplus_s();
    let b2 = raw[2 + order + 2];

    let mut saturated = false;
    let mut ytil = (a1 * y - b1).sigmoid_s();
    if ytil.value() < EPS_SIGMOID {
        ytil = T::constant(EPS_SIGMOID);
        saturated = true;
    } else if ytil.value() > 1.0 - EPS_SIGMOID {
        ytil = T::constant(1.0 - EPS_SIGMOID);
        saturated = true;
    }

    // cumulative-softplus theta'
    let mut theta: Vec<T> = Vec::with_capacity(order + 1);
    theta.push(raw[2]);
    for i in 1..=order {
        let prev = *theta.last().unwrap();
        theta.push(prev + raw[2 + i].softplus_s());
    }

    let h = de_casteljau(&theta, ytil);
    let diffs: Vec<T> = theta.windows(2).map(|w| w[1] - w[0]).collect();
    let h_deriv = de_casteljau(&diffs, ytil) * (order as f64);

    let z = a2 * h - b2;
    let one_minus = T::constant(1.0) - ytil;
    let log_det = a2.ln_s() + h_deriv.ln_s() + (ytil * one_minus).ln_s() + a1.ln_s();
    FlowEval { z, log_det, saturated }
}

#[inline]
fn nll_generic<T: FlowScalar>(y: T, raw: &[T], order: usize) -> (T, bool) {
    let ev = forward_generic(y, raw, order);
    let nll = ev.z * ev.z * 0.5 + T::constant(0.5 * LN_2PI) - ev.log_det;
    (nll, ev.saturated)
}

/// Saturation and clamping counters, updated atomically so the head stays
/// shareable across threads.
#[derive(Debug, Default)]
pub struct FlowDiagnostics {
    /// Rows whose sigmoid stage hit the EPS_SIGMOID clamp.
    pub saturation_events: AtomicU64,
    /// Base-space sample draws clamped back into the attainable interval.
    pub clamped_samples: AtomicU64,
}

impl FlowDiagnostics {
    pub fn saturation_count(&self) -> u64 {
        self.saturation_events.load(Ordering::Relaxed)
    }
    pub fn clamped_sample_count(&self) -> u64 {
        self.clamped_samples.load(Ordering::Relaxed)
    }
}

/// Configuration for the unconditional (offset) fit.
#[derive(Debug, Clone)]
pub struct FlowFitOptions {
    pub max_iters: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for FlowFitOptions {
    fn default() -> Self {
        FlowFitOptions { max_iters: 300, restarts: 3, seed: 0 }
    }
}

/// Bernstein-flow distribution head of a fixed order M (K = M + 5 raw params).
#[derive(Debug)]
pub struct BernsteinFlowHead {
    order: usize,
    fit: FlowFitOptions,
    pub diagnostics: FlowDiagnostics,
}

impl BernsteinFlowHead {
    pub fn new(order: usize) -> Result<Self> {
        if order < 1 {
            return Err(Error::invalid_parameter(format!(
                "Bernstein order must be >= 1, got {order}"
            )));
        }
        Ok(BernsteinFlowHead {
            order,
            fit: FlowFitOptions::default(),
            diagnostics: FlowDiagnostics::default(),
        })
    }

    pub fn with_fit_options(mut self, fit: FlowFitOptions) -> Self {
        self.fit = fit;
        self
    }

    pub fn order(&self) -> usize {
        self.order
    }

    fn check_len(&self, raw: &[f64]) {
        assert_eq!(
            raw.len(),
            self.order + 5,
            "raw parameter vector has length {}, expected order + 5 = {}",
            raw.len(),
            self.order + 5
        );
    }

    /// Push `y` through the flow: returns (z, log_det).
    pub fn forward(&self, y: f64, raw: &[f64]) -> (f64, f64) {
        self.check_len(raw);
        let ev = forward_generic(y, raw, self.order);
        if ev.saturated {
            self.diagnostics.saturation_events.fetch_add(1, Ordering::Relaxed);
        }
        (ev.z, ev.log_det)
    }

    /// Attainable open interval of base-space values (the flow image is bounded).
    pub fn attainable_z(&self, raw: &[f64]) -> (f64, f64) {
        self.check_len(raw);
        let c = constrain(raw);
        (
            c.a2 * c.theta[0] - c.b2,
            c.a2 * c.theta[self.order] - c.b2,
        )
    }

    /// Attainable open interval of CDF levels.
    pub fn attainable_prob(&self, raw: &[f64]) -> (f64, f64) {
        let (zl, zh) = self.attainable_z(raw);
        (normal_cdf(zl), normal_cdf(zh))
    }

    /// Invert the flow: find y with forward(y) = z.
    ///
    /// The affine and sigmoid stages invert in closed form; the Bernstein
    /// stage is bisected on [0,1] until |h(ytil) - target| <= INVERT_TOL.
    pub fn invert(&self, z: f64, raw: &[f64]) -> Result<f64> {
        self.check_len(raw);
        let c = constrain(raw);
        let (z_lo, z_hi) = (c.a2 * c.theta[0] - c.b2, c.a2 * c.theta[self.order] - c.b2);
        if !(z > z_lo && z < z_hi) {
            return Err(Error::OutOfSupport { lower: z_lo, upper: z_hi });
        }
        let target = (z + c.b2) / c.a2;
        let mut lo = 0.0f64;
        let mut hi = 1.0f64;
        // 64 halvings reach f64 granularity; the tolerance check can stop earlier
        let mut mid = 0.5;
        for _ in 0..64 {
            mid = 0.5 * (lo + hi);
            let hv = de_casteljau(&c.theta, mid);
            if (hv - target).abs() <= INVERT_TOL && (hi - lo) < 1e-12 {
                break;
            }
            if hv < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok((logit(mid) + c.b1) / c.a1)
    }

    /// Unconditional maximum-likelihood fit: standard-normal initialization
    /// (seeded), full-batch steepest descent with backtracking line search.
    /// The returned parameters never score worse than their initialization.
    pub fn fit_unconditional(&self, y: &[f64]) -> Result<Vec<f64>> {
        fit_unconditional(y, self.order, &self.fit)
    }
}

fn mean_nll_value(y: &[f64], raw: &[f64], order: usize) -> f64 {
    let total: f64 = y
        .par_iter()
        .map(|&yi| nll_generic(yi, raw, order).0)
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    total / y.len() as f64
}

/// Mean NLL plus its gradient w.r.t. every raw parameter (one dual pass per
/// parameter per row, reduced in row order).
fn mean_nll_grad(y: &[f64], raw: &[f64], order: usize) -> (f64, Vec<f64>) {
    let k = raw.len();
    let per_row: Vec<(f64, Vec<f64>)> = y
        .par_iter()
        .map(|&yi| {
            let mut g = vec![0.0; k];
            let mut value = 0.0;
            for j in 0..k {
                let duals: Vec<Dual2> = raw
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| if i == j { Dual2::variable(v) } else { Dual2::constant(v) })
                    .collect();
                let (nll, _) = nll_generic(Dual2::constant(yi), &duals, order);
                g[j] = nll.d1;
                if j == 0 {
                    value = nll.v;
                }
            }
            (value, g)
        })
        .collect();
    let n = y.len() as f64;
    let mut grad = vec![0.0; k];
    let mut value = 0.0;
    for (v, g) in &per_row {
        value += v;
        for (acc, gi) in grad.iter_mut().zip(g) {
            *acc += gi;
        }
    }
    for g in grad.iter_mut() {
        *g /= n;
    }
    (value / n, grad)
}

/// Standalone unconditional fit (used directly by order selection).
pub fn fit_unconditional(y: &[f64], order: usize, opts: &FlowFitOptions) -> Result<Vec<f64>> {
    let k = order + 5;
    if y.len() < k {
        return Err(Error::invalid_input(format!(
            "unconditional flow fit needs at least {k} observations for order {order}, got {}",
            y.len()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let inits: Vec<Vec<f64>> = (0..opts.restarts.max(1))
        .map(|_| (0..k).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
        .collect();

    let runs: Vec<Option<(f64, Vec<f64>)>> = inits
        .into_iter()
        .map(|init| descend(y, init, order, opts.max_iters))
        .collect();

    let best = runs
        .into_iter()
        .flatten()
        .min_by(|a, b| a.0.total_cmp(&b.0));
    match best {
        Some((_, raw)) => Ok(raw),
        None => Err(Error::invalid_input(format!(
            "flow NLL was non-finite at every tried step; a smaller order than {order} may help"
        ))),
    }
}

fn descend(y: &[f64], mut raw: Vec<f64>, order: usize, max_iters: usize) -> Option<(f64, Vec<f64>)> {
    let mut current = mean_nll_value(y, &raw, order);
    if !current.is_finite() {
        return None;
    }
    let mut step = 0.25;
    for _ in 0..max_iters {
        let (value, grad) = mean_nll_grad(y, &raw, order);
        current = value;
        let gnorm_sq: f64 = grad.iter().map(|g| g * g).sum();
        if !gnorm_sq.is_finite() {
            break;
        }
        if gnorm_sq.sqrt() < 1e-9 {
            break;
        }
        // backtracking line search with an Armijo-style decrease requirement
        let mut t = step;
        let mut accepted = false;
        while t > 1e-14 {
            let cand: Vec<f64> = raw.iter().zip(&grad).map(|(r, g)| r - t * g).collect();
            let cand_nll = mean_nll_value(y, &cand, order);
            if cand_nll.is_finite() && cand_nll <= current - 1e-4 * t * gnorm_sq {
                raw = cand;
                current = cand_nll;
                step = (t * 2.0).min(4.0);
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    current.is_finite().then_some((current, raw))
}

/// Outcome of the order grid search.
#[derive(Debug, Clone)]
pub struct OrderSelection {
    pub order: usize,
    pub raw: Vec<f64>,
    pub mean_nll: f64,
    /// (order, mean NLL or None when the fit failed) for every grid point.
    pub grid_nll: Vec<(usize, Option<f64>)>,
}

/// Fit every order in the grid unconditionally and keep the lowest mean NLL;
/// exact ties resolve toward the smaller order. Failed grid points are
/// skipped; if all fail, the last error propagates.
pub fn select_order(y: &[f64], grid: &[usize], opts: &FlowFitOptions) -> Result<OrderSelection> {
    if grid.is_empty() {
        return Err(Error::invalid_input("order grid must not be empty"));
    }
    let mut sorted: Vec<usize> = grid.to_vec();
    sorted.sort_unstable();
    sorted.dedup();

    let mut grid_nll = Vec::with_capacity(sorted.len());
    let mut best: Option<(f64, usize, Vec<f64>)> = None;
    let mut last_err = None;
    for &m in &sorted {
        match fit_unconditional(y, m, opts) {
            Ok(raw) => {
                let nll = mean_nll_value(y, &raw, m);
                grid_nll.push((m, Some(nll)));
                if best.as_ref().map_or(true, |(b, _, _)| nll < *b) {
                    best = Some((nll, m, raw));
                }
            }
            Err(e) => {
                grid_nll.push((m, None));
                last_err = Some(e);
            }
        }
    }
    match best {
        Some((mean_nll, order, raw)) => Ok(OrderSelection { order, raw, mean_nll, grid_nll }),
        None => Err(last_err.unwrap_or_else(|| Error::invalid_input("all grid orders failed"))),
    }
}

impl DistributionHead for BernsteinFlowHead {
    fn n_params(&self) -> usize {
        self.order + 5
    }

    fn descriptor(&self) -> HeadDescriptor {
        HeadDescriptor::BernsteinFlow { order: self.order }
    }

    fn nll(&self, y: f64, eta: &[f64]) -> f64 {
        self.check_len(eta);
        let (nll, saturated) = nll_generic(y, eta, self.order);
        if saturated {
            self.diagnostics.saturation_events.fetch_add(1, Ordering::Relaxed);
        }
        nll
    }

    fn grad_hess(&self, y: f64, eta: &[f64], grad: &mut [f64], hess: &mut [f64]) {
        self.check_len(eta);
        let k = self.n_params();
        for j in 0..k {
            let duals: Vec<Dual2> = eta
                .iter()
                .enumerate()
                .map(|(i, &v)| if i == j { Dual2::variable(v) } else { Dual2::constant(v) })
                .collect();
            let (nll, _) = nll_generic(Dual2::constant(y), &duals, self.order);
            grad[j] = nll.d1;
            hess[j] = nll.d2;
        }
    }

    fn cdf(&self, y: f64, eta: &[f64]) -> f64 {
        let (z, _) = self.forward(y, eta);
        normal_cdf(z)
    }

    fn pdf(&self, y: f64, eta: &[f64]) -> f64 {
        (-self.nll(y, eta)).exp()
    }

    fn quantile(&self, alpha: f64, eta: &[f64]) -> Result<f64> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::invalid_parameter(format!(
                "quantile level must be in (0,1), got {alpha}"
            )));
        }
        self.invert(normal_quantile(alpha), eta)
    }

    fn sample(&self, eta: &[f64], n: usize, seed: u64) -> Vec<f64> {
        self.check_len(eta);
        let (z_lo, z_hi) = self.attainable_z(eta);
        let shift = SAMPLE_CLAMP_SHIFT.min(0.25 * (z_hi - z_lo));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let mut z: f64 = rng.sample(StandardNormal);
                if z <= z_lo || z >= z_hi {
                    z = z.clamp(z_lo + shift, z_hi - shift);
                    self.diagnostics.clamped_samples.fetch_add(1, Ordering::Relaxed);
                }
                self.invert(z, eta).expect("clamped draw must be invertible")
            })
            .collect()
    }

    fn unconditional_fit(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.fit_unconditional(y)
    }
}

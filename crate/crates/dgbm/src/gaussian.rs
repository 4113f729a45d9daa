//! Gaussian head: identity link for the location, log link for the scale.
//!
//! Raw scores are eta = (mu, ln sigma). All derivatives are closed form:
//!
//!   NLL          = 1/2 ln(2 pi) + ln sigma + (y - mu)^2 / (2 sigma^2)
//!   d/d mu       = (mu - y) / sigma^2        d2 = 1 / sigma^2
//!   d/d eta2     = 1 - z^2                   d2 = 2 z^2,   z = (y - mu)/sigma
//!
//! The scale is floored at `SIGMA_FLOOR` inside every evaluation so constant
//! responses cannot produce infinities.

use crate::error::{Error, Result};
use crate::head::{DistributionHead, HeadDescriptor};
use crate::math::{mean, normal_cdf, normal_pdf, normal_quantile, variance_mle, INV_SQRT_PI, LN_2PI};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub const SIGMA_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, Default)]
pub struct GaussianHead;

#[inline]
fn mu_sigma(eta: &[f64]) -> (f64, f64) {
    (eta[0], eta[1].exp().max(SIGMA_FLOOR))
}

impl DistributionHead for GaussianHead {
    fn n_params(&self) -> usize {
        2
    }

    fn descriptor(&self) -> HeadDescriptor {
        HeadDescriptor::Gaussian
    }

    fn nll(&self, y: f64, eta: &[f64]) -> f64 {
        let (mu, sigma) = mu_sigma(eta);
        let z = (y - mu) / sigma;
        0.5 * LN_2PI + sigma.ln() + 0.5 * z * z
    }

    fn grad_hess(&self, y: f64, eta: &[f64], grad: &mut [f64], hess: &mut [f64]) {
        let (mu, sigma) = mu_sigma(eta);
        let z = (y - mu) / sigma;
        grad[0] = (mu - y) / (sigma * sigma);
        hess[0] = 1.0 / (sigma * sigma);
        grad[1] = 1.0 - z * z;
        hess[1] = 2.0 * z * z;
    }

    fn cdf(&self, y: f64, eta: &[f64]) -> f64 {
        let (mu, sigma) = mu_sigma(eta);
        normal_cdf((y - mu) / sigma)
    }

    fn pdf(&self, y: f64, eta: &[f64]) -> f64 {
        let (mu, sigma) = mu_sigma(eta);
        normal_pdf((y - mu) / sigma) / sigma
    }

    fn quantile(&self, alpha: f64, eta: &[f64]) -> Result<f64> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::invalid_parameter(format!(
                "quantile level must be in (0,1), got {alpha}"
            )));
        }
        let (mu, sigma) = mu_sigma(eta);
        Ok(mu + sigma * normal_quantile(alpha))
    }

    fn sample(&self, eta: &[f64], n: usize, seed: u64) -> Vec<f64> {
        let (mu, sigma) = mu_sigma(eta);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let z: f64 = rng.sample(StandardNormal);
                mu + sigma * z
            })
            .collect()
    }

    fn unconditional_fit(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.is_empty() {
            return Err(Error::invalid_input("cannot fit offsets on an empty response"));
        }
        let mu = mean(y);
        let sigma = variance_mle(y).sqrt().max(SIGMA_FLOOR);
        Ok(vec![mu, sigma.ln()])
    }
}

/// Closed-form CRPS of a Gaussian forecast:
/// sigma * [ z (2 Phi(z) - 1) + 2 phi(z) - 1/sqrt(pi) ],  z = (y - mu)/sigma.
pub fn crps_closed_form(y: f64, mu: f64, sigma: f64) -> f64 {
    let sigma = sigma.max(SIGMA_FLOOR);
    let z = (y - mu) / sigma;
    sigma * (z * (2.0 * normal_cdf(z) - 1.0) + 2.0 * normal_pdf(z) - INV_SQRT_PI)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEAD: GaussianHead = GaussianHead;

    #[test]
    fn nll_known_values() {
        assert!((HEAD.nll(0.0, &[0.0, 0.0]) - 0.91894).abs() < 1e-5);
        assert!((HEAD.nll(1.0, &[1.0, 2f64.ln()]) - 1.61209).abs() < 1e-5);
        assert!((HEAD.nll(2.0, &[0.0, 0.0]) - 2.91894).abs() < 1e-5);
    }

    #[test]
    fn grad_hess_known_values() {
        let mut g = [0.0; 2];
        let mut h = [0.0; 2];
        HEAD.grad_hess(1.0, &[0.0, 0.0], &mut g, &mut h);
        assert_eq!(g, [-1.0, 0.0]);
        assert_eq!(h, [1.0, 2.0]);

        // residual-zero case: grad mu = 0, grad eta2 = 1
        HEAD.grad_hess(3.0, &[3.0, 0.7], &mut g, &mut h);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[1], 1.0);
    }

    #[test]
    fn grad_hess_matches_finite_differences() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let eps = 1e-5;
        for _ in 0..1000 {
            let y: f64 = rng.gen_range(-5.0..5.0);
            let eta = [rng.gen_range(-4.0..4.0), rng.gen_range(-2.0..2.0)];
            let mut g = [0.0; 2];
            let mut h = [0.0; 2];
            HEAD.grad_hess(y, &eta, &mut g, &mut h);
            for k in 0..2 {
                let mut ep = eta;
                let mut em = eta;
                ep[k] += eps;
                em[k] -= eps;
                let fd_g = (HEAD.nll(y, &ep) - HEAD.nll(y, &em)) / (2.0 * eps);
                let fd_h = (HEAD.nll(y, &ep) - 2.0 * HEAD.nll(y, &eta) + HEAD.nll(y, &em)) / (eps * eps);
                assert!(
                    (g[k] - fd_g).abs() <= 1e-6 * (1.0 + fd_g.abs()),
                    "grad k={k} analytic={} fd={fd_g}",
                    g[k]
                );
                assert!(
                    (h[k] - fd_h).abs() <= 1e-3 * (1.0 + fd_h.abs()),
                    "hess k={k} analytic={} fd={fd_h}",
                    h[k]
                );
            }
        }
    }

    #[test]
    fn quantile_and_cdf() {
        assert_eq!(HEAD.quantile(0.5, &[3.2, 0.4]).unwrap(), 3.2);
        let q95 = HEAD.quantile(0.95, &[0.0, 0.0]).unwrap();
        assert!((q95 - 1.6449).abs() < 1e-4);
        for i in 1..=19 {
            let a = i as f64 * 0.05;
            let q = HEAD.quantile(a, &[1.0, 0.3]).unwrap();
            assert!((HEAD.cdf(q, &[1.0, 0.3]) - a).abs() < 1e-10);
        }
        assert!(HEAD.quantile(0.0, &[0.0, 0.0]).is_err());
        assert!(HEAD.quantile(1.0, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn cdf_strictly_increasing() {
        let eta = [0.5, -0.2];
        let mut prev = HEAD.cdf(-6.0, &eta);
        let mut y = -6.0 + 0.25;
        while y <= 6.0 {
            let c = HEAD.cdf(y, &eta);
            assert!(c > prev);
            prev = c;
            y += 0.25;
        }
    }

    #[test]
    fn sampling_is_seed_reproducible() {
        let a = HEAD.sample(&[1.0, 0.5], 100, 7);
        let b = HEAD.sample(&[1.0, 0.5], 100, 7);
        let c = HEAD.sample(&[1.0, 0.5], 100, 8);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn unconditional_fit_closed_form() {
        let off = HEAD.unconditional_fit(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(off[0], 2.0);
        // MLE sigma divides by n: sqrt(2/3), log link
        assert!((off[1] - (2.0f64 / 3.0).sqrt().ln()).abs() < 1e-12);
        assert!((off[1] - (-0.2027)).abs() < 1e-4);

        // constant response floors the scale
        let off = HEAD.unconditional_fit(&[4.0, 4.0, 4.0]).unwrap();
        assert_eq!(off[1], SIGMA_FLOOR.ln());
    }

    /// The MLE offsets must beat every +-10% perturbation in mean NLL.
    #[test]
    fn offsets_minimize_mean_nll() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let y: Vec<f64> = (0..500).map(|_| 3.0 + 1.7 * rng.sample::<f64, _>(StandardNormal)).collect();
        let off = HEAD.unconditional_fit(&y).unwrap();
        let mean_nll = |eta: &[f64]| y.iter().map(|&v| HEAD.nll(v, eta)).sum::<f64>() / y.len() as f64;
        let base = mean_nll(&off);
        for dm in [-0.1, 0.1] {
            for ds in [-0.1, 0.0, 0.1] {
                if dm == 0.0 && ds == 0.0 {
                    continue;
                }
                let pert = [off[0] * (1.0 + dm), off[1] + ds];
                assert!(mean_nll(&pert) > base);
            }
        }
    }

    /// Numeric-integration oracle for the closed CRPS form:
    /// CRPS = integral (Phi((t-mu)/sigma) - 1{y<=t})^2 dt,
    /// split at the indicator jump so each piece is smooth.
    fn crps_by_quadrature(y: f64, mu: f64, sigma: f64) -> f64 {
        let lo = (mu - 12.0 * sigma).min(y - 12.0 * sigma);
        let hi = (mu + 12.0 * sigma).max(y + 12.0 * sigma);
        let midpoint_piece = |a: f64, b: f64, ind: f64| -> f64 {
            let n = 200_000;
            let dt = (b - a) / n as f64;
            (0..n)
                .map(|i| {
                    let t = a + (i as f64 + 0.5) * dt;
                    let f = normal_cdf((t - mu) / sigma);
                    (f - ind) * (f - ind) * dt
                })
                .sum()
        };
        midpoint_piece(lo, y, 0.0) + midpoint_piece(y, hi, 1.0)
    }

    #[test]
    fn crps_closed_form_matches_quadrature() {
        // at the center: 2 phi(0) - 1/sqrt(pi)
        let center = crps_closed_form(0.0, 0.0, 1.0);
        assert!((center - 0.23370).abs() < 1e-4);
        assert!((center - crps_by_quadrature(0.0, 0.0, 1.0)).abs() < 1e-6);

        // far tail: approximately |y - mu| - 1/sqrt(pi)
        let tail = crps_closed_form(10.0, 0.0, 1.0);
        assert!((tail - (10.0 - INV_SQRT_PI)).abs() < 1e-6);
        assert!((tail - crps_by_quadrature(10.0, 0.0, 1.0)).abs() < 1e-5);

        // a skewed case
        let c = crps_closed_form(1.3, -0.4, 2.1);
        assert!((c - crps_by_quadrature(1.3, -0.4, 2.1)).abs() < 1e-6);
    }

    #[test]
    fn crps_positive_homogeneity() {
        for c in [0.5, 2.0, 117.0] {
            let base = crps_closed_form(1.2, 0.3, 0.8);
            let scaled = crps_closed_form(c * 1.2, c * 0.3, c * 0.8);
            assert!((scaled - c * base).abs() < 1e-10 * c);
        }
    }
}

//! Scalar numeric helpers: stable softplus/sigmoid, standard-normal functions,
//! and the linear-interpolation percentile rule used throughout reporting.

use statrs::function::erf;

pub const LN_2PI: f64 = 1.837877066409345483560659472811;
pub const SQRT_2: f64 = std::f64::consts::SQRT_2;
pub const INV_SQRT_PI: f64 = 0.564189583547756286948079451561;

/// softplus(x) = ln(1 + e^x), stable for large |x|.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Inverse of softplus on (0, inf): x = ln(e^y - 1), stable for large y.
#[inline]
pub fn softplus_inv(y: f64) -> f64 {
    debug_assert!(y > 0.0);
    // ln(e^y - 1) = y + ln(1 - e^-y)
    y + (-((-y).exp())).ln_1p()
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Standard-normal density.
#[inline]
pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Standard-normal CDF via erfc (accurate in both tails).
#[inline]
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erf::erfc(-z / SQRT_2)
}

/// Standard-normal quantile. One Newton step on top of erfc_inv keeps the
/// cdf(quantile(p)) round trip at machine precision.
pub fn normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "quantile level must be in (0,1)");
    let mut x = -SQRT_2 * erf::erfc_inv(2.0 * p);
    let d = normal_pdf(x);
    if d > 1e-300 {
        x -= (normal_cdf(x) - p) / d;
    }
    x
}

/// Percentile by linear interpolation between order statistics.
///
/// `q` in [0,1]; `sorted` must be ascending and non-empty.
pub fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    assert!((0.0..=1.0).contains(&q));
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = q * (n - 1) as f64;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 >= n {
        sorted[n - 1]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

/// Percentile of an unsorted slice (copies and sorts).
pub fn percentile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    percentile_sorted(&v, q)
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Population variance (divides by n, matching the Gaussian MLE).
pub fn variance_mle(values: &[f64]) -> f64 {
    let m = mean(values);
    values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64
}

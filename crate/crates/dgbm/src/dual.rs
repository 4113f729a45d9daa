//! Second-order forward-mode dual numbers.
//!
//! A [`Dual2`] carries a value together with the first and second derivative
//! with respect to a single seed variable. Pushing one through a scalar
//! computation yields f, f' and f'' exactly (to machine precision), which is
//! how the flow head obtains per-parameter gradients and diagonal hessians.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Value plus first and second derivative w.r.t. one variable.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual2 {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Dual2 {
    /// A constant: zero derivatives.
    #[inline]
    pub fn constant(v: f64) -> Self {
        Dual2 { v, d1: 0.0, d2: 0.0 }
    }

    /// The seed variable: derivative one.
    #[inline]
    pub fn variable(v: f64) -> Self {
        Dual2 { v, d1: 1.0, d2: 0.0 }
    }

    /// Apply a scalar function given its value and first two derivatives at `self.v`.
    #[inline]
    fn chain(self, f: f64, df: f64, d2f: f64) -> Self {
        Dual2 {
            v: f,
            d1: df * self.d1,
            d2: d2f * self.d1 * self.d1 + df * self.d2,
        }
    }

    #[inline]
    pub fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e, e)
    }

    #[inline]
    pub fn ln(self) -> Self {
        let inv = 1.0 / self.v;
        self.chain(self.v.ln(), inv, -inv * inv)
    }

    /// ln(1 + e^x) with numerically stable branches.
    #[inline]
    pub fn softplus(self) -> Self {
        let s = crate::math::sigmoid(self.v);
        self.chain(crate::math::softplus(self.v), s, s * (1.0 - s))
    }

    /// Logistic sigmoid.
    #[inline]
    pub fn sigmoid(self) -> Self {
        let s = crate::math::sigmoid(self.v);
        self.chain(s, s * (1.0 - s), s * (1.0 - s) * (1.0 - 2.0 * s))
    }

    #[inline]
    pub fn sq(self) -> Self {
        self * self
    }
}

impl Add for Dual2 {
    type Output = Dual2;
    #[inline]
    fn add(self, rhs: Dual2) -> Dual2 {
        Dual2 {
            v: self.v + rhs.v,
            d1: self.d1 + rhs.d1,
            d2: self.d2 + rhs.d2,
        }
    }
}

impl Sub for Dual2 {
    type Output = Dual2;
    #[inline]
    fn sub(self, rhs: Dual2) -> Dual2 {
        Dual2 {
            v: self.v - rhs.v,
            d1: self.d1 - rhs.d1,
            d2: self.d2 - rhs.d2,
        }
    }
}

impl Mul for Dual2 {
    type Output = Dual2;
    #[inline]
    fn mul(self, rhs: Dual2) -> Dual2 {
        Dual2 {
            v: self.v * rhs.v,
            d1: self.d1 * rhs.v + self.v * rhs.d1,
            d2: self.d2 * rhs.v + 2.0 * self.d1 * rhs.d1 + self.v * rhs.d2,
        }
    }
}

impl Div for Dual2 {
    type Output = Dual2;
    #[inline]
    fn div(self, rhs: Dual2) -> Dual2 {
        let inv = 1.0 / rhs.v;
        let v = self.v * inv;
        let d1 = (self.d1 - v * rhs.d1) * inv;
        let d2 = (self.d2 - 2.0 * d1 * rhs.d1 - v * rhs.d2) * inv;
        Dual2 { v, d1, d2 }
    }
}

impl Neg for Dual2 {
    type Output = Dual2;
    #[inline]
    fn neg(self) -> Dual2 {
        Dual2 { v: -self.v, d1: -self.d1, d2: -self.d2 }
    }
}

impl Mul<f64> for Dual2 {
    type Output = Dual2;
    #[inline]
    fn mul(self, rhs: f64) -> Dual2 {
        Dual2 { v: self.v * rhs, d1: self.d1 * rhs, d2: self.d2 * rhs }
    }
}

impl Add<f64> for Dual2 {
    type Output = Dual2;
    #[inline]
    fn add(self, rhs: f64) -> Dual2 {
        Dual2 { v: self.v + rhs, ..self }
    }
}

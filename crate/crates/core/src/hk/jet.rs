//! Second-order jets for exact differentiation of closed-form curves.
//!
//! A [`Jet`] carries a value together with its first and second
//! derivatives with respect to a single parameter. Arithmetic follows the
//! product and chain rules, so evaluating a closed-form expression on the
//! jet of the parameter at `t = 0` yields its derivatives there to
//! rounding accuracy. The [`Scalar`] trait lets the same closed forms run
//! on plain `f64` and on jets.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Numbers a closed-form family can be evaluated on.
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// A constant.
    fn cst(v: f64) -> Self;
    /// The value part.
    fn value(&self) -> f64;
    /// Square root.
    fn sqrt(self) -> Self;
    /// Real power of a positive number.
    fn powf(self, p: f64) -> Self;
}

impl Scalar for f64 {
    fn cst(v: f64) -> Self {
        v
    }
    fn value(&self) -> f64 {
        *self
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn powf(self, p: f64) -> Self {
        f64::powf(self, p)
    }
}

/// Value, first derivative and second derivative.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    /// `f`.
    pub v: f64,
    /// `f'`.
    pub d1: f64,
    /// `f''`.
    pub d2: f64,
}

impl Jet {
    /// The jet of the parameter itself at `t0`.
    pub fn param(t0: f64) -> Self {
        Jet {
            v: t0,
            d1: 1.0,
            d2: 0.0,
        }
    }

    /// True when all parts are finite.
    pub fn is_finite(&self) -> bool {
        self.v.is_finite() && self.d1.is_finite() && self.d2.is_finite()
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        Jet {
            v: self.v + o.v,
            d1: self.d1 + o.d1,
            d2: self.d2 + o.d2,
        }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        Jet {
            v: self.v - o.v,
            d1: self.d1 - o.d1,
            d2: self.d2 - o.d2,
        }
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        Jet {
            v: -self.v,
            d1: -self.d1,
            d2: -self.d2,
        }
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        Jet {
            v: self.v * o.v,
            d1: self.d1 * o.v + self.v * o.d1,
            d2: self.d2 * o.v + 2.0 * self.d1 * o.d1 + self.v * o.d2,
        }
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, o: Jet) -> Jet {
        self * o.powf(-1.0)
    }
}

impl Scalar for Jet {
    fn cst(v: f64) -> Self {
        Jet {
            v,
            d1: 0.0,
            d2: 0.0,
        }
    }
    fn value(&self) -> f64 {
        self.v
    }
    fn sqrt(self) -> Self {
        self.powf(0.5)
    }
    /// Chain rule for `g^p`; non-finite when `g` vanishes and `p < 2`.
    fn powf(self, p: f64) -> Self {
        let g = self.v;
        let h0 = g.powf(p);
        let h1 = p * g.powf(p - 1.0);
        let h2 = p * (p - 1.0) * g.powf(p - 2.0);
        Jet {
            v: h0,
            d1: h1 * self.d1,
            d2: h2 * self.d1 * self.d1 + h1 * self.d2,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_of_elementary_expressions() {
        let t = Jet::param(0.5);
        let f = (Jet::cst(1.0) + t * t).sqrt() / (Jet::cst(2.0) - t);
        // f = sqrt(1+t^2)/(2-t); check against central differences.
        let g = |t: f64| (1.0 + t * t).sqrt() / (2.0 - t);
        let h = 1e-4;
        let d1 = (g(0.5 + h) - g(0.5 - h)) / (2.0 * h);
        let d2 = (g(0.5 + h) - 2.0 * g(0.5) + g(0.5 - h)) / (h * h);
        assert!((f.v - g(0.5)).abs() < 1e-15);
        assert!((f.d1 - d1).abs() < 1e-7);
        assert!((f.d2 - d2).abs() < 1e-5);
    }

    #[test]
    fn cube_root_jet() {
        let t = Jet::param(0.0);
        let c = (Jet::cst(1.0) + t).powf(1.0 / 3.0);
        assert!((c.d1 - 1.0 / 3.0).abs() < 1e-15);
        assert!((c.d2 + 2.0 / 9.0).abs() < 1e-15);
    }
}

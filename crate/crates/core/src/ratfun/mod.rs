//! Exact multivariate rational functions over Q.
//!
//! A [`RatFun`] is a pair of polynomials in the fixed variable list
//! [`Var`], kept in canonical form: numerator and denominator are coprime
//! and the denominator has leading coefficient one in graded-lex order.
//! Two rational functions are therefore equal as functions exactly when
//! they are equal as values, which is what every "holds identically" check
//! in this crate relies on.
//!
//! All arithmetic is checked. Intermediate polynomials whose total degree
//! exceeds [`degree_limit`] are rejected with [`RatFunError::DegreeLimit`]
//! instead of silently blowing up.
//!
//! ```
//! use alh_lab::ratfun::{RatFun, Var};
//! let f = RatFun::parse("(x^2 - 1)/(x - 1)").unwrap();
//! assert_eq!(f, RatFun::parse("x + 1").unwrap());
//! let d = RatFun::parse("x^-3").unwrap().derive(Var::X).unwrap();
//! assert_eq!(d, RatFun::parse("-3*x^-4").unwrap());
//! ```

mod gcd;
mod parse;
mod poly;
mod var;

pub use gcd::{content_in, poly_gcd, pseudo_rem};
pub use poly::{rat_to_f64, Monomial, Poly};
pub use var::{Var, NVARS};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::fmt;
use std::sync::atomic::{AtomicU32, Ordering};
use thiserror::Error;

/// Default bound on the total degree of any intermediate polynomial.
pub const DEFAULT_DEGREE_LIMIT: u32 = 64;

static DEGREE_LIMIT: AtomicU32 = AtomicU32::new(DEFAULT_DEGREE_LIMIT);

/// Current process-wide degree guardrail.
pub fn degree_limit() -> u32 {
    DEGREE_LIMIT.load(Ordering::Relaxed)
}

/// Change the process-wide degree guardrail, returning the previous value.
pub fn set_degree_limit(limit: u32) -> u32 {
    DEGREE_LIMIT.swap(limit, Ordering::Relaxed)
}

/// Errors from rational-function arithmetic.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum RatFunError {
    #[error("division by the zero rational function")]
    DivisionByZero,
    #[error("pole: denominator {denominator} vanishes at the evaluation point")]
    Pole { denominator: String },
    #[error("intermediate polynomial of total degree {degree} exceeds the limit {limit}")]
    DegreeLimit { degree: u32, limit: u32 },
    #[error("variable {0} has no value at the evaluation point")]
    Unbound(Var),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{0}")]
    Domain(String),
}

/// Shorthand result type.
pub type RfResult<T> = Result<T, RatFunError>;

/// Build a rational number `n/d`.
pub fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Build an integer rational.
pub fn qi(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn check_degree(p: &Poly) -> RfResult<()> {
    let limit = degree_limit();
    let degree = p.total_degree();
    if degree > limit {
        Err(RatFunError::DegreeLimit { degree, limit })
    } else {
        Ok(())
    }
}

/// A canonical quotient of coprime polynomials.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RatFun {
    num: Poly,
    den: Poly,
}

impl Default for RatFun {
    fn default() -> Self {
        RatFun::zero()
    }
}

/// A point at which to evaluate: exact rationals or floats per variable.
#[derive(Clone, Debug, Default)]
pub struct Point {
    exact: [Option<BigRational>; NVARS],
}

impl Point {
    /// Empty point.
    pub fn new() -> Self {
        Point::default()
    }

    /// Bind a variable.
    pub fn with(mut self, v: Var, value: BigRational) -> Self {
        self.exact[v.index()] = Some(value);
        self
    }

    /// Bind a variable (in place).
    pub fn set(&mut self, v: Var, value: BigRational) {
        self.exact[v.index()] = Some(value);
    }

    /// Floating-point view of the point.
    pub fn to_f64(&self) -> FPoint {
        let mut vals = [None; NVARS];
        for (i, v) in self.exact.iter().enumerate() {
            vals[i] = v.as_ref().map(rat_to_f64);
        }
        FPoint { vals }
    }
}

/// A floating-point evaluation point.
#[derive(Clone, Copy, Debug, Default)]
pub struct FPoint {
    vals: [Option<f64>; NVARS],
}

impl FPoint {
    /// Empty point.
    pub fn new() -> Self {
        FPoint::default()
    }

    /// Bind a variable.
    pub fn with(mut self, v: Var, value: f64) -> Self {
        self.vals[v.index()] = Some(value);
        self
    }

    /// Bind a variable (in place).
    pub fn set(&mut self, v: Var, value: f64) {
        self.vals[v.index()] = Some(value);
    }

    /// Value of a variable, if bound.
    pub fn get(&self, v: Var) -> Option<f64> {
        self.vals[v.index()]
    }
}

impl RatFun {
    /// The zero function.
    pub fn zero() -> Self {
        RatFun {
            num: Poly::zero(),
            den: Poly::one(),
        }
    }

    /// The constant one.
    pub fn one() -> Self {
        RatFun::constant(BigRational::one())
    }

    /// A rational constant.
    pub fn constant(c: BigRational) -> Self {
        RatFun {
            num: Poly::constant(c),
            den: Poly::one(),
        }
    }

    /// An integer constant.
    pub fn int(n: i64) -> Self {
        RatFun::constant(qi(n))
    }

    /// The rational constant `n/d`.
    pub fn frac(n: i64, d: i64) -> Self {
        RatFun::constant(q(n, d))
    }

    /// A variable.
    pub fn var(v: Var) -> Self {
        RatFun {
            num: Poly::var(v),
            den: Poly::one(),
        }
    }

    /// `v^e` for any integer `e`.
    pub fn var_pow(v: Var, e: i32) -> Self {
        let m = Poly::term(
            BigRational::one(),
            Monomial::var_pow(v, e.unsigned_abs() as u16),
        );
        if e >= 0 {
            RatFun {
                num: m,
                den: Poly::one(),
            }
        } else {
            RatFun {
                num: Poly::one(),
                den: m,
            }
        }
    }

    /// A polynomial as a rational function.
    pub fn from_poly(p: Poly) -> Self {
        RatFun {
            num: p,
            den: Poly::one(),
        }
    }

    /// Canonicalize `num/den`.
    pub fn from_parts(num: Poly, den: Poly) -> RfResult<Self> {
        if den.is_zero() {
            return Err(RatFunError::DivisionByZero);
        }
        check_degree(&num)?;
        check_degree(&den)?;
        Ok(Self::normalize(num, den))
    }

    fn normalize(num: Poly, den: Poly) -> Self {
        if num.is_zero() {
            return RatFun::zero();
        }
        let (num, den) = if den.is_constant() {
            (num, den)
        } else {
            let g = poly_gcd(&num, &den);
            if g.is_one() {
                (num, den)
            } else {
                (
                    num.div_exact(&g).expect("gcd divides numerator"),
                    den.div_exact(&g).expect("gcd divides denominator"),
                )
            }
        };
        let lc = den.leading_coeff();
        if lc.is_one() {
            RatFun { num, den }
        } else {
            let inv = lc.recip();
            RatFun {
                num: num.scale(&inv),
                den: den.scale(&inv),
            }
        }
    }

    /// Parse an expression such as `"(x^2 - 1)/(x - 1)"` or `"-3/2*x^-4*y1"`.
    pub fn parse(s: &str) -> RfResult<Self> {
        parse::parse(s)
    }

    /// Numerator.
    pub fn numer(&self) -> &Poly {
        &self.num
    }

    /// Denominator (leading coefficient one).
    pub fn denom(&self) -> &Poly {
        &self.den
    }

    /// True for the zero function.
    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// True for the constant one.
    pub fn is_one(&self) -> bool {
        self.num.is_one() && self.den.is_one()
    }

    /// The constant value if this is a constant.
    pub fn as_constant(&self) -> Option<BigRational> {
        if self.den.is_constant() {
            let d = self.den.constant_value()?;
            self.num.constant_value().map(|n| n / d)
        } else {
            None
        }
    }

    /// True when the denominator is a constant.
    pub fn is_polynomial(&self) -> bool {
        self.den.is_constant()
    }

    /// Variables that occur in numerator or denominator.
    pub fn variables(&self) -> Vec<Var> {
        let mask = self.num.var_mask() | self.den.var_mask();
        Var::ALL
            .iter()
            .copied()
            .filter(|v| mask & (1 << v.index()) != 0)
            .collect()
    }

    /// True when the function depends on `v`.
    pub fn depends_on(&self, v: Var) -> bool {
        let mask = self.num.var_mask() | self.den.var_mask();
        mask & (1 << v.index()) != 0
    }

    /// Sum.
    pub fn add(&self, other: &RatFun) -> RfResult<RatFun> {
        if self.is_zero() {
            return Ok(other.clone());
        }
        if other.is_zero() {
            return Ok(self.clone());
        }
        if self.den == other.den {
            let num = self.num.add(&other.num);
            check_degree(&num)?;
            return Ok(Self::normalize(num, self.den.clone()));
        }
        let g = poly_gcd(&self.den, &other.den);
        let bd = self.den.div_exact(&g).expect("gcd divides");
        let dd = other.den.div_exact(&g).expect("gcd divides");
        let num = self.num.mul(&dd).add(&other.num.mul(&bd));
        let den = self.den.mul(&dd);
        check_degree(&num)?;
        check_degree(&den)?;
        Ok(Self::normalize(num, den))
    }

    /// Difference.
    pub fn sub(&self, other: &RatFun) -> RfResult<RatFun> {
        self.add(&other.neg())
    }

    /// Negation.
    pub fn neg(&self) -> RatFun {
        RatFun {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    /// Product.
    pub fn mul(&self, other: &RatFun) -> RfResult<RatFun> {
        if self.is_zero() || other.is_zero() {
            return Ok(RatFun::zero());
        }
        // Cross-cancel before multiplying to keep degrees small.
        let g1 = poly_gcd(&self.num, &other.den);
        let g2 = poly_gcd(&other.num, &self.den);
        let n1 = self.num.div_exact(&g1).expect("gcd divides");
        let d2 = other.den.div_exact(&g1).expect("gcd divides");
        let n2 = other.num.div_exact(&g2).expect("gcd divides");
        let d1 = self.den.div_exact(&g2).expect("gcd divides");
        let num = n1.mul(&n2);
        let den = d1.mul(&d2);
        check_degree(&num)?;
        check_degree(&den)?;
        let lc = den.leading_coeff();
        let inv = lc.recip();
        Ok(RatFun {
            num: num.scale(&inv),
            den: den.scale(&inv),
        })
    }

    /// Multiply by a rational scalar.
    pub fn scale(&self, c: &BigRational) -> RatFun {
        if c.is_zero() {
            RatFun::zero()
        } else {
            RatFun {
                num: self.num.scale(c),
                den: self.den.clone(),
            }
        }
    }

    /// Reciprocal.
    pub fn recip(&self) -> RfResult<RatFun> {
        if self.is_zero() {
            return Err(RatFunError::DivisionByZero);
        }
        Ok(Self::normalize(self.den.clone(), self.num.clone()))
    }

    /// Quotient.
    pub fn div(&self, other: &RatFun) -> RfResult<RatFun> {
        self.mul(&other.recip()?)
    }

    /// Integer power (negative exponents invert).
    pub fn pow(&self, e: i32) -> RfResult<RatFun> {
        let base = if e < 0 { self.recip()? } else { self.clone() };
        let k = e.unsigned_abs();
        let num = base.num.pow(k);
        let den = base.den.pow(k);
        check_degree(&num)?;
        check_degree(&den)?;
        let lc = den.leading_coeff();
        let inv = lc.recip();
        Ok(RatFun {
            num: num.scale(&inv),
            den: den.scale(&inv),
        })
    }

    /// Partial derivative by the quotient rule.
    pub fn derive(&self, v: Var) -> RfResult<RatFun> {
        if !self.depends_on(v) {
            return Ok(RatFun::zero());
        }
        let dn = self.num.derive(v);
        if self.den.is_constant() {
            return Ok(Self::normalize(dn, self.den.clone()));
        }
        let dd = self.den.derive(v);
        let num = dn.mul(&self.den).sub(&self.num.mul(&dd));
        let den = self.den.mul(&self.den);
        check_degree(&num)?;
        check_degree(&den)?;
        Ok(Self::normalize(num, den))
    }

    /// Exact evaluation at a rational point.
    pub fn eval(&self, p: &Point) -> RfResult<BigRational> {
        let d = self
            .den
            .eval_exact(&p.exact)
            .map_err(RatFunError::Unbound)?;
        if d.is_zero() {
            return Err(RatFunError::Pole {
                denominator: self.den.to_string(),
            });
        }
        let n = self
            .num
            .eval_exact(&p.exact)
            .map_err(RatFunError::Unbound)?;
        Ok(n / d)
    }

    /// Floating-point evaluation.
    pub fn eval_f64(&self, p: &FPoint) -> RfResult<f64> {
        let d = self.den.eval_f64(&p.vals).map_err(RatFunError::Unbound)?;
        if d == 0.0 {
            return Err(RatFunError::Pole {
                denominator: self.den.to_string(),
            });
        }
        let n = self.num.eval_f64(&p.vals).map_err(RatFunError::Unbound)?;
        Ok(n / d)
    }

    /// Simultaneous substitution of rational functions for variables.
    pub fn substitute(&self, subs: &[(Var, RatFun)]) -> RfResult<RatFun> {
        let relevant: Vec<&(Var, RatFun)> =
            subs.iter().filter(|(v, _)| self.depends_on(*v)).collect();
        if relevant.is_empty() {
            return Ok(self.clone());
        }
        // Substitute into num and den separately; each becomes a rational
        // function because a substituted value may have a denominator.
        let n = subst_poly(&self.num, &relevant)?;
        let d = subst_poly(&self.den, &relevant)?;
        n.div(&d)
    }

    /// Order of vanishing at `v = 0` (negative for a pole), `None` for zero.
    pub fn order_at_zero(&self, v: Var) -> Option<i32> {
        if self.is_zero() {
            return None;
        }
        let low = |p: &Poly| {
            p.terms()
                .iter()
                .map(|(m, _)| m.exp(v) as i32)
                .min()
                .unwrap_or(0)
        };
        Some(low(&self.num) - low(&self.den))
    }

    /// Coefficient of `v^k` in the Laurent expansion at `v = 0`, as a
    /// function of the remaining variables. Exact for functions whose
    /// denominator is a monomial in `v` times a `v`-free polynomial;
    /// otherwise only the lowest-order coefficient is exact, and other
    /// orders return a domain error.
    pub fn leading_coefficient_at_zero(&self, v: Var) -> RfResult<(i32, RatFun)> {
        let ord = self.order_at_zero(v).ok_or_else(|| {
            RatFunError::Domain("zero function has no leading coefficient".into())
        })?;
        let lowest = |p: &Poly| -> (u16, Poly) {
            let coeffs = p.coeffs_in(v);
            let k = coeffs.iter().position(|c| !c.is_zero()).unwrap_or(0);
            (k as u16, coeffs[k].clone())
        };
        let (_, nc) = lowest(&self.num);
        let (_, dc) = lowest(&self.den);
        Ok((ord, RatFun::from_parts(nc, dc)?))
    }

    /// Floating-point display of the numeric value when constant.
    pub fn to_f64_constant(&self) -> Option<f64> {
        self.as_constant().map(|c| rat_to_f64(&c))
    }
}

fn subst_poly(p: &Poly, subs: &[&(Var, RatFun)]) -> RfResult<RatFun> {
    // Bring every substituted value over a common denominator per variable
    // and substitute term by term.
    let mut acc = RatFun::zero();
    let mut powers: Vec<Vec<RatFun>> = subs
        .iter()
        .map(|(_, r)| vec![RatFun::one(), r.clone()])
        .collect();
    for (m, c) in p.terms() {
        let mut mm = *m;
        let mut t = RatFun::constant(c.clone());
        for (si, (v, r)) in subs.iter().enumerate() {
            let e = mm.exp(*v) as usize;
            if e == 0 {
                continue;
            }
            mm.0[v.index()] = 0;
            while powers[si].len() <= e {
                let next = powers[si].last().unwrap().mul(r)?;
                powers[si].push(next);
            }
            t = t.mul(&powers[si][e])?;
        }
        let mono = RatFun::from_poly(Poly::term(BigRational::one(), mm));
        acc = acc.add(&t.mul(&mono)?)?;
    }
    Ok(acc)
}

impl fmt::Display for RatFun {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            write!(f, "{}", self.num)
        } else if let Some(d) = self.den.constant_value() {
            let inv = d.recip();
            write!(f, "{}", self.num.scale(&inv))
        } else {
            let n = if self.num.len() > 1 {
                format!("({})", self.num)
            } else {
                self.num.to_string()
            };
            let d = if self.den.len() > 1 || !self.den.leading_coeff().is_one() {
                format!("({})", self.den)
            } else {
                self.den.to_string()
            };
            write!(f, "{n}/{d}")
        }
    }
}

/// Format a rational as `p/q` (or `p`).
pub fn fmt_q(c: &BigRational) -> String {
    poly::fmt_rational(c)
}

/// True when `c` is strictly negative.
pub fn is_negative(c: &BigRational) -> bool {
    c.is_negative()
}

macro_rules! panicking_op {
    ($trait:ident, $method:ident, $inner:ident) => {
        impl std::ops::$trait<&RatFun> for &RatFun {
            type Output = RatFun;
            /// Panics when the degree guardrail trips; use the checked method to handle that case.
            fn $method(self, rhs: &RatFun) -> RatFun {
                RatFun::$inner(self, rhs).unwrap_or_else(|e| panic!("{e}"))
            }
        }
        impl std::ops::$trait<RatFun> for RatFun {
            type Output = RatFun;
            fn $method(self, rhs: RatFun) -> RatFun {
                RatFun::$inner(&self, &rhs).unwrap_or_else(|e| panic!("{e}"))
            }
        }
    };
}

panicking_op!(Add, add, add);
panicking_op!(Sub, sub, sub);
panicking_op!(Mul, mul, mul);
panicking_op!(Div, div, div);

impl std::ops::Neg for RatFun {
    type Output = RatFun;
    fn neg(self) -> RatFun {
        RatFun::neg(&self)
    }
}

impl std::ops::Neg for &RatFun {
    type Output = RatFun;
    fn neg(self) -> RatFun {
        RatFun::neg(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rf(s: &str) -> RatFun {
        RatFun::parse(s).unwrap()
    }

    #[test]
    fn cancels_common_factor() {
        assert_eq!(rf("(x^2 - 1)/(x - 1)"), rf("x + 1"));
        assert_eq!(rf("(x*y1 - x)/(y1^2 - 1)"), rf("x/(y1 + 1)"));
    }

    #[test]
    fn derivative_of_inverse_cube() {
        let d = rf("x^-3").derive(Var::X).unwrap();
        assert_eq!(d, rf("-3*x^-4"));
    }

    #[test]
    fn evaluation_at_half() {
        let v = rf("1/x^3")
            .eval(&Point::new().with(Var::X, q(1, 2)))
            .unwrap();
        assert_eq!(v, qi(8));
    }

    #[test]
    fn pole_names_denominator() {
        let err = rf("1/(x - 1)")
            .eval(&Point::new().with(Var::X, qi(1)))
            .unwrap_err();
        match err {
            RatFunError::Pole { denominator } => assert_eq!(denominator, "x - 1"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn division_by_zero_is_error() {
        assert_eq!(
            rf("x").div(&RatFun::zero()),
            Err(RatFunError::DivisionByZero)
        );
    }

    #[test]
    fn degree_guardrail_trips() {
        let e = rf("x + y1").pow(65).unwrap_err();
        assert!(matches!(e, RatFunError::DegreeLimit { .. }));
    }

    #[test]
    fn canonical_denominator_is_monic() {
        let f = rf("1/(2*x + 4)");
        assert!(f.denom().leading_coeff().is_one());
        assert_eq!(f.to_string(), "1/2/(x + 2)");
    }

    #[test]
    fn multivariate_gcd_non_monomial() {
        let a = rf("(x + y1)^2*(x - y2)");
        let b = rf("(x + y1)*(x*y2 + 1)");
        let g = poly_gcd(a.numer(), b.numer());
        assert_eq!(RatFun::from_poly(g), rf("x + y1"));
    }

    #[test]
    fn substitution_inverts_chart() {
        let f = rf("x^-5 + y1/x");
        let g = f.substitute(&[(Var::X, rf("1/r"))]).unwrap();
        assert_eq!(g, rf("r^5 + r*y1"));
    }
}

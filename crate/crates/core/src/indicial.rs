//! Indicial polynomials, indicial roots and Fredholm weight windows.
//!
//! For a reduced operator `P = sum_j C_j(x) (d/dx)^j` acting on `N`-vectors,
//! substituting `x^gamma v` and keeping the lowest power of `x` in each row
//! gives `x^{gamma + nu_r} (M(gamma) v)_r`. The matrix polynomial `M` is the
//! indicial polynomial, its determinant's roots are the indicial roots, and
//! the weights `c = gamma - 1` are where the operator fails to be Fredholm
//! between weighted spaces.
//!
//! The row order `nu_r` is fixed by the top-order terms of the row. A term
//! whose order is strictly lower than `nu_r` means the operator is not of
//! `b`-type at `x = 0` and is rejected. The overall rescalings (`x^{-3}` for
//! the scalar Laplacian zero mode, `x^{-3/2}` for the Dirac system) are
//! therefore automatic.

use crate::linalg::nullspace_exact;
use crate::operators::ModeReducedOp;
use crate::ratfun::{fmt_q, rat_to_f64, RatFun, RatFunError};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt;
use thiserror::Error;

/// Decay rate of the `L^2` cutoff: `x^gamma` lies in the weighted space
/// `x^c L^2` near `x = 0` exactly when `gamma > c + L2_CUTOFF`.
pub const L2_CUTOFF: i64 = 1;

/// Errors from indicial analysis.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum IndicialError {
    #[error("operator is not of b-type at x = 0: row {row}, column {col}, term ({term}) d^{order} has x-order below the row's principal order {nu}")]
    NotBType {
        row: usize,
        col: usize,
        order: usize,
        term: String,
        nu: i32,
    },
    #[error("row {0} of the operator is identically zero")]
    ZeroRow(usize),
    #[error("leading coefficient {0} of the indicial polynomial is not a constant")]
    NonConstantLeading(String),
    #[error("the indicial determinant vanishes identically")]
    DetIdenticallyZero,
    #[error(transparent)]
    RatFun(#[from] RatFunError),
}

/// Result alias.
pub type IndResult<T> = Result<T, IndicialError>;

/// A univariate polynomial in `gamma` with rational coefficients, lowest
/// degree first.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct UPoly(Vec<BigRational>);

impl UPoly {
    /// From coefficients (lowest degree first).
    pub fn new(mut c: Vec<BigRational>) -> Self {
        while c.last().is_some_and(Zero::is_zero) {
            c.pop();
        }
        UPoly(c)
    }

    /// The zero polynomial.
    pub fn zero() -> Self {
        UPoly(Vec::new())
    }

    /// A constant.
    pub fn constant(c: BigRational) -> Self {
        UPoly::new(vec![c])
    }

    /// The monomial `gamma`.
    pub fn gamma() -> Self {
        UPoly::new(vec![BigRational::zero(), BigRational::one()])
    }

    /// Falling factorial `gamma (gamma - 1) ... (gamma - j + 1)`.
    pub fn falling(j: usize) -> Self {
        let mut p = UPoly::constant(BigRational::one());
        for i in 0..j {
            let f = UPoly::new(vec![
                BigRational::from_integer(BigInt::from(-(i as i64))),
                BigRational::one(),
            ]);
            p = p.mul(&f);
        }
        p
    }

    /// Coefficients, lowest first.
    pub fn coeffs(&self) -> &[BigRational] {
        &self.0
    }

    /// True for the zero polynomial.
    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    /// Degree (`None` for zero).
    pub fn degree(&self) -> Option<usize> {
        self.0.len().checked_sub(1)
    }

    /// Leading coefficient.
    pub fn leading(&self) -> BigRational {
        self.0.last().cloned().unwrap_or_else(BigRational::zero)
    }

    /// Sum.
    pub fn add(&self, o: &UPoly) -> UPoly {
        let n = self.0.len().max(o.0.len());
        let z = BigRational::zero();
        UPoly::new(
            (0..n)
                .map(|i| self.0.get(i).unwrap_or(&z) + o.0.get(i).unwrap_or(&z))
                .collect(),
        )
    }

    /// Difference.
    pub fn sub(&self, o: &UPoly) -> UPoly {
        self.add(&o.scale(&-BigRational::one()))
    }

    /// Scalar multiple.
    pub fn scale(&self, c: &BigRational) -> UPoly {
        UPoly::new(self.0.iter().map(|a| a * c).collect())
    }

    /// Product.
    pub fn mul(&self, o: &UPoly) -> UPoly {
        if self.is_zero() || o.is_zero() {
            return UPoly::zero();
        }
        let mut c = vec![BigRational::zero(); self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in o.0.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        UPoly::new(c)
    }

    /// Derivative.
    pub fn derive(&self) -> UPoly {
        UPoly::new(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, a)| a * BigRational::from_integer((i as i64).into()))
                .collect(),
        )
    }

    /// Exact evaluation.
    pub fn eval(&self, g: &BigRational) -> BigRational {
        self.0
            .iter()
            .rev()
            .fold(BigRational::zero(), |acc, a| acc * g + a)
    }

    /// Floating evaluation.
    pub fn eval_f64(&self, g: f64) -> f64 {
        self.0
            .iter()
            .rev()
            .fold(0.0, |acc, a| acc * g + rat_to_f64(a))
    }

    /// Division with remainder.
    pub fn divrem(&self, d: &UPoly) -> (UPoly, UPoly) {
        assert!(!d.is_zero(), "division by the zero polynomial");
        let mut r = self.0.clone();
        let dd = d.0.len() - 1;
        let lc = d.leading();
        if r.len() <= dd {
            return (UPoly::zero(), self.clone());
        }
        let mut qv = vec![BigRational::zero(); r.len() - dd];
        for i in (0..qv.len()).rev() {
            let c = &r[i + dd] / &lc;
            if !c.is_zero() {
                for (j, b) in d.0.iter().enumerate() {
                    r[i + j] -= &c * b;
                }
            }
            qv[i] = c;
        }
        (UPoly::new(qv), UPoly::new(r))
    }

    /// Monic normalization.
    pub fn monic(&self) -> UPoly {
        if self.is_zero() {
            return self.clone();
        }
        self.scale(&(BigRational::one() / self.leading()))
    }

    /// Monic greatest common divisor.
    pub fn gcd(&self, o: &UPoly) -> UPoly {
        let (mut a, mut b) = (self.clone(), o.clone());
        while !b.is_zero() {
            let (_, r) = a.divrem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    /// Square-free decomposition `p = lc * prod a_i^i` (Yun's algorithm).
    /// Returns `(a_i, i)` for the nonconstant factors.
    pub fn squarefree(&self) -> Vec<(UPoly, usize)> {
        let f = self.monic();
        let fp = f.derive();
        if fp.is_zero() {
            return Vec::new();
        }
        let b = f.gcd(&fp);
        let mut c = f.divrem(&b).0;
        let mut d = fp.divrem(&b).0.sub(&c.derive());
        let mut out = Vec::new();
        let mut i = 1;
        while c.degree().unwrap_or(0) > 0 {
            let a = c.gcd(&d);
            if a.degree().unwrap_or(0) > 0 {
                out.push((a.clone(), i));
            }
            c = c.divrem(&a).0;
            d = d.divrem(&a).0.sub(&c.derive());
            i += 1;
        }
        out
    }
}

impl fmt::Display for UPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut parts = Vec::new();
        for (i, c) in self.0.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let g = match i {
                0 => String::new(),
                1 => "g".to_string(),
                _ => format!("g^{i}"),
            };
            let s = if g.is_empty() {
                fmt_q(c)
            } else if c.is_one() {
                g
            } else if *c == -BigRational::one() {
                format!("-{g}")
            } else {
                format!("{}*{g}", fmt_q(c))
            };
            parts.push(s);
        }
        write!(f, "{}", parts.join(" + ").replace("+ -", "- "))
    }
}

/// The matrix indicial polynomial of a reduced operator.
#[derive(Clone, Debug, PartialEq)]
pub struct IndicialPolynomial {
    /// Size.
    pub size: usize,
    /// Entries `M[r][c](gamma)`.
    pub entries: Vec<Vec<UPoly>>,
    /// Row orders `nu_r`: row `r` of `P(x^gamma v)` is `x^{gamma + nu_r} (M v)_r`
    /// to leading order.
    pub row_orders: Vec<i32>,
}

fn det_exact(m: &[Vec<BigRational>]) -> BigRational {
    let n = m.len();
    let mut a = m.to_vec();
    let mut det = BigRational::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&r| !a[r][c].is_zero()) else {
            return BigRational::zero();
        };
        if p != c {
            a.swap(p, c);
            det = -det;
        }
        let piv = a[c][c].clone();
        det *= &piv;
        for r in (c + 1)..n {
            if a[r][c].is_zero() {
                continue;
            }
            let f = &a[r][c] / &piv;
            for j in c..n {
                let v = &f * &a[c][j];
                a[r][j] -= v;
            }
        }
    }
    det
}

impl IndicialPolynomial {
    /// Evaluate all entries at a rational `gamma`.
    pub fn eval(&self, g: &BigRational) -> Vec<Vec<BigRational>> {
        self.entries
            .iter()
            .map(|row| row.iter().map(|p| p.eval(g)).collect())
            .collect()
    }

    /// Evaluate in floating point.
    pub fn eval_f64(&self, g: f64) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.size, self.size, |r, c| self.entries[r][c].eval_f64(g))
    }

    /// Exact determinant polynomial, by evaluation at integer points and
    /// Newton interpolation.
    pub fn det(&self) -> UPoly {
        let bound: usize = self
            .entries
            .iter()
            .map(|row| row.iter().filter_map(UPoly::degree).max().unwrap_or(0))
            .sum();
        let pts: Vec<BigRational> = (0..=bound as i64)
            .map(|i| BigRational::from_integer(i.into()))
            .collect();
        let vals: Vec<BigRational> = pts.iter().map(|g| det_exact(&self.eval(g))).collect();
        // Newton divided differences.
        let n = pts.len();
        let mut dd = vals.clone();
        for j in 1..n {
            for i in (j..n).rev() {
                dd[i] = (&dd[i] - &dd[i - 1]) / (&pts[i] - &pts[i - j]);
            }
        }
        let mut p = UPoly::constant(dd[n - 1].clone());
        for i in (0..n - 1).rev() {
            let lin = UPoly::new(vec![-pts[i].clone(), BigRational::one()]);
            p = p.mul(&lin).add(&UPoly::constant(dd[i].clone()));
        }
        p
    }

    /// Restriction to a subset of components.
    pub fn block(&self, idx: &[usize]) -> IndicialPolynomial {
        IndicialPolynomial {
            size: idx.len(),
            entries: idx
                .iter()
                .map(|&r| idx.iter().map(|&c| self.entries[r][c].clone()).collect())
                .collect(),
            row_orders: idx.iter().map(|&r| self.row_orders[r]).collect(),
        }
    }
}

impl fmt::Display for IndicialPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in &self.entries {
            let cells: Vec<String> = row.iter().map(|p| p.to_string()).collect();
            writeln!(f, "[{}]", cells.join(", "))?;
        }
        Ok(())
    }
}

/// The indicial polynomial of a reduced operator.
pub fn indicial_poly(op: &ModeReducedOp) -> IndResult<IndicialPolynomial> {
    let n = op.size;
    let var = op.var;
    let mut entries = vec![vec![UPoly::zero(); n]; n];
    let mut row_orders = Vec::with_capacity(n);
    for r in 0..n {
        // Principal order of the row from its highest derivative.
        let top = (0..op.coeffs.len())
            .rev()
            .find(|&j| (0..n).any(|c| !op.coeffs[j][r][c].is_zero()))
            .ok_or(IndicialError::ZeroRow(r))?;
        let nu = (0..n)
            .filter_map(|c| op.coeffs[top][r][c].order_at_zero(var))
            .min()
            .expect("nonzero top row")
            - top as i32;
        for (j, m) in op.coeffs.iter().enumerate() {
            for c in 0..n {
                let a = &m[r][c];
                let Some(ord) = a.order_at_zero(var) else {
                    continue;
                };
                let o = ord - j as i32;
                if o < nu {
                    return Err(IndicialError::NotBType {
                        row: r,
                        col: c,
                        order: j,
                        term: a.to_string(),
                        nu,
                    });
                }
                if o == nu {
                    let (_, lc) = a.leading_coefficient_at_zero(var)?;
                    let lc = lc
                        .as_constant()
                        .ok_or_else(|| IndicialError::NonConstantLeading(lc.to_string()))?;
                    entries[r][c] = entries[r][c].add(&UPoly::falling(j).scale(&lc));
                }
            }
        }
        row_orders.push(nu);
    }
    Ok(IndicialPolynomial {
        size: n,
        entries,
        row_orders,
    })
}

/// Value of an indicial root.
#[derive(Clone, Debug, PartialEq)]
pub enum RootValue {
    /// Exact rational root.
    Exact(BigRational),
    /// Irrational real root (to about 1e-12).
    Real(f64),
    /// Non-real root `re + i im` (reported once per conjugate pair member).
    Complex(f64, f64),
}

impl RootValue {
    /// Real part.
    pub fn re(&self) -> f64 {
        match self {
            RootValue::Exact(q) => rat_to_f64(q),
            RootValue::Real(x) => *x,
            RootValue::Complex(re, _) => *re,
        }
    }

    /// Imaginary part.
    pub fn im(&self) -> f64 {
        match self {
            RootValue::Complex(_, im) => *im,
            _ => 0.0,
        }
    }

    /// Exact value when rational.
    pub fn exact(&self) -> Option<&BigRational> {
        match self {
            RootValue::Exact(q) => Some(q),
            _ => None,
        }
    }
}

impl fmt::Display for RootValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RootValue::Exact(q) => write!(f, "{}", fmt_q(q)),
            RootValue::Real(x) => write!(f, "{x:.12}"),
            RootValue::Complex(a, b) => write!(f, "{a:.12}{b:+.12}i"),
        }
    }
}

/// An indicial root with its multiplicity and nullspace.
#[derive(Clone, Debug, PartialEq)]
pub struct IndicialRoot {
    /// Root.
    pub value: RootValue,
    /// Multiplicity as a root of `det M`.
    pub multiplicity: usize,
    /// Exact nullspace basis of `M(root)` for rational roots.
    pub exact_nullvectors: Vec<Vec<BigRational>>,
    /// Floating nullspace basis (normalized) for every real root.
    pub nullvectors: Vec<Vec<f64>>,
}

fn small_divisors(n: &BigInt) -> Option<Vec<BigInt>> {
    let n = n.abs().to_u64()?;
    if n > 1_000_000_000_000 {
        return None;
    }
    let mut out = Vec::new();
    let mut d = 1u64;
    while d * d <= n {
        if n % d == 0 {
            out.push(BigInt::from(d));
            if d * d != n {
                out.push(BigInt::from(n / d));
            }
        }
        d += 1;
    }
    Some(out)
}

fn integer_coeffs(p: &UPoly) -> Vec<BigInt> {
    let l = p
        .coeffs()
        .iter()
        .fold(BigInt::one(), |l, c| l.lcm(c.denom()));
    p.coeffs()
        .iter()
        .map(|c| (c * BigRational::from_integer(l.clone())).to_integer())
        .collect()
}

fn rational_roots(p: &UPoly) -> Vec<BigRational> {
    let mut roots = Vec::new();
    let mut p = p.clone();
    // Factor out gamma.
    if p.coeffs().first().is_some_and(Zero::is_zero) {
        roots.push(BigRational::zero());
        while p.coeffs().first().is_some_and(Zero::is_zero) {
            p = UPoly::new(p.coeffs()[1..].to_vec());
        }
    }
    if p.degree().unwrap_or(0) == 0 {
        return roots;
    }
    let ic = integer_coeffs(&p);
    let (Some(nums), Some(dens)) = (
        small_divisors(&ic[0]),
        small_divisors(ic.last().expect("nonzero")),
    ) else {
        return roots;
    };
    for a in &nums {
        for b in &dens {
            for s in [1i64, -1] {
                let cand = BigRational::new(a * s, b.clone());
                if !roots.contains(&cand) && p.eval(&cand).is_zero() {
                    roots.push(cand);
                }
            }
        }
    }
    roots
}

fn newton_polish(p: &UPoly, x0: f64) -> f64 {
    let dp = p.derive();
    let mut x = x0;
    for _ in 0..50 {
        let d = dp.eval_f64(x);
        if d == 0.0 {
            break;
        }
        let step = p.eval_f64(x) / d;
        x -= step;
        if step.abs() < 1e-16 * (1.0 + x.abs()) {
            break;
        }
    }
    x
}

fn numeric_nullspace(m: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    let n = m.ncols();
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    let smax = svd.singular_values.max().max(1.0);
    let mut out = Vec::new();
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s <= 1e-9 * smax {
            let mut v: Vec<f64> = (0..n).map(|j| vt[(i, j)]).collect();
            // Sign convention: first significant entry positive.
            if let Some(f) = v.iter().find(|x| x.abs() > 1e-12) {
                if *f < 0.0 {
                    v.iter_mut().for_each(|x| *x = -*x);
                }
            }
            out.push(v);
        }
    }
    out
}

/// All roots of `det M(gamma)` with multiplicities and nullvectors, sorted
/// by real part (then imaginary part).
pub fn indicial_roots(m: &IndicialPolynomial) -> IndResult<Vec<IndicialRoot>> {
    let det = m.det();
    if det.is_zero() {
        return Err(IndicialError::DetIdenticallyZero);
    }
    let mut roots: Vec<IndicialRoot> = Vec::new();
    for (factor, mult) in det.squarefree() {
        let mut rest = factor.clone();
        for r in rational_roots(&factor) {
            rest = rest
                .divrem(&UPoly::new(vec![-r.clone(), BigRational::one()]))
                .0;
            let exact_m: Vec<Vec<RatFun>> = m
                .eval(&r)
                .into_iter()
                .map(|row| row.into_iter().map(RatFun::constant).collect())
                .collect();
            let ns = nullspace_exact(&exact_m)?;
            let exact_nullvectors: Vec<Vec<BigRational>> = ns
                .into_iter()
                .map(|v| {
                    v.into_iter()
                        .map(|c| c.as_constant().expect("constant"))
                        .collect()
                })
                .collect();
            let nullvectors = exact_nullvectors
                .iter()
                .map(|v| {
                    let f: Vec<f64> = v.iter().map(rat_to_f64).collect();
                    let n = f.iter().map(|x| x * x).sum::<f64>().sqrt();
                    f.iter().map(|x| x / n).collect()
                })
                .collect();
            roots.push(IndicialRoot {
                value: RootValue::Exact(r),
                multiplicity: mult,
                exact_nullvectors,
                nullvectors,
            });
        }
        let d = rest.degree().unwrap_or(0);
        if d == 0 {
            continue;
        }
        let monic = rest.monic();
        let mut comp = nalgebra::DMatrix::<f64>::zeros(d, d);
        for i in 1..d {
            comp[(i, i - 1)] = 1.0;
        }
        for i in 0..d {
            comp[(i, d - 1)] = -rat_to_f64(&monic.coeffs()[i]);
        }
        for ev in comp.complex_eigenvalues().iter() {
            if ev.im.abs() < 1e-9 * (1.0 + ev.re.abs()) {
                let x = newton_polish(&monic, ev.re);
                roots.push(IndicialRoot {
                    value: RootValue::Real(x),
                    multiplicity: mult,
                    exact_nullvectors: Vec::new(),
                    nullvectors: numeric_nullspace(&m.eval_f64(x)),
                });
            } else {
                roots.push(IndicialRoot {
                    value: RootValue::Complex(ev.re, ev.im),
                    multiplicity: mult,
                    exact_nullvectors: Vec::new(),
                    nullvectors: Vec::new(),
                });
            }
        }
    }
    roots.sort_by(|a, b| {
        a.value
            .re()
            .total_cmp(&b.value.re())
            .then(a.value.im().total_cmp(&b.value.im()))
    });
    Ok(roots)
}

/// Indicial weights `c_j = Re(gamma_j) - 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightWindow {
    /// Sorted, distinct weights.
    pub weights: Vec<f64>,
    /// Exact weights when the root is rational (same order).
    pub exact: Vec<Option<BigRational>>,
}

/// Weight window from a root list.
pub fn weight_window(roots: &[IndicialRoot]) -> WeightWindow {
    let mut pairs: Vec<(f64, Option<BigRational>)> = Vec::new();
    for r in roots {
        let w = r.value.re() - L2_CUTOFF as f64;
        if pairs.iter().any(|(v, _)| (v - w).abs() < 1e-12) {
            continue;
        }
        let e = r
            .value
            .exact()
            .map(|q| q - BigRational::from_integer(L2_CUTOFF.into()));
        pairs.push((w, e));
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    WeightWindow {
        weights: pairs.iter().map(|p| p.0).collect(),
        exact: pairs.into_iter().map(|p| p.1).collect(),
    }
}

/// True unless `c` is an indicial weight (to within 1e-12).
pub fn is_fredholm_weight(w: &WeightWindow, c: f64) -> bool {
    !w.weights.iter().any(|v| (v - c).abs() <= 1e-12)
}

/// Real roots strictly above the cutoff for weight `c`, i.e. the exponents
/// allowed in the expansion of a solution in `x^c L^2`.
pub fn exponents_above(roots: &[IndicialRoot], c: f64) -> Vec<f64> {
    let mut v: Vec<f64> = roots
        .iter()
        .filter(|r| r.value.im() == 0.0 && r.value.re() > c + L2_CUTOFF as f64 + 1e-12)
        .map(|r| r.value.re())
        .collect();
    v.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    v
}

//! Vector fields, differential operators and their reductions.
//!
//! * [`VectorFieldExpr`] and [`DiffOpExpr`] are exact symbolic objects on a
//!   [`Chart`], with composition by the Leibniz rule.
//! * [`structure_fields`] returns the generators of the `b`, `c` and `a`
//!   structure algebras; [`closure_coefficients`] checks closure under the
//!   bracket by an exact linear solve.
//! * [`laplacian`] builds the Laplace-Beltrami operator of a metric.
//! * [`a_rescale_identity`] checks the grouping of `x * Lap_GH` into a sum
//!   of squares of `a`-fields plus lower-order corrections.
//! * Mode projection, the reduced operators and the normal operators live
//!   in [`modes`]; blow-up lifts in [`blowup`]; the block form of `d + delta`
//!   in [`block`].

pub mod block;
pub mod blowup;
pub mod modes;

use crate::geometry::{det4, inverse4, Chart, GeometryError, MetricField};
use crate::ratfun::{FPoint, RatFun, RatFunError, RfResult, Var};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

pub use block::{hodge_derham_matrix, BlockEntry, BlockOp, BlockOperator, BlockTerm};
pub use blowup::{blowup_lift, lift_chart, BlowupStage};
pub use modes::{
    front_face_normal_op, product_model_laplacian, project_modes, reduced_d00, reduced_scalar_b,
    FrontFaceOp, ModeReducedOp, NormalComponent, Parity,
};

/// Errors from operator construction and reduction.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum OperatorError {
    #[error("mode projection couples modes: coefficient {0} still depends on {1}")]
    ModeCoupling(String, Var),
    #[error("mode projection produces an imaginary coefficient for the term {0}")]
    ImaginaryCoefficient(String),
    #[error("operator is twisted but a product model was requested: {0}")]
    Twisted(String),
    #[error("invalid request: {0}")]
    Invalid(String),
    #[error("charts differ: {0} vs {1}")]
    ChartMismatch(&'static str, &'static str),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    RatFun(#[from] RatFunError),
}

/// Result alias for operators.
pub type OpResult<T> = Result<T, OperatorError>;

/// A vector field `sum_i a_i d_{v_i}` on a chart.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorFieldExpr {
    /// Chart whose coordinates index the components.
    pub chart: Chart,
    /// Components on the coordinate fields.
    pub coeffs: [RatFun; 4],
}

impl VectorFieldExpr {
    /// Build from components.
    pub fn new(chart: Chart, coeffs: [RatFun; 4]) -> Self {
        VectorFieldExpr { chart, coeffs }
    }

    /// `f * d_v` for a chart coordinate `v`.
    pub fn coordinate(chart: Chart, v: Var, f: RatFun) -> Self {
        let mut c: [RatFun; 4] = Default::default();
        c[chart.index_of(v).expect("coordinate of chart")] = f;
        VectorFieldExpr { chart, coeffs: c }
    }

    /// Apply to a function.
    pub fn apply(&self, f: &RatFun) -> RfResult<RatFun> {
        let mut acc = RatFun::zero();
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let d = f.derive(self.chart.coords[i])?;
            if !d.is_zero() {
                acc = acc.add(&c.mul(&d)?)?;
            }
        }
        Ok(acc)
    }

    /// Lie bracket `[self, other]`.
    pub fn lie_bracket(&self, other: &VectorFieldExpr) -> OpResult<VectorFieldExpr> {
        if self.chart != other.chart {
            return Err(OperatorError::ChartMismatch(
                self.chart.name,
                other.chart.name,
            ));
        }
        let mut c: [RatFun; 4] = Default::default();
        for (k, ck) in c.iter_mut().enumerate() {
            *ck = self
                .apply(&other.coeffs[k])?
                .sub(&other.apply(&self.coeffs[k])?)?;
        }
        Ok(VectorFieldExpr::new(self.chart, c))
    }

    /// Multiply by a function.
    pub fn scale(&self, f: &RatFun) -> RfResult<VectorFieldExpr> {
        let mut c: [RatFun; 4] = Default::default();
        for (k, ck) in c.iter_mut().enumerate() {
            *ck = self.coeffs[k].mul(f)?;
        }
        Ok(VectorFieldExpr::new(self.chart, c))
    }

    /// Sum.
    pub fn add(&self, other: &VectorFieldExpr) -> RfResult<VectorFieldExpr> {
        let mut c: [RatFun; 4] = Default::default();
        for (k, ck) in c.iter_mut().enumerate() {
            *ck = self.coeffs[k].add(&other.coeffs[k])?;
        }
        Ok(VectorFieldExpr::new(self.chart, c))
    }

    /// True when all components vanish.
    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(RatFun::is_zero)
    }

    /// Substitute values for variables in every component.
    pub fn substitute(&self, subs: &[(Var, RatFun)]) -> RfResult<VectorFieldExpr> {
        let mut c: [RatFun; 4] = Default::default();
        for (k, ck) in c.iter_mut().enumerate() {
            *ck = self.coeffs[k].substitute(subs)?;
        }
        Ok(VectorFieldExpr::new(self.chart, c))
    }
}

impl fmt::Display for VectorFieldExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| format!("({c}) d_{}", self.chart.coords[i].name()))
            .collect();
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}

/// Multi-index of partial derivatives over the chart coordinates.
pub type MultiIndex = [u8; 4];

/// A linear differential operator `sum_alpha a_alpha d^alpha` on a chart.
#[derive(Clone, Debug, PartialEq)]
pub struct DiffOpExpr {
    /// Chart.
    pub chart: Chart,
    terms: BTreeMap<MultiIndex, RatFun>,
}

fn binom(n: u8, k: u8) -> i64 {
    let mut r: i64 = 1;
    for i in 0..k as i64 {
        r = r * (n as i64 - i) / (i + 1);
    }
    r
}

impl DiffOpExpr {
    /// The zero operator.
    pub fn zero(chart: Chart) -> Self {
        DiffOpExpr {
            chart,
            terms: BTreeMap::new(),
        }
    }

    /// Multiplication by a function.
    pub fn multiplication(chart: Chart, f: RatFun) -> Self {
        let mut op = DiffOpExpr::zero(chart);
        op.add_term([0; 4], f).expect("no degree growth");
        op
    }

    /// The operator of a single term `f * d^alpha`.
    pub fn term(chart: Chart, alpha: MultiIndex, f: RatFun) -> Self {
        let mut op = DiffOpExpr::zero(chart);
        op.add_term(alpha, f).expect("no degree growth");
        op
    }

    /// A vector field as a first-order operator.
    pub fn from_vector_field(v: &VectorFieldExpr) -> Self {
        let mut op = DiffOpExpr::zero(v.chart);
        for (i, c) in v.coeffs.iter().enumerate() {
            let mut a = [0u8; 4];
            a[i] = 1;
            op.add_term(a, c.clone()).expect("no degree growth");
        }
        op
    }

    /// Add `f * d^alpha` to the operator.
    pub fn add_term(&mut self, alpha: MultiIndex, f: RatFun) -> RfResult<()> {
        if f.is_zero() {
            return Ok(());
        }
        let e = self.terms.entry(alpha).or_insert_with(RatFun::zero);
        *e = e.add(&f)?;
        if e.is_zero() {
            self.terms.remove(&alpha);
        }
        Ok(())
    }

    /// Nonzero terms.
    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &RatFun)> {
        self.terms.iter()
    }

    /// Coefficient of `d^alpha`.
    pub fn coeff(&self, alpha: MultiIndex) -> RatFun {
        self.terms.get(&alpha).cloned().unwrap_or_else(RatFun::zero)
    }

    /// Differential order.
    pub fn order(&self) -> u32 {
        self.terms
            .keys()
            .map(|a| a.iter().map(|&e| e as u32).sum())
            .max()
            .unwrap_or(0)
    }

    /// Sum.
    pub fn add(&self, other: &DiffOpExpr) -> OpResult<DiffOpExpr> {
        if self.chart != other.chart {
            return Err(OperatorError::ChartMismatch(
                self.chart.name,
                other.chart.name,
            ));
        }
        let mut out = self.clone();
        for (a, f) in &other.terms {
            out.add_term(*a, f.clone())?;
        }
        Ok(out)
    }

    /// Difference.
    pub fn sub(&self, other: &DiffOpExpr) -> OpResult<DiffOpExpr> {
        self.add(&other.scale(&RatFun::int(-1))?)
    }

    /// Left multiplication by a function.
    pub fn scale(&self, f: &RatFun) -> RfResult<DiffOpExpr> {
        let mut out = DiffOpExpr::zero(self.chart);
        for (a, c) in &self.terms {
            out.add_term(*a, c.mul(f)?)?;
        }
        Ok(out)
    }

    /// Composition `self o other` by the Leibniz rule.
    pub fn compose(&self, other: &DiffOpExpr) -> OpResult<DiffOpExpr> {
        if self.chart != other.chart {
            return Err(OperatorError::ChartMismatch(
                self.chart.name,
                other.chart.name,
            ));
        }
        let mut out = DiffOpExpr::zero(self.chart);
        for (alpha, a) in &self.terms {
            for (beta, b) in &other.terms {
                // d^alpha (b d^beta) = sum_{gamma <= alpha} C(alpha, gamma) (d^{alpha-gamma} b) d^{gamma+beta}
                for g0 in 0..=alpha[0] {
                    for g1 in 0..=alpha[1] {
                        for g2 in 0..=alpha[2] {
                            for g3 in 0..=alpha[3] {
                                let gamma = [g0, g1, g2, g3];
                                let mut db = b.clone();
                                let mut c: i64 = 1;
                                for i in 0..4 {
                                    for _ in 0..(alpha[i] - gamma[i]) {
                                        db = db.derive(self.chart.coords[i])?;
                                    }
                                    c *= binom(alpha[i], gamma[i]);
                                }
                                if db.is_zero() {
                                    continue;
                                }
                                let idx = [
                                    gamma[0] + beta[0],
                                    gamma[1] + beta[1],
                                    gamma[2] + beta[2],
                                    gamma[3] + beta[3],
                                ];
                                let t = a.mul(&db)?.scale(&crate::ratfun::qi(c));
                                out.add_term(idx, t)?;
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Apply to a function exactly.
    pub fn apply(&self, f: &RatFun) -> RfResult<RatFun> {
        let mut acc = RatFun::zero();
        for (alpha, a) in &self.terms {
            let mut d = f.clone();
            for i in 0..4 {
                for _ in 0..alpha[i] {
                    d = d.derive(self.chart.coords[i])?;
                }
            }
            if !d.is_zero() {
                acc = acc.add(&a.mul(&d)?)?;
            }
        }
        Ok(acc)
    }

    /// Apply numerically to a function given by a closure, with nested
    /// central differences and one Richardson step. Intended for
    /// consistency checks on smooth test functions.
    pub fn apply_numeric(&self, f: &dyn Fn([f64; 4]) -> f64, p: [f64; 4], h: f64) -> RfResult<f64> {
        let mut acc = 0.0;
        let fp = self.chart.fpoint(p);
        for (alpha, a) in &self.terms {
            let c = a.eval_f64(&fp)?;
            let d1 = numeric_partial(f, p, *alpha, h);
            let d2 = numeric_partial(f, p, *alpha, h / 2.0);
            let order = alpha.iter().map(|&e| e as i32).sum::<i32>();
            let d = if order == 0 {
                d1
            } else {
                (4.0 * d2 - d1) / 3.0
            };
            acc += c * d;
        }
        Ok(acc)
    }
}

/// Mixed partial derivative by nested second-order central differences.
pub fn numeric_partial(f: &dyn Fn([f64; 4]) -> f64, p: [f64; 4], alpha: MultiIndex, h: f64) -> f64 {
    if let Some(i) = (0..4).find(|&i| alpha[i] > 0) {
        let mut a = alpha;
        a[i] -= 1;
        let mut pp = p;
        let mut pm = p;
        pp[i] += h;
        pm[i] -= h;
        (numeric_partial(f, pp, a, h) - numeric_partial(f, pm, a, h)) / (2.0 * h)
    } else {
        f(p)
    }
}

impl fmt::Display for DiffOpExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .rev()
            .map(|(a, c)| {
                let mut ds = Vec::new();
                for i in 0..4 {
                    match a[i] {
                        0 => {}
                        1 => ds.push(format!("d_{}", self.chart.coords[i].name())),
                        e => ds.push(format!("d_{}^{}", self.chart.coords[i].name(), e)),
                    }
                }
                if ds.is_empty() {
                    format!("({c})")
                } else {
                    format!("({c}) {}", ds.join(" "))
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Which structure algebra.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Structure {
    /// `x d_x`.
    B,
    /// `x^2 d_x, d_y1, d_y2`.
    C,
    /// `x^3 d_x, x d_y1, x d_y2, d_theta`.
    A,
}

/// Generators of a structure algebra on the boundary chart. With
/// `twisted`, the third `a`-field is `x (d_y2 - y1 d_theta)`.
pub fn structure_fields(kind: Structure, twisted: bool) -> Vec<VectorFieldExpr> {
    let ch = Chart::boundary();
    let rf = |s: &str| RatFun::parse(s).expect("literal");
    let vf = |v: Var, s: &str| VectorFieldExpr::coordinate(ch, v, rf(s));
    match kind {
        Structure::B => vec![vf(Var::X, "x")],
        Structure::C => vec![vf(Var::X, "x^2"), vf(Var::Y1, "1"), vf(Var::Y2, "1")],
        Structure::A => {
            let third = if twisted {
                VectorFieldExpr::new(ch, [RatFun::zero(), RatFun::zero(), rf("x"), rf("-x*y1")])
            } else {
                vf(Var::Y2, "x")
            };
            vec![
                vf(Var::X, "x^3"),
                vf(Var::Y1, "x"),
                third,
                vf(Var::Theta, "1"),
            ]
        }
    }
}

/// Express `v` in the span of `fields`. Returns `None` if `v` is not in
/// the span over rational functions.
pub fn span_coefficients(
    fields: &[VectorFieldExpr],
    v: &VectorFieldExpr,
) -> RfResult<Option<Vec<RatFun>>> {
    let m: Vec<Vec<RatFun>> = (0..4)
        .map(|k| fields.iter().map(|f| f.coeffs[k].clone()).collect())
        .collect();
    crate::linalg::solve_exact(&m, &v.coeffs)
}

/// True when `f` is smooth at `x = 0`: its denominator does not vanish
/// identically there.
pub fn smooth_at_boundary(f: &RatFun) -> RfResult<bool> {
    let d0 = RatFun::from_poly(f.denom().clone()).substitute(&[(Var::X, RatFun::zero())])?;
    Ok(!d0.is_zero())
}

/// For every pair of generators, the bracket's coefficients in the span.
/// Fails (returns `Ok(None)` for that pair) if the bracket leaves the
/// span or needs coefficients singular at `x = 0`.
pub fn closure_coefficients(
    fields: &[VectorFieldExpr],
) -> OpResult<Vec<((usize, usize), Option<Vec<RatFun>>)>> {
    let mut out = Vec::new();
    for i in 0..fields.len() {
        for j in (i + 1)..fields.len() {
            let b = fields[i].lie_bracket(&fields[j])?;
            let c = span_coefficients(fields, &b)?;
            let c = match c {
                Some(c) if c.iter().all(|f| smooth_at_boundary(f).unwrap_or(false)) => Some(c),
                _ => None,
            };
            out.push(((i, j), c));
        }
    }
    Ok(out)
}

/// Sign convention for Laplacians.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum LaplacianSign {
    /// `div grad`, nonpositive spectrum.
    #[default]
    Analyst,
    /// `-div grad`, nonnegative spectrum.
    Geometer,
}

/// Laplace-Beltrami operator `|g|^{-1/2} d_i (|g|^{1/2} g^{ij} d_j)`.
///
/// The first-order part is computed as `d_i g^{ij} + g^{ij} d_i(log det g)/2`,
/// which stays rational even when `sqrt(det g)` has no closed form.
pub fn laplacian(g: &MetricField, sign: LaplacianSign) -> OpResult<DiffOpExpr> {
    g.require_rational()?;
    let chart = g.chart();
    let comps = g.components();
    let gi = inverse4(comps)?;
    let det = det4(comps)?;
    let mut op = DiffOpExpr::zero(chart);
    for i in 0..4 {
        for j in 0..4 {
            if gi[i][j].is_zero() {
                continue;
            }
            let mut a = [0u8; 4];
            a[i] += 1;
            a[j] += 1;
            op.add_term(a, gi[i][j].clone())?;
        }
    }
    let half = RatFun::frac(1, 2);
    for j in 0..4 {
        let mut b = RatFun::zero();
        for i in 0..4 {
            let v = chart.coords[i];
            b = b.add(&gi[i][j].derive(v)?)?;
            if !gi[i][j].is_zero() {
                let dl = det.derive(v)?.div(&det)?;
                b = b.add(&gi[i][j].mul(&dl)?.mul(&half)?)?;
            }
        }
        let mut a = [0u8; 4];
        a[j] = 1;
        op.add_term(a, b)?;
    }
    Ok(match sign {
        LaplacianSign::Analyst => op,
        LaplacianSign::Geometer => op.scale(&RatFun::int(-1))?,
    })
}

/// Result of the `a`-rescaling identity check.
#[derive(Clone, Debug)]
pub struct ARescaleReport {
    /// `x * Lap_GH`.
    pub lhs: DiffOpExpr,
    /// Sum of squares of `a`-fields plus the lower-order correction.
    pub rhs: DiffOpExpr,
    /// The correction `-x^5 d_x - 2 x^2 y1 d_y2 d_theta + x^2 y1^2 d_theta^2`.
    pub correction: DiffOpExpr,
    /// True when `lhs == rhs` as operators.
    pub holds: bool,
    /// True when `(x^3 d_x)^2 = x^6 d_x^2 + 3 x^5 d_x`.
    pub square_expansion_holds: bool,
}

/// Check `x * Lap_GH = (x^3 d_x)^2 + (x d_y1)^2 + (x d_y2)^2 + d_theta^2 + correction`.
pub fn a_rescale_identity() -> OpResult<ARescaleReport> {
    let ch = Chart::boundary();
    let rf = |s: &str| RatFun::parse(s).expect("literal");
    let lap = laplacian(&crate::geometry::metric_gh(), LaplacianSign::Analyst)?;
    let lhs = lap.scale(&rf("x"))?;
    let fields = structure_fields(Structure::A, false);
    let mut rhs = DiffOpExpr::zero(ch);
    for v in &fields {
        let op = DiffOpExpr::from_vector_field(v);
        rhs = rhs.add(&op.compose(&op)?)?;
    }
    let mut correction = DiffOpExpr::zero(ch);
    correction.add_term([1, 0, 0, 0], rf("-x^5"))?;
    correction.add_term([0, 0, 1, 1], rf("-2*x^2*y1"))?;
    correction.add_term([0, 0, 0, 2], rf("x^2*y1^2"))?;
    let rhs = rhs.add(&correction)?;
    let x3 = DiffOpExpr::from_vector_field(&fields[0]);
    let sq = x3.compose(&x3)?;
    let mut expect = DiffOpExpr::zero(ch);
    expect.add_term([2, 0, 0, 0], rf("x^6"))?;
    expect.add_term([1, 0, 0, 0], rf("3*x^5"))?;
    Ok(ARescaleReport {
        holds: lhs == rhs,
        square_expansion_holds: sq == expect,
        lhs,
        rhs,
        correction,
    })
}

/// Evaluate the coefficients of an operator at a floating-point point.
pub fn eval_coeffs(op: &DiffOpExpr, p: &FPoint) -> RfResult<Vec<(MultiIndex, f64)>> {
    op.terms().map(|(a, c)| Ok((*a, c.eval_f64(p)?))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::metric_gh;

    fn rf(s: &str) -> RatFun {
        RatFun::parse(s).unwrap()
    }

    #[test]
    fn bracket_examples() {
        let a = structure_fields(Structure::A, true);
        let b = a[0].lie_bracket(&a[1]).unwrap();
        assert_eq!(
            b,
            VectorFieldExpr::coordinate(Chart::boundary(), Var::Y1, rf("x^3"))
        );
        let b = a[1].lie_bracket(&a[2]).unwrap();
        assert_eq!(
            b,
            VectorFieldExpr::coordinate(Chart::boundary(), Var::Theta, rf("-x^2"))
        );
    }

    #[test]
    fn structure_algebras_close() {
        for kind in [Structure::A, Structure::B, Structure::C] {
            for twisted in [false, true] {
                let f = structure_fields(kind, twisted);
                for (pair, c) in closure_coefficients(&f).unwrap() {
                    assert!(
                        c.is_some(),
                        "{kind:?} twisted={twisted} pair {pair:?} not closed"
                    );
                }
            }
        }
    }

    #[test]
    fn gh_laplacian_closed_form() {
        let lap = laplacian(&metric_gh(), LaplacianSign::Analyst).unwrap();
        let ch = Chart::boundary();
        let mut e = DiffOpExpr::zero(ch);
        e.add_term([2, 0, 0, 0], rf("x^5")).unwrap();
        e.add_term([1, 0, 0, 0], rf("2*x^4")).unwrap();
        e.add_term([0, 2, 0, 0], rf("x")).unwrap();
        e.add_term([0, 0, 2, 0], rf("x")).unwrap();
        e.add_term([0, 0, 1, 1], rf("-2*x*y1")).unwrap();
        e.add_term([0, 0, 0, 2], rf("x^-1 + x*y1^2")).unwrap();
        assert_eq!(lap, e);
        let geo = laplacian(&metric_gh(), LaplacianSign::Geometer).unwrap();
        assert_eq!(geo, e.scale(&RatFun::int(-1)).unwrap());
    }

    #[test]
    fn rescale_identity_holds() {
        let r = a_rescale_identity().unwrap();
        assert!(r.holds);
        assert!(r.square_expansion_holds);
    }

    #[test]
    fn compose_matches_sequential_application() {
        let ch = Chart::boundary();
        let v = DiffOpExpr::from_vector_field(&VectorFieldExpr::coordinate(ch, Var::X, rf("x^3")));
        let w = DiffOpExpr::from_vector_field(&VectorFieldExpr::new(
            ch,
            [RatFun::zero(), RatFun::zero(), rf("x"), rf("-x*y1")],
        ));
        let f = rf("x^2*y2 + theta*y1/(1 + x)");
        let vw = v.compose(&w).unwrap();
        assert_eq!(
            vw.apply(&f).unwrap(),
            v.apply(&w.apply(&f).unwrap()).unwrap()
        );
    }
}

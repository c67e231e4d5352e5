//! Metrics on the boundary chart and their exact curvature.
//!
//! The boundary chart has coordinates `(x, y1, y2, theta)` where `x` is a
//! boundary defining function, `(y1, y2)` are coordinates on the base torus
//! and `theta` is the circle fibre coordinate. The fibration is twisted:
//! the connection form is `Theta = d theta + y1 dy2`. An inverted chart
//! `(r, y1, y2, theta)` with `r = 1/x` is used for the self-dual 2-forms.
//!
//! A [`MetricField`] is `x^p * G` with `G` a symmetric matrix of rational
//! functions and `p` a rational exponent. The extra factor accommodates the
//! Calabi model metrics, whose coefficients carry powers `x^(-2/n)`. All
//! curvature quantities remain exact: Christoffel symbols, the `(1,3)`
//! Riemann tensor and the Ricci tensor are invariant under constant
//! rescaling and pick up only `p/x` corrections, while the scalar curvature
//! and volume density are returned as an explicit power of `x` times a
//! rational function.
//!
//! Conventions: `R^l_{kij} = dx^l(R(d_i, d_j) d_k)` with
//! `R(X, Y) = [nabla_X, nabla_Y] - nabla_[X,Y]`, stored as
//! `riemann[l][k][i][j]`, and `Ric_{jk} = R^i_{jik}`. With these choices the
//! round sphere has positive Ricci curvature.

use crate::ratfun::{q, qi, FPoint, Point, RatFun, RatFunError, RfResult, Var};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use thiserror::Error;

/// Errors from metric construction and curvature.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum GeometryError {
    #[error("metric is not symmetric: g[{0}][{1}] != g[{1}][{0}]")]
    NotSymmetric(usize, usize),
    #[error("metric is degenerate: determinant vanishes identically")]
    Degenerate,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("operation requires integral x-power, metric carries x^{0}")]
    FractionalPower(String),
    #[error("no closed-form square root for {0}")]
    NoClosedFormRoot(String),
    #[error(transparent)]
    RatFun(#[from] RatFunError),
}

/// Result alias for geometry operations.
pub type GeoResult<T> = Result<T, GeometryError>;

/// A coordinate chart: four coordinate variables in orientation order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Chart {
    /// Short name used in reports.
    pub name: &'static str,
    /// Coordinates; `dv0 ^ dv1 ^ dv2 ^ dv3` is positively oriented.
    pub coords: [Var; 4],
}

impl Chart {
    /// The boundary chart `(x, y1, y2, theta)`.
    pub const fn boundary() -> Self {
        Chart {
            name: "x-chart",
            coords: [Var::X, Var::Y1, Var::Y2, Var::Theta],
        }
    }

    /// The inverted chart `(r, y1, y2, theta)` with `r = 1/x`.
    pub const fn inverted() -> Self {
        Chart {
            name: "r-chart",
            coords: [Var::R, Var::Y1, Var::Y2, Var::Theta],
        }
    }

    /// Position of a variable among the coordinates.
    pub fn index_of(&self, v: Var) -> Option<usize> {
        self.coords.iter().position(|&c| c == v)
    }

    /// Default domain of the boundary chart: `x in (0, 1/2]`, `y in [0, 1)`.
    /// The fibre coordinate is unrestricted.
    pub fn in_default_domain(&self, p: [f64; 4]) -> bool {
        match self.coords[0] {
            Var::X => {
                p[0] > 0.0
                    && p[0] <= 0.5
                    && (0.0..1.0).contains(&p[1])
                    && (0.0..1.0).contains(&p[2])
            }
            Var::R => p[0] >= 2.0 && (0.0..1.0).contains(&p[1]) && (0.0..1.0).contains(&p[2]),
            _ => true,
        }
    }

    /// Exact evaluation point from four rationals.
    pub fn point(&self, vals: &[BigRational; 4]) -> Point {
        let mut p = Point::new();
        for (v, c) in self.coords.iter().zip(vals.iter()) {
            p.set(*v, c.clone());
        }
        p
    }

    /// Floating-point evaluation point from four values.
    pub fn fpoint(&self, vals: [f64; 4]) -> FPoint {
        let mut p = FPoint::new();
        for (v, c) in self.coords.iter().zip(vals.iter()) {
            p.set(*v, *c);
        }
        p
    }
}

/// A rational function times a rational power of `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct Scaled {
    /// Exponent of `x`; kept in `[0, 1)` after normalization.
    pub x_power: BigRational,
    /// Rational factor.
    pub factor: RatFun,
}

impl Scaled {
    /// Normalize by folding the integral part of the exponent into the factor.
    pub fn new(x_power: BigRational, factor: RatFun) -> RfResult<Self> {
        let fl = x_power.floor();
        let k = fl.to_integer().to_i32().expect("small exponent");
        let factor = if k != 0 {
            factor.mul(&RatFun::var_pow(Var::X, k))?
        } else {
            factor
        };
        Ok(Scaled {
            x_power: x_power - fl,
            factor,
        })
    }

    /// The exact rational function, if the exponent is integral.
    pub fn as_ratfun(&self) -> Option<&RatFun> {
        if self.x_power.is_zero() {
            Some(&self.factor)
        } else {
            None
        }
    }

    /// Floating-point value.
    pub fn eval_f64(&self, p: &FPoint) -> RfResult<f64> {
        let f = self.factor.eval_f64(p)?;
        if self.x_power.is_zero() {
            return Ok(f);
        }
        let x = p.get(Var::X).ok_or(RatFunError::Unbound(Var::X))?;
        Ok(f * x.powf(crate::ratfun::rat_to_f64(&self.x_power)))
    }

    /// True when the value is identically zero.
    pub fn is_zero(&self) -> bool {
        self.factor.is_zero()
    }
}

impl std::fmt::Display for Scaled {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.x_power.is_zero() {
            write!(f, "{}", self.factor)
        } else {
            write!(
                f,
                "x^({}) * ({})",
                crate::ratfun::fmt_q(&self.x_power),
                self.factor
            )
        }
    }
}

/// A symmetric 4x4 metric `x^p * G`.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricField {
    chart: Chart,
    x_power: BigRational,
    comps: [[RatFun; 4]; 4],
}

/// A 4x4 matrix of rational functions.
pub type Mat4 = [[RatFun; 4]; 4];

fn zero_mat() -> Mat4 {
    std::array::from_fn(|_| std::array::from_fn(|_| RatFun::zero()))
}

fn rf(s: &str) -> RatFun {
    RatFun::parse(s).expect("valid literal")
}

/// Exact determinant of a 4x4 rational matrix by cofactor expansion.
pub fn det4(m: &Mat4) -> RfResult<RatFun> {
    let mut acc = RatFun::zero();
    for j in 0..4 {
        if m[0][j].is_zero() {
            continue;
        }
        let minor = minor3(m, 0, j)?;
        let term = m[0][j].mul(&minor)?;
        acc = if j % 2 == 0 {
            acc.add(&term)?
        } else {
            acc.sub(&term)?
        };
    }
    Ok(acc)
}

fn minor3(m: &Mat4, r: usize, c: usize) -> RfResult<RatFun> {
    let rows: Vec<usize> = (0..4).filter(|&i| i != r).collect();
    let cols: Vec<usize> = (0..4).filter(|&j| j != c).collect();
    let e = |i: usize, j: usize| &m[rows[i]][cols[j]];
    let t1 = e(0, 0).mul(&e(1, 1).mul(e(2, 2))?.sub(&e(1, 2).mul(e(2, 1))?)?)?;
    let t2 = e(0, 1).mul(&e(1, 0).mul(e(2, 2))?.sub(&e(1, 2).mul(e(2, 0))?)?)?;
    let t3 = e(0, 2).mul(&e(1, 0).mul(e(2, 1))?.sub(&e(1, 1).mul(e(2, 0))?)?)?;
    t1.sub(&t2)?.add(&t3)
}

/// Exact inverse of a 4x4 rational matrix via the adjugate.
pub fn inverse4(m: &Mat4) -> GeoResult<Mat4> {
    let det = det4(m)?;
    if det.is_zero() {
        return Err(GeometryError::Degenerate);
    }
    let mut inv = zero_mat();
    for i in 0..4 {
        for j in 0..4 {
            let c = minor3(m, j, i)?;
            let c = if (i + j) % 2 == 0 { c } else { c.neg() };
            inv[i][j] = c.div(&det)?;
        }
    }
    Ok(inv)
}

/// Exact square root of a rational function whose numerator and
/// denominator are single terms with even exponents and square coefficients.
pub fn sqrt_monomial(f: &RatFun) -> Option<RatFun> {
    use crate::ratfun::{Monomial, Poly};
    fn sqrt_term(p: &Poly) -> Option<Poly> {
        if p.len() != 1 {
            return None;
        }
        let (m, c) = &p.terms()[0];
        if c.is_negative() {
            return None;
        }
        let n = c.numer().sqrt();
        let d = c.denom().sqrt();
        if &(&n * &n) != c.numer() || &(&d * &d) != c.denom() {
            return None;
        }
        let mut half = [0u16; crate::ratfun::NVARS];
        for (h, e) in half.iter_mut().zip(m.0.iter()) {
            if e % 2 != 0 {
                return None;
            }
            *h = e / 2;
        }
        Some(Poly::term(BigRational::new(n, d), Monomial(half)))
    }
    if f.is_zero() {
        return Some(RatFun::zero());
    }
    let n = sqrt_term(f.numer())?;
    let d = sqrt_term(f.denom())?;
    RatFun::from_parts(n, d).ok()
}

/// Volume density of a metric: exact when available, otherwise evaluated
/// pointwise as `sqrt(det g)`.
#[derive(Clone, Debug)]
pub enum VolumeDensity {
    /// Closed form `x^p * f`.
    Exact(Scaled),
    /// No closed-form root; evaluate numerically.
    Numeric(Box<MetricField>),
}

impl VolumeDensity {
    /// Floating-point value at a point.
    pub fn eval_f64(&self, p: &FPoint) -> RfResult<f64> {
        match self {
            VolumeDensity::Exact(s) => s.eval_f64(p),
            VolumeDensity::Numeric(g) => {
                let m = g.eval_f64(p)?;
                let m = nalgebra::Matrix4::from_fn(|i, j| m[i][j]);
                Ok(m.determinant().abs().sqrt())
            }
        }
    }

    /// The exact closed form, if one was found.
    pub fn exact(&self) -> Option<&Scaled> {
        match self {
            VolumeDensity::Exact(s) => Some(s),
            VolumeDensity::Numeric(_) => None,
        }
    }
}

impl MetricField {
    /// Build and validate a metric `x^p * comps`.
    pub fn new(chart: Chart, x_power: BigRational, comps: Mat4) -> GeoResult<Self> {
        for i in 0..4 {
            for j in (i + 1)..4 {
                if comps[i][j] != comps[j][i] {
                    return Err(GeometryError::NotSymmetric(i, j));
                }
            }
        }
        if !x_power.is_zero() && chart.coords[0] != Var::X {
            return Err(GeometryError::InvalidParameter(
                "an x-power factor needs the boundary chart".into(),
            ));
        }
        let fl = x_power.floor();
        let k = fl.to_integer().to_i32().expect("small exponent");
        let comps = if k != 0 {
            let s = RatFun::var_pow(Var::X, k);
            let mut out = zero_mat();
            for i in 0..4 {
                for j in 0..4 {
                    out[i][j] = comps[i][j].mul(&s)?;
                }
            }
            out
        } else {
            comps
        };
        if det4(&comps)?.is_zero() {
            return Err(GeometryError::Degenerate);
        }
        Ok(MetricField {
            chart,
            x_power: x_power - fl,
            comps,
        })
    }

    /// Chart.
    pub fn chart(&self) -> Chart {
        self.chart
    }

    /// Fractional power of `x` multiplying the rational components.
    pub fn x_power(&self) -> &BigRational {
        &self.x_power
    }

    /// Rational components (without the `x^p` factor).
    pub fn components(&self) -> &Mat4 {
        &self.comps
    }

    /// Component `g_ij` as an exact rational function, if `p = 0`.
    pub fn component(&self, i: usize, j: usize) -> GeoResult<&RatFun> {
        self.require_rational()?;
        Ok(&self.comps[i][j])
    }

    /// Error unless the metric has rational components.
    pub fn require_rational(&self) -> GeoResult<()> {
        if self.x_power.is_zero() {
            Ok(())
        } else {
            Err(GeometryError::FractionalPower(crate::ratfun::fmt_q(
                &self.x_power,
            )))
        }
    }

    /// Determinant as `x^(4p) * det G`.
    pub fn det(&self) -> GeoResult<Scaled> {
        let d = det4(&self.comps)?;
        Ok(Scaled::new(&self.x_power * qi(4), d)?)
    }

    /// Inverse metric as `x^(-p) * G^{-1}`; returns the exponent and matrix.
    pub fn inverse(&self) -> GeoResult<(BigRational, Mat4)> {
        Ok((-self.x_power.clone(), inverse4(&self.comps)?))
    }

    /// Floating-point components including the `x^p` factor.
    pub fn eval_f64(&self, p: &FPoint) -> RfResult<[[f64; 4]; 4]> {
        let scale = if self.x_power.is_zero() {
            1.0
        } else {
            let x = p.get(Var::X).ok_or(RatFunError::Unbound(Var::X))?;
            x.powf(crate::ratfun::rat_to_f64(&self.x_power))
        };
        let mut out = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                out[i][j] = scale * self.comps[i][j].eval_f64(p)?;
            }
        }
        Ok(out)
    }

    /// Multiply by a rational conformal factor.
    pub fn conformal(&self, f: &RatFun) -> GeoResult<MetricField> {
        let mut out = zero_mat();
        for i in 0..4 {
            for j in 0..4 {
                out[i][j] = self.comps[i][j].mul(f)?;
            }
        }
        MetricField::new(self.chart, self.x_power.clone(), out)
    }
}

/// The Gibbons-Hawking model metric
/// `x^-5 dx^2 + x^-1 (dy1^2 + dy2^2) + x Theta^2`, `Theta = d theta + y1 dy2`.
pub fn metric_gh() -> MetricField {
    let mut g = zero_mat();
    g[0][0] = rf("x^-5");
    g[1][1] = rf("x^-1");
    g[2][2] = rf("x^-1 + x*y1^2");
    g[3][3] = rf("x");
    g[2][3] = rf("x*y1");
    g[3][2] = rf("x*y1");
    MetricField::new(Chart::boundary(), BigRational::zero(), g).expect("valid metric")
}

/// The Gibbons-Hawking metric in the inverted chart `r = 1/x`:
/// `r (dr^2 + dy1^2 + dy2^2) + r^-1 Theta^2`.
pub fn metric_gh_inverted() -> MetricField {
    let mut g = zero_mat();
    g[0][0] = rf("r");
    g[1][1] = rf("r");
    g[2][2] = rf("r + y1^2/r");
    g[3][3] = rf("1/r");
    g[2][3] = rf("y1/r");
    g[3][2] = rf("y1/r");
    MetricField::new(Chart::inverted(), BigRational::zero(), g).expect("valid metric")
}

/// The rescaled metric `x^-1 * g_GH` whose structure algebra is spanned by
/// `x^3 d_x, x d_y1, x d_y2, d_theta`.
pub fn metric_a() -> MetricField {
    metric_gh().conformal(&rf("x^-1")).expect("valid metric")
}

/// The compactified model `x * g_GH`.
pub fn metric_model() -> MetricField {
    metric_gh().conformal(&rf("x")).expect("valid metric")
}

/// The flat metric on the boundary chart.
pub fn metric_flat() -> MetricField {
    let mut g = zero_mat();
    for (i, row) in g.iter_mut().enumerate() {
        row[i] = RatFun::one();
    }
    MetricField::new(Chart::boundary(), BigRational::zero(), g).expect("valid metric")
}

/// The Calabi model metric for `n >= 2` over a flat torus:
/// `x^(-2/n-4) dx^2 + x^(-2/n) (dy1^2 + dy2^2) + x^(2-2/n) Theta^2`.
/// For `n = 2` this is exactly [`metric_gh`].
pub fn metric_calabi(n: u32) -> GeoResult<MetricField> {
    if n < 2 {
        return Err(GeometryError::InvalidParameter(format!(
            "Calabi model needs n >= 2, got {n}"
        )));
    }
    // Factor out x^(-2/n): the remaining matrix is x^-4 dx^2 + dy^2 + x^2 Theta^2.
    let mut g = zero_mat();
    g[0][0] = rf("x^-4");
    g[1][1] = RatFun::one();
    g[2][2] = rf("1 + x^2*y1^2");
    g[3][3] = rf("x^2");
    g[2][3] = rf("x^2*y1");
    g[3][2] = rf("x^2*y1");
    MetricField::new(Chart::boundary(), q(-2, n as i64), g)
}

/// Exact curvature of a metric.
#[derive(Clone, Debug)]
pub struct Curvature {
    /// `christoffel[l][i][j] = Gamma^l_{ij}`.
    pub christoffel: [[[RatFun; 4]; 4]; 4],
    /// `riemann[l][k][i][j] = R^l_{kij}`.
    pub riemann: Vec<RatFun>,
    /// `ricci[j][k] = Ric_{jk}`.
    pub ricci: Mat4,
    /// Scalar curvature `g^{jk} Ric_{jk}`.
    pub scalar: Scaled,
}

impl Curvature {
    /// `R^l_{kij}`.
    pub fn riemann(&self, l: usize, k: usize, i: usize, j: usize) -> &RatFun {
        &self.riemann[((l * 4 + k) * 4 + i) * 4 + j]
    }

    /// True when every Ricci component vanishes identically.
    pub fn ricci_flat(&self) -> bool {
        self.ricci.iter().flatten().all(RatFun::is_zero)
    }

    /// Maximum over the first Bianchi cyclic sums; zero when the identity holds.
    pub fn first_bianchi_violations(&self) -> RfResult<usize> {
        let mut bad = 0;
        for l in 0..4 {
            for k in 0..4 {
                for i in 0..4 {
                    for j in 0..4 {
                        let s = self
                            .riemann(l, k, i, j)
                            .add(self.riemann(l, i, j, k))?
                            .add(self.riemann(l, j, k, i))?;
                        if !s.is_zero() {
                            bad += 1;
                        }
                    }
                }
            }
        }
        Ok(bad)
    }
}

/// Christoffel symbols `Gamma^l_{ij}`.
pub fn christoffel(g: &MetricField) -> GeoResult<[[[RatFun; 4]; 4]; 4]> {
    let chart = g.chart;
    let gi = inverse4(&g.comps)?;
    let p = RatFun::constant(g.x_power.clone());
    let p_over_x = p.div(&RatFun::var(Var::X))?;
    // dg[m][i][j] = x^-p d_m (x^p G_ij)
    let mut dg: Vec<RatFun> = Vec::with_capacity(64);
    for m in 0..4 {
        for i in 0..4 {
            for j in 0..4 {
                let mut d = g.comps[i][j].derive(chart.coords[m])?;
                if chart.coords[m] == Var::X && !g.x_power.is_zero() {
                    d = d.add(&g.comps[i][j].mul(&p_over_x)?)?;
                }
                dg.push(d);
            }
        }
    }
    let at = |m: usize, i: usize, j: usize| &dg[(m * 4 + i) * 4 + j];
    let half = RatFun::frac(1, 2);
    let entries: Vec<RfResult<RatFun>> = (0..64)
        .into_par_iter()
        .map(|idx| {
            let (l, i, j) = (idx / 16, (idx / 4) % 4, idx % 4);
            let mut acc = RatFun::zero();
            for m in 0..4 {
                if gi[l][m].is_zero() {
                    continue;
                }
                let s = at(i, j, m).add(at(j, i, m))?.sub(at(m, i, j))?;
                acc = acc.add(&gi[l][m].mul(&s)?)?;
            }
            acc.mul(&half)
        })
        .collect();
    let mut out: [[[RatFun; 4]; 4]; 4] = Default::default();
    for (idx, e) in entries.into_iter().enumerate() {
        out[idx / 16][(idx / 4) % 4][idx % 4] = e?;
    }
    Ok(out)
}

/// Full curvature: Christoffel symbols, Riemann, Ricci and scalar curvature.
pub fn curvature(g: &MetricField) -> GeoResult<Curvature> {
    let chart = g.chart;
    let gam = christoffel(g)?;
    let mut dgam: Vec<RatFun> = Vec::with_capacity(256);
    for m in 0..4 {
        for l in 0..4 {
            for i in 0..4 {
                for j in 0..4 {
                    dgam.push(gam[l][i][j].derive(chart.coords[m])?);
                }
            }
        }
    }
    let d = |m: usize, l: usize, i: usize, j: usize| &dgam[((m * 4 + l) * 4 + i) * 4 + j];
    let entries: Vec<RfResult<RatFun>> = (0..256)
        .into_par_iter()
        .map(|idx| {
            let (l, k, i, j) = (idx / 64, (idx / 16) % 4, (idx / 4) % 4, idx % 4);
            if i == j {
                return Ok(RatFun::zero());
            }
            let mut acc = d(i, l, j, k).sub(d(j, l, i, k))?;
            for m in 0..4 {
                acc = acc.add(&gam[l][i][m].mul(&gam[m][j][k])?)?;
                acc = acc.sub(&gam[l][j][m].mul(&gam[m][i][k])?)?;
            }
            Ok(acc)
        })
        .collect();
    let riemann: Vec<RatFun> = entries.into_iter().collect::<RfResult<_>>()?;
    let rm = |l: usize, k: usize, i: usize, j: usize| &riemann[((l * 4 + k) * 4 + i) * 4 + j];
    let mut ricci = zero_mat();
    for j in 0..4 {
        for k in 0..4 {
            let mut acc = RatFun::zero();
            for i in 0..4 {
                acc = acc.add(rm(i, j, i, k))?;
            }
            ricci[j][k] = acc;
        }
    }
    let gi = inverse4(&g.comps)?;
    let mut s = RatFun::zero();
    for j in 0..4 {
        for k in 0..4 {
            if !gi[j][k].is_zero() && !ricci[j][k].is_zero() {
                s = s.add(&gi[j][k].mul(&ricci[j][k])?)?;
            }
        }
    }
    let scalar = Scaled::new(-g.x_power.clone(), s)?;
    Ok(Curvature {
        christoffel: gam,
        riemann,
        ricci,
        scalar,
    })
}

/// Volume density `sqrt(det g)`.
pub fn volume_density(g: &MetricField) -> GeoResult<VolumeDensity> {
    let d = det4(&g.comps)?;
    match sqrt_monomial(&d) {
        Some(root) => Ok(VolumeDensity::Exact(Scaled::new(&g.x_power * qi(2), root)?)),
        None => Ok(VolumeDensity::Numeric(Box::new(g.clone()))),
    }
}

/// Exact volume density, or an error naming the determinant.
pub fn volume_density_exact(g: &MetricField) -> GeoResult<Scaled> {
    match volume_density(g)? {
        VolumeDensity::Exact(s) => Ok(s),
        VolumeDensity::Numeric(_) => {
            Err(GeometryError::NoClosedFormRoot(det4(&g.comps)?.to_string()))
        }
    }
}

/// The one-form `Theta = d theta + y1 dy2` as coefficients on the chart.
pub fn connection_form() -> [RatFun; 4] {
    [
        RatFun::zero(),
        RatFun::zero(),
        RatFun::var(Var::Y1),
        RatFun::one(),
    ]
}

#[allow(dead_code)]
fn is_one(x: &BigRational) -> bool {
    x.is_one()
}

//! Differential forms with rational coefficients.
//!
//! A [`FormField`] of degree `k` on a chart stores one coefficient per
//! strictly increasing index tuple, encoded as a 4-bit mask over the chart
//! coordinates. Orientation is the chart's coordinate order:
//! `dv0 ^ dv1 ^ dv2 ^ dv3` is positive. On the boundary chart this is
//! `dx ^ dy1 ^ dy2 ^ dtheta`; on the inverted chart it is
//! `dr ^ dy1 ^ dy2 ^ dtheta`.
//!
//! The Hodge star is defined by `a ^ *b = <a, b> vol` and requires an exact
//! volume density. The codifferential is `delta = - * d *` (dimension four),
//! which makes `delta d` nonnegative on functions: `delta d f = -Lap f`
//! where `Lap` is the Laplace-Beltrami operator with the analyst's sign.

use crate::geometry::{inverse4, sqrt_monomial, Chart, GeometryError, Mat4, MetricField};
use crate::ratfun::{RatFun, RatFunError, Var};
use std::fmt;
use thiserror::Error;

/// Errors from form operations.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum FormsError {
    #[error("forms live on different charts: {0} vs {1}")]
    ChartMismatch(&'static str, &'static str),
    #[error("operation needs a {expected}-form, got degree {got}")]
    DegreeMismatch { expected: usize, got: usize },
    #[error("self-duality check failed: {0}")]
    NotSelfDual(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    RatFun(#[from] RatFunError),
}

/// Result alias for forms.
pub type FormResult<T> = Result<T, FormsError>;

/// Sign of the shuffle that sorts `a` followed by `b` (disjoint masks).
pub fn shuffle_sign(a: u8, b: u8) -> i64 {
    let mut inversions = 0;
    for i in 0..4 {
        if a & (1 << i) != 0 {
            for j in 0..i {
                if b & (1 << j) != 0 {
                    inversions += 1;
                }
            }
        }
    }
    if inversions % 2 == 0 {
        1
    } else {
        -1
    }
}

fn indices(mask: u8) -> Vec<usize> {
    (0..4).filter(|i| mask & (1 << i) != 0).collect()
}

/// A differential form of fixed degree with rational coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct FormField {
    chart: Chart,
    degree: usize,
    coeffs: [RatFun; 16],
}

impl FormField {
    /// The zero `k`-form. Degrees above four are allowed and always zero.
    pub fn zero(chart: Chart, degree: usize) -> Self {
        FormField {
            chart,
            degree,
            coeffs: Default::default(),
        }
    }

    /// A function as a 0-form.
    pub fn function(chart: Chart, f: RatFun) -> Self {
        let mut w = FormField::zero(chart, 0);
        w.coeffs[0] = f;
        w
    }

    /// The coordinate form `dv_i` for chart index `i`.
    pub fn coordinate(chart: Chart, i: usize) -> Self {
        let mut w = FormField::zero(chart, 1);
        w.coeffs[1 << i] = RatFun::one();
        w
    }

    /// The coordinate form `dv` for a chart variable.
    pub fn d(chart: Chart, v: Var) -> Self {
        let i = chart.index_of(v).expect("variable belongs to chart");
        FormField::coordinate(chart, i)
    }

    /// A 1-form from its four coefficients.
    pub fn one_form(chart: Chart, c: [RatFun; 4]) -> Self {
        let mut w = FormField::zero(chart, 1);
        for (i, ci) in c.into_iter().enumerate() {
            w.coeffs[1 << i] = ci;
        }
        w
    }

    /// The positively oriented coordinate volume form.
    pub fn coordinate_volume(chart: Chart) -> Self {
        let mut w = FormField::zero(chart, 4);
        w.coeffs[15] = RatFun::one();
        w
    }

    /// Degree.
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Chart.
    pub fn chart(&self) -> Chart {
        self.chart
    }

    /// Coefficient on `dv_I` where `I` is given by a bitmask.
    pub fn coeff(&self, mask: u8) -> &RatFun {
        &self.coeffs[mask as usize]
    }

    /// Coefficient on `dv_{i1} ^ ... ^ dv_{ik}` for increasing indices.
    pub fn coeff_at(&self, idx: &[usize]) -> &RatFun {
        let mask = idx.iter().fold(0u8, |m, &i| m | (1 << i));
        &self.coeffs[mask as usize]
    }

    /// Set the coefficient on a mask.
    pub fn set(&mut self, mask: u8, f: RatFun) {
        debug_assert_eq!(mask.count_ones() as usize, self.degree);
        self.coeffs[mask as usize] = f;
    }

    /// Nonzero components as `(mask, coefficient)`.
    pub fn components(&self) -> impl Iterator<Item = (u8, &RatFun)> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(m, c)| (m as u8, c))
    }

    /// True when every coefficient vanishes identically.
    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(RatFun::is_zero)
    }

    fn same_chart(&self, other: &FormField) -> FormResult<()> {
        if self.chart != other.chart {
            return Err(FormsError::ChartMismatch(self.chart.name, other.chart.name));
        }
        Ok(())
    }

    /// Sum of two forms of equal degree.
    pub fn add(&self, other: &FormField) -> FormResult<FormField> {
        self.same_chart(other)?;
        if self.degree != other.degree {
            return Err(FormsError::DegreeMismatch {
                expected: self.degree,
                got: other.degree,
            });
        }
        let mut out = self.clone();
        for m in 0..16 {
            out.coeffs[m] = self.coeffs[m].add(&other.coeffs[m])?;
        }
        Ok(out)
    }

    /// Difference of two forms of equal degree.
    pub fn sub(&self, other: &FormField) -> FormResult<FormField> {
        self.add(&other.scale(&RatFun::int(-1))?)
    }

    /// Multiply by a function.
    pub fn scale(&self, f: &RatFun) -> FormResult<FormField> {
        let mut out = self.clone();
        for m in 0..16 {
            out.coeffs[m] = self.coeffs[m].mul(f)?;
        }
        Ok(out)
    }

    /// Wedge product. Degrees above four give the zero form.
    pub fn wedge(&self, other: &FormField) -> FormResult<FormField> {
        self.same_chart(other)?;
        let mut out = FormField::zero(self.chart, self.degree + other.degree);
        if out.degree > 4 {
            return Ok(out);
        }
        for (a, ca) in self.components() {
            for (b, cb) in other.components() {
                if a & b != 0 {
                    continue;
                }
                let t = ca.mul(cb)?;
                let t = if shuffle_sign(a, b) < 0 { t.neg() } else { t };
                let m = (a | b) as usize;
                out.coeffs[m] = out.coeffs[m].add(&t)?;
            }
        }
        Ok(out)
    }

    /// Exterior derivative.
    pub fn ext_d(&self) -> FormResult<FormField> {
        let mut out = FormField::zero(self.chart, self.degree + 1);
        if out.degree > 4 {
            return Ok(out);
        }
        for (a, ca) in self.components() {
            for m in 0..4 {
                let bit = 1u8 << m;
                if a & bit != 0 {
                    continue;
                }
                let dc = ca.derive(self.chart.coords[m])?;
                if dc.is_zero() {
                    continue;
                }
                let t = if shuffle_sign(bit, a) < 0 {
                    dc.neg()
                } else {
                    dc
                };
                let k = (a | bit) as usize;
                out.coeffs[k] = out.coeffs[k].add(&t)?;
            }
        }
        Ok(out)
    }

    /// Hodge star with respect to a rational metric on the same chart.
    pub fn hodge_star(&self, g: &MetricField) -> FormResult<FormField> {
        let star = HodgeStar::new(g)?;
        star.apply(self)
    }

    /// Codifferential `delta = - * d *`.
    pub fn codifferential(&self, g: &MetricField) -> FormResult<FormField> {
        let star = HodgeStar::new(g)?;
        let s = star.apply(self)?;
        let ds = s.ext_d()?;
        let out = star.apply(&ds)?;
        out.scale(&RatFun::int(-1))
    }

    /// Split a 2-form into self-dual and anti-self-dual parts.
    pub fn sd_asd_split(&self, g: &MetricField) -> FormResult<(FormField, FormField)> {
        if self.degree != 2 {
            return Err(FormsError::DegreeMismatch {
                expected: 2,
                got: self.degree,
            });
        }
        let s = self.hodge_star(g)?;
        let half = RatFun::frac(1, 2);
        let plus = self.add(&s)?.scale(&half)?;
        let minus = self.sub(&s)?.scale(&half)?;
        Ok((plus, minus))
    }

    /// Coefficient of a top form relative to the coordinate volume form.
    pub fn top_coefficient(&self) -> FormResult<&RatFun> {
        if self.degree != 4 {
            return Err(FormsError::DegreeMismatch {
                expected: 4,
                got: self.degree,
            });
        }
        Ok(&self.coeffs[15])
    }

    /// Floating-point coefficients at a point, indexed by mask.
    pub fn eval_f64(&self, p: &crate::ratfun::FPoint) -> FormResult<[f64; 16]> {
        let mut out = [0.0; 16];
        for (m, c) in self.components() {
            out[m as usize] = c.eval_f64(p)?;
        }
        Ok(out)
    }
}

impl fmt::Display for FormField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .components()
            .map(|(m, c)| {
                let basis: Vec<String> = indices(m)
                    .into_iter()
                    .map(|i| format!("d{}", self.chart.coords[i].name()))
                    .collect();
                if m == 0 {
                    format!("({c})")
                } else {
                    format!("({c}) {}", basis.join("^"))
                }
            })
            .collect();
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}

/// Precomputed Hodge star for a metric: `*dv^I = sum_J table[I][J] dv^J`.
pub struct HodgeStar {
    chart: Chart,
    table: Vec<[RatFun; 16]>,
}

/// Determinant of the `I x K` submatrix of a 4x4 matrix.
fn sub_det(m: &Mat4, rows: &[usize], cols: &[usize]) -> Result<RatFun, RatFunError> {
    match rows.len() {
        0 => Ok(RatFun::one()),
        1 => Ok(m[rows[0]][cols[0]].clone()),
        _ => {
            let mut acc = RatFun::zero();
            for (j, &c) in cols.iter().enumerate() {
                let e = &m[rows[0]][c];
                if e.is_zero() {
                    continue;
                }
                let rest_cols: Vec<usize> = cols.iter().copied().filter(|&k| k != c).collect();
                let minor = sub_det(m, &rows[1..], &rest_cols)?;
                let t = e.mul(&minor)?;
                acc = if j % 2 == 0 {
                    acc.add(&t)?
                } else {
                    acc.sub(&t)?
                };
            }
            Ok(acc)
        }
    }
}

impl HodgeStar {
    /// Build the star table; needs an exact volume density.
    pub fn new(g: &MetricField) -> FormResult<Self> {
        g.require_rational()?;
        let comps = g.components();
        let det = crate::geometry::det4(comps)?;
        let root =
            sqrt_monomial(&det).ok_or_else(|| GeometryError::NoClosedFormRoot(det.to_string()))?;
        let gi = inverse4(comps)?;
        let mut table: Vec<[RatFun; 16]> = vec![Default::default(); 16];
        for i_mask in 0u8..16 {
            let ii = indices(i_mask);
            for k_mask in 0u8..16 {
                if k_mask.count_ones() != i_mask.count_ones() {
                    continue;
                }
                let kk = indices(k_mask);
                let gik = sub_det(&gi, &ii, &kk)?;
                if gik.is_zero() {
                    continue;
                }
                let j_mask = 15 ^ k_mask;
                let sign = shuffle_sign(k_mask, j_mask);
                let t = root.mul(&gik)?;
                let t = if sign < 0 { t.neg() } else { t };
                table[i_mask as usize][j_mask as usize] =
                    table[i_mask as usize][j_mask as usize].add(&t)?;
            }
        }
        Ok(HodgeStar {
            chart: g.chart(),
            table,
        })
    }

    /// Apply the star.
    pub fn apply(&self, w: &FormField) -> FormResult<FormField> {
        if w.chart != self.chart {
            return Err(FormsError::ChartMismatch(w.chart.name, self.chart.name));
        }
        let mut out = FormField::zero(self.chart, 4 - w.degree.min(4));
        if w.degree > 4 {
            return Ok(out);
        }
        for (m, c) in w.components() {
            for (j, t) in self.table[m as usize].iter().enumerate() {
                if t.is_zero() {
                    continue;
                }
                out.coeffs[j] = out.coeffs[j].add(&c.mul(t)?)?;
            }
        }
        Ok(out)
    }
}

/// The connection form `Theta = d theta + y1 dy2` on a chart.
pub fn theta_form(chart: Chart) -> FormField {
    FormField::one_form(chart, crate::geometry::connection_form())
}

/// The standard triples of self-dual and anti-self-dual 2-forms on the
/// inverted chart:
///
/// * `w1 = dr ^ Theta +- r dy1 ^ dy2`
/// * `w2 = dy1 ^ Theta +- r dy2 ^ dr`
/// * `w3 = dy2 ^ Theta +- r dr ^ dy1`
///
/// Construction verifies self-duality for the Gibbons-Hawking metric in the
/// inverted chart and fails if the basis is not (anti-)self-dual.
#[derive(Clone, Debug)]
pub struct PMBasis {
    /// Self-dual forms `w_i^+`.
    pub plus: [FormField; 3],
    /// Anti-self-dual forms `w_i^-`.
    pub minus: [FormField; 3],
}

impl PMBasis {
    /// Build and verify the basis.
    pub fn new() -> FormResult<Self> {
        let g = crate::geometry::metric_gh_inverted();
        let b = Self::unchecked();
        let star = HodgeStar::new(&g)?;
        for i in 0..3 {
            if star.apply(&b.plus[i])? != b.plus[i] {
                return Err(FormsError::NotSelfDual(format!(
                    "w{}+ is not self-dual",
                    i + 1
                )));
            }
            let neg = b.minus[i].scale(&RatFun::int(-1))?;
            if star.apply(&b.minus[i])? != neg {
                return Err(FormsError::NotSelfDual(format!(
                    "w{}- is not anti-self-dual",
                    i + 1
                )));
            }
        }
        Ok(b)
    }

    /// Build the basis without the self-duality check.
    pub fn unchecked() -> Self {
        let ch = Chart::inverted();
        let dr = FormField::d(ch, Var::R);
        let dy1 = FormField::d(ch, Var::Y1);
        let dy2 = FormField::d(ch, Var::Y2);
        let th = theta_form(ch);
        let r = RatFun::var(Var::R);
        let w = |a: &FormField, b: &FormField| a.wedge(b).expect("same chart");
        let firsts = [w(&dr, &th), w(&dy1, &th), w(&dy2, &th)];
        let seconds = [
            w(&dy1, &dy2).scale(&r).unwrap(),
            w(&dy2, &dr).scale(&r).unwrap(),
            w(&dr, &dy1).scale(&r).unwrap(),
        ];
        let plus = std::array::from_fn(|i| firsts[i].add(&seconds[i]).unwrap());
        let minus = std::array::from_fn(|i| firsts[i].sub(&seconds[i]).unwrap());
        PMBasis { plus, minus }
    }

    /// Expand a 2-form in the basis `{w_j^+, w_j^-}`; returns coefficient
    /// functions `(a_j, b_j)` with `w = sum a_j w_j^+ + b_j w_j^-`.
    pub fn expand(&self, w: &FormField) -> FormResult<([RatFun; 3], [RatFun; 3])> {
        if w.degree != 2 {
            return Err(FormsError::DegreeMismatch {
                expected: 2,
                got: w.degree,
            });
        }
        // With F_j the Theta parts and S_j the r-weighted parts, write
        // w = sum f_j F_j + s_j S_j where f_j = a_j + b_j, s_j = a_j - b_j.
        // Since dr^Theta = dr^dtheta + y1 dr^dy2 and
        // dy1^Theta = dy1^dtheta + y1 dy1^dy2, the dtheta components give
        // f_j directly and the remaining components give s_j after removing
        // the y1 cross terms.
        let (r, y1, y2, t) = (0usize, 1usize, 2usize, 3usize);
        let m = |a: usize, b: usize| -> u8 { (1 << a) | (1 << b) };
        let rr = RatFun::var(Var::R);
        let two = RatFun::int(2);
        let y1f = RatFun::var(Var::Y1);
        let f1 = w.coeff(m(r, t)).clone();
        let f2 = w.coeff(m(y1, t)).clone();
        let f3 = w.coeff(m(y2, t)).clone();
        let s1 = w.coeff(m(y1, y2)).sub(&f2.mul(&y1f)?)?;
        let s2 = f1.mul(&y1f)?.sub(w.coeff(m(r, y2)))?;
        let s3 = w.coeff(m(r, y1)).clone();
        let sp = |f: &RatFun, s: &RatFun| -> FormResult<(RatFun, RatFun)> {
            let sr = s.div(&rr)?;
            Ok((f.add(&sr)?.div(&two)?, f.sub(&sr)?.div(&two)?))
        };
        let (a1, b1) = sp(&f1, &s1)?;
        let (a2, b2) = sp(&f2, &s2)?;
        let (a3, b3) = sp(&f3, &s3)?;
        let a = [a1, a2, a3];
        let b = [b1, b2, b3];
        // Verify: reconstruct and compare (catches any component outside the span).
        let mut rec = FormField::zero(Chart::inverted(), 2);
        for j in 0..3 {
            rec = rec.add(&self.plus[j].scale(&a[j])?)?;
            rec = rec.add(&self.minus[j].scale(&b[j])?)?;
        }
        if &rec != w {
            return Err(FormsError::NotSelfDual(
                "expansion in the self-dual basis did not reproduce the form".into(),
            ));
        }
        Ok((a, b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::metric_gh;

    #[test]
    fn shuffle_signs() {
        assert_eq!(shuffle_sign(0b0001, 0b0010), 1);
        assert_eq!(shuffle_sign(0b0010, 0b0001), -1);
        assert_eq!(shuffle_sign(0b0011, 0b1100), 1);
    }

    #[test]
    fn wedge_of_coordinate_forms() {
        let ch = Chart::boundary();
        let a = FormField::d(ch, Var::X)
            .wedge(&FormField::d(ch, Var::Y1))
            .unwrap();
        let b = FormField::d(ch, Var::Y2)
            .wedge(&FormField::d(ch, Var::Theta))
            .unwrap();
        assert_eq!(a.wedge(&b).unwrap(), FormField::coordinate_volume(ch));
    }

    #[test]
    fn star_of_one_is_volume() {
        let g = metric_gh();
        let one = FormField::function(Chart::boundary(), RatFun::one());
        let s = one.hodge_star(&g).unwrap();
        assert_eq!(
            s.top_coefficient().unwrap(),
            &RatFun::parse("x^-3").unwrap()
        );
    }

    #[test]
    fn star_on_orthonormal_coframe() {
        // e1 ^ e2 = x^-3 dx ^ dy1 and e3 ^ e4 = dy2 ^ Theta.
        let ch = Chart::boundary();
        let g = metric_gh();
        let e12 = FormField::d(ch, Var::X)
            .wedge(&FormField::d(ch, Var::Y1))
            .unwrap()
            .scale(&RatFun::parse("x^-3").unwrap())
            .unwrap();
        let e34 = FormField::d(ch, Var::Y2).wedge(&theta_form(ch)).unwrap();
        assert_eq!(e12.hodge_star(&g).unwrap(), e34);
    }

    #[test]
    fn basis_is_self_dual() {
        PMBasis::new().unwrap();
    }

    #[test]
    fn expansion_round_trips() {
        let b = PMBasis::new().unwrap();
        let w = b.plus[1]
            .scale(&RatFun::parse("r*y1").unwrap())
            .unwrap()
            .add(&b.minus[2].scale(&RatFun::int(3)).unwrap())
            .unwrap();
        let (a, m) = b.expand(&w).unwrap();
        assert_eq!(a[1], RatFun::parse("r*y1").unwrap());
        assert_eq!(m[2], RatFun::int(3));
        assert!(a[0].is_zero() && a[2].is_zero() && m[0].is_zero() && m[1].is_zero());
    }
}

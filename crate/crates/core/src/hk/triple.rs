//! Triples of 2-forms, the `Q` map, the gauge residual and pullbacks of
//! the self-dual basis through coordinate deformations.
//!
//! All forms live on the inverted chart `(r, y1, y2, theta)` where the
//! standard basis [`PMBasis`] is defined. A deformation of the model is
//! described by a [`DeformedCoframe`]: a radial function `r~` together with
//! the 1-forms `dr~`, `e1~`, `e2~` and `Theta~`. The deformed triple is
//!
//! ```text
//! w1~ = dr~ ^ Theta~ + r~ e1~ ^ e2~
//! w2~ = e1~ ^ Theta~ + r~ e2~ ^ dr~
//! w3~ = e2~ ^ Theta~ + r~ dr~ ^ e1~
//! ```
//!
//! and [`pullback_pm`] expands it in the undeformed basis
//! `{w_j^+, w_j^-}`. For a genuine deformation of the model the expansion
//! coefficients are constants; a position-dependent expansion is reported
//! as an error.

use super::{HkError, HkResult};
use crate::forms::{FormField, PMBasis};
use crate::geometry::{Chart, MetricField};
use crate::ratfun::{FPoint, RatFun, Var};
use nalgebra::Matrix3;

/// Tolerance on the spread of expansion coefficients across sample points.
pub const CONSTANCY_TOL: f64 = 1e-12;

/// Three 2-forms on a common chart.
#[derive(Clone, Debug, PartialEq)]
pub struct Triple {
    forms: [FormField; 3],
}

impl Triple {
    /// Build a triple, checking degrees and charts.
    pub fn new(forms: [FormField; 3]) -> HkResult<Self> {
        let chart = forms[0].chart();
        for f in &forms {
            if f.degree() != 2 {
                return Err(HkError::Invalid(format!(
                    "triple member has degree {}",
                    f.degree()
                )));
            }
            if f.chart() != chart {
                return Err(HkError::Invalid(
                    "triple members live on different charts".into(),
                ));
            }
        }
        Ok(Triple { forms })
    }

    /// The standard self-dual triple `(w1^+, w2^+, w3^+)`.
    pub fn standard() -> Self {
        Triple {
            forms: PMBasis::unchecked().plus,
        }
    }

    /// The anti-self-dual triple `(w1^-, w2^-, w3^-)`.
    pub fn anti_self_dual() -> Self {
        Triple {
            forms: PMBasis::unchecked().minus,
        }
    }

    /// The zero triple on a chart.
    pub fn zero(chart: Chart) -> Self {
        Triple {
            forms: std::array::from_fn(|_| FormField::zero(chart, 2)),
        }
    }

    /// Members of the triple.
    pub fn forms(&self) -> &[FormField; 3] {
        &self.forms
    }

    /// Common chart.
    pub fn chart(&self) -> Chart {
        self.forms[0].chart()
    }

    /// Multiply every member by a function.
    pub fn scale(&self, f: &RatFun) -> HkResult<Triple> {
        let mut out = self.forms.clone();
        for w in out.iter_mut() {
            *w = w.scale(f)?;
        }
        Ok(Triple { forms: out })
    }

    /// True when every member is closed.
    pub fn is_closed(&self) -> HkResult<bool> {
        for w in &self.forms {
            if !w.ext_d()?.is_zero() {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Matrix of wedges `w_i ^ w_j` relative to a top form.
    pub fn gram(&self, vol: &FormField) -> HkResult<[[RatFun; 3]; 3]> {
        let v = volume_coefficient(vol)?;
        let mut out: [[RatFun; 3]; 3] = Default::default();
        for i in 0..3 {
            for j in i..3 {
                let w = self.forms[i].wedge(&self.forms[j])?;
                let c = w.top_coefficient()?.div(&v)?;
                out[j][i] = c.clone();
                out[i][j] = c;
            }
        }
        Ok(out)
    }

    /// The volume form `(1/3) sum w_l ^ w_l`.
    pub fn volume(&self) -> HkResult<FormField> {
        let mut v = FormField::zero(self.chart(), 4);
        for w in &self.forms {
            v = v.add(&w.wedge(w)?)?;
        }
        Ok(v.scale(&RatFun::frac(1, 3))?)
    }

    /// True when the wedge Gram matrix is positive definite at every sample
    /// point.
    pub fn is_definite_at(&self, vol: &FormField, points: &[FPoint]) -> HkResult<bool> {
        let g = self.gram(vol)?;
        for p in points {
            let m = Matrix3::from_fn(|i, j| g[i][j].eval_f64(p).unwrap_or(f64::NAN));
            if m.iter().any(|v| !v.is_finite()) {
                return Ok(false);
            }
            if m.symmetric_eigenvalues().min() <= 0.0 {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

fn volume_coefficient(vol: &FormField) -> HkResult<RatFun> {
    let v = vol.top_coefficient()?.clone();
    if v.is_zero() {
        return Err(HkError::ZeroVolume);
    }
    Ok(v)
}

/// Trace-free part of a symmetric matrix of functions.
fn trace_free(m: [[RatFun; 3]; 3]) -> HkResult<[[RatFun; 3]; 3]> {
    let tr = m[0][0]
        .add(&m[1][1])?
        .add(&m[2][2])?
        .mul(&RatFun::frac(1, 3))?;
    let mut out = m;
    for (i, row) in out.iter_mut().enumerate() {
        row[i] = row[i].sub(&tr)?;
    }
    Ok(out)
}

/// `Q_ij = w_i ^ w_j - (1/3) (sum_l w_l ^ w_l) delta_ij`, as ratios to the
/// reference volume. The result is symmetric and trace-free by
/// construction.
pub fn q_map(t: &Triple, reference_volume: &FormField) -> HkResult<[[RatFun; 3]; 3]> {
    trace_free(t.gram(reference_volume)?)
}

/// The gauge residual `J(eta)_ij = 2 eta_i^+ ^ w_j + Q(eta, eta)_ij`,
/// measured against the volume of `omega`, where `eta^+` is the self-dual
/// part of `eta` for the metric `g`.
pub fn gauge_residual(eta: &Triple, omega: &Triple, g: &MetricField) -> HkResult<[[RatFun; 3]; 3]> {
    let vol = omega.volume()?;
    let v = volume_coefficient(&vol)?;
    let q = q_map(eta, &vol)?;
    let mut plus = Vec::with_capacity(3);
    for e in eta.forms() {
        plus.push(e.sd_asd_split(g)?.0);
    }
    let mut out = q;
    for i in 0..3 {
        for j in 0..3 {
            let w = plus[i].wedge(&omega.forms()[j])?;
            let c = w.top_coefficient()?.div(&v)?.mul(&RatFun::int(2))?;
            out[i][j] = out[i][j].add(&c)?;
        }
    }
    Ok(out)
}

/// A deformed coframe on the inverted chart.
#[derive(Clone, Debug, PartialEq)]
pub struct DeformedCoframe {
    /// The deformed radial function `r~`.
    pub r: RatFun,
    /// `dr~`.
    pub dr: FormField,
    /// `e1~`.
    pub e1: FormField,
    /// `e2~`.
    pub e2: FormField,
    /// `Theta~`.
    pub theta: FormField,
}

/// A coordinate deformation `(r, y1, y2, theta) -> (r~, y1~, y2~, theta~)`
/// on the inverted chart.
#[derive(Clone, Debug, PartialEq)]
pub struct CoordinateMap {
    /// `r~`.
    pub r: RatFun,
    /// `y1~`.
    pub y1: RatFun,
    /// `y2~`.
    pub y2: RatFun,
    /// `theta~`.
    pub theta: RatFun,
}

impl CoordinateMap {
    /// The identity map.
    pub fn identity() -> Self {
        CoordinateMap {
            r: RatFun::var(Var::R),
            y1: RatFun::var(Var::Y1),
            y2: RatFun::var(Var::Y2),
            theta: RatFun::var(Var::Theta),
        }
    }

    /// Coframe of the map: `dr~`, `dy1~`, `dy2~` and
    /// `Theta~ = d theta~ + y1~ dy2~`.
    pub fn coframe(&self) -> HkResult<DeformedCoframe> {
        let ch = Chart::inverted();
        let d = |f: &RatFun| FormField::function(ch, f.clone()).ext_d();
        let dy2 = d(&self.y2)?;
        let theta = d(&self.theta)?.add(&dy2.scale(&self.y1)?)?;
        Ok(DeformedCoframe {
            r: self.r.clone(),
            dr: d(&self.r)?,
            e1: d(&self.y1)?,
            e2: dy2,
            theta,
        })
    }
}

impl DeformedCoframe {
    /// The undeformed coframe `(dr, dy1, dy2, Theta)`.
    pub fn model() -> Self {
        CoordinateMap::identity().coframe().expect("identity map")
    }

    /// The relative scaling `r~ = a r`, `Theta~ = b Theta`, `e~ = c e`.
    pub fn calabi_scaling(a: &RatFun, b: &RatFun, c: &RatFun) -> HkResult<Self> {
        let m = Self::model();
        Ok(DeformedCoframe {
            r: m.r.mul(a)?,
            dr: m.dr.scale(a)?,
            e1: m.e1.scale(c)?,
            e2: m.e2.scale(c)?,
            theta: m.theta.scale(b)?,
        })
    }

    /// The conformal-modulus change `e1~ = a0 e1 + c0 e2`,
    /// `e2~ = b0 e2 + c0 e1`, `r~ = rho r`, `Theta~ = rho^2 Theta`, where
    /// `rho^2 = a0 b0 - c0^2` must hold; `rho` is passed explicitly so that
    /// the coframe stays rational.
    pub fn calabi_modulus(a0: &RatFun, b0: &RatFun, c0: &RatFun, rho: &RatFun) -> HkResult<Self> {
        let det = a0.mul(b0)?.sub(&c0.mul(c0)?)?;
        let rho2 = rho.mul(rho)?;
        if det != rho2 {
            return Err(HkError::Invalid("rho^2 must equal a0 b0 - c0^2".into()));
        }
        let m = Self::model();
        Ok(DeformedCoframe {
            r: m.r.mul(rho)?,
            dr: m.dr.scale(rho)?,
            e1: m.e1.scale(a0)?.add(&m.e2.scale(c0)?)?,
            e2: m.e2.scale(b0)?.add(&m.e1.scale(c0)?)?,
            theta: m.theta.scale(&rho2)?,
        })
    }

    /// The deformed triple `(w1~, w2~, w3~)`.
    pub fn triple(&self) -> HkResult<Triple> {
        let w = |a: &FormField, b: &FormField| a.wedge(b);
        let w1 = w(&self.dr, &self.theta)?.add(&w(&self.e1, &self.e2)?.scale(&self.r)?)?;
        let w2 = w(&self.e1, &self.theta)?.add(&w(&self.e2, &self.dr)?.scale(&self.r)?)?;
        let w3 = w(&self.e2, &self.theta)?.add(&w(&self.dr, &self.e1)?.scale(&self.r)?)?;
        Triple::new([w1, w2, w3])
    }
}

/// Coefficients of the deformed triple in the basis `{w_j^+, w_j^-}` as
/// exact functions: `w_i~ = sum_j A_ij w_j^+ + B_ij w_j^-`. Fails if any
/// coefficient depends on a chart coordinate.
pub fn pullback_pm_exact(
    frame: &DeformedCoframe,
) -> HkResult<([[RatFun; 3]; 3], [[RatFun; 3]; 3])> {
    let (a, b) = pullback_pm_functions(frame)?;
    for (name, m) in [("A", &a), ("B", &b)] {
        for (i, row) in m.iter().enumerate() {
            for (j, f) in row.iter().enumerate() {
                if Chart::inverted().coords.iter().any(|&v| f.depends_on(v)) {
                    return Err(HkError::PositionDependent {
                        entry: format!("{name}{}{}", i + 1, j + 1),
                        detail: format!("coefficient {f}"),
                    });
                }
            }
        }
    }
    Ok((a, b))
}

fn pullback_pm_functions(
    frame: &DeformedCoframe,
) -> HkResult<([[RatFun; 3]; 3], [[RatFun; 3]; 3])> {
    let basis = PMBasis::unchecked();
    let t = frame.triple()?;
    let mut a: [[RatFun; 3]; 3] = Default::default();
    let mut b: [[RatFun; 3]; 3] = Default::default();
    for i in 0..3 {
        let (ai, bi) = basis.expand(&t.forms()[i])?;
        a[i] = ai;
        b[i] = bi;
    }
    Ok((a, b))
}

/// Five sample points on the inverted chart, away from the core.
pub fn sample_points() -> Vec<FPoint> {
    let ch = Chart::inverted();
    [
        [2.0, 0.1, 0.2, 0.3],
        [3.5, 0.7, 0.4, 1.9],
        [7.25, 0.33, 0.91, -2.2],
        [12.0, 0.05, 0.5, 4.0],
        [40.0, 0.9, 0.15, 0.75],
    ]
    .into_iter()
    .map(|v| ch.fpoint(v))
    .collect()
}

/// Expand the deformed triple in `{w_j^+, w_j^-}` and evaluate the
/// coefficients at the given points (extra variables such as a symbolic
/// parameter must be set in each point). Fails when any coefficient varies
/// across the points by more than [`CONSTANCY_TOL`].
pub fn pullback_pm(
    frame: &DeformedCoframe,
    points: &[FPoint],
) -> HkResult<(Matrix3<f64>, Matrix3<f64>)> {
    if points.is_empty() {
        return Err(HkError::Invalid("no sample points".into()));
    }
    let (a, b) = pullback_pm_functions(frame)?;
    let eval = |name: &str, m: &[[RatFun; 3]; 3]| -> HkResult<Matrix3<f64>> {
        let mut out = Matrix3::zeros();
        for i in 0..3 {
            for j in 0..3 {
                let vals = points
                    .iter()
                    .map(|p| m[i][j].eval_f64(p))
                    .collect::<Result<Vec<_>, _>>()?;
                let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let spread = hi - lo;
                if !(spread <= CONSTANCY_TOL * (1.0 + hi.abs().max(lo.abs()))) {
                    return Err(HkError::PositionDependent {
                        entry: format!("{name}{}{}", i + 1, j + 1),
                        detail: format!("values range over [{lo:e}, {hi:e}]"),
                    });
                }
                out[(i, j)] = vals[0];
            }
        }
        Ok(out)
    };
    Ok((eval("A", &a)?, eval("B", &b)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::metric_gh_inverted;

    #[test]
    fn q_of_standard_triple_vanishes() {
        let t = Triple::standard();
        let q = q_map(&t, &t.volume().unwrap()).unwrap();
        assert!(q.iter().flatten().all(|f| f.is_zero()));
    }

    #[test]
    fn q_of_repeated_form() {
        let s = Triple::standard();
        let w = s.forms()[0].clone();
        let t = Triple::new([w.clone(), w.clone(), w]).unwrap();
        let q = q_map(&t, &s.volume().unwrap()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j {
                    RatFun::zero()
                } else {
                    RatFun::one()
                };
                assert_eq!(q[i][j], expected);
            }
        }
    }

    #[test]
    fn zero_volume_is_rejected() {
        let t = Triple::standard();
        let z = FormField::zero(Chart::inverted(), 4);
        assert!(matches!(q_map(&t, &z), Err(HkError::ZeroVolume)));
    }

    #[test]
    fn gauge_residual_cases() {
        let g = metric_gh_inverted();
        let om = Triple::standard();
        let zero = Triple::zero(Chart::inverted());
        let j = gauge_residual(&zero, &om, &g).unwrap();
        assert!(j.iter().flatten().all(|f| f.is_zero()));
        let asd = Triple::anti_self_dual();
        let j = gauge_residual(&asd, &om, &g).unwrap();
        assert!(j.iter().flatten().all(|f| f.is_zero()));
        let eps = RatFun::frac(1, 100);
        let j = gauge_residual(&om.scale(&eps).unwrap(), &om, &g).unwrap();
        for i in 0..3 {
            for k in 0..3 {
                let expected = if i == k {
                    RatFun::frac(1, 50)
                } else {
                    RatFun::zero()
                };
                assert_eq!(j[i][k], expected);
            }
        }
    }

    #[test]
    fn identity_pulls_back_to_identity() {
        let (a, b) = pullback_pm(&DeformedCoframe::model(), &sample_points()).unwrap();
        assert_eq!(a, Matrix3::identity());
        assert_eq!(b, Matrix3::zeros());
    }

    #[test]
    fn standard_triple_is_closed_and_definite() {
        let t = Triple::standard();
        assert!(t.is_closed().unwrap());
        assert!(t
            .is_definite_at(&t.volume().unwrap(), &sample_points())
            .unwrap());
        assert!(!Triple::anti_self_dual().is_closed().unwrap());
    }
}

//! Explicit deformation families of the model at infinity.
//!
//! Two Calabi-type families come as closed-form curves `t -> (A(t), B(t))`:
//!
//! * relative scaling of the torus and the circle fibre, with
//!   `c(t) = (1 + t^2/2 + (t/2) sqrt(12 - 3t^2))^(1/3)` and
//!   `a(t) = (1 - t^2)/c(t)^2`, giving diagonal `A`, `B`;
//! * a change of conformal modulus of the torus, assembled from
//!   `a0`, `b0` and `c0 = beta t` with `a0 b0 - c0^2 = (1 - kappa t^2)^2`,
//!   `kappa = (alpha^2 + beta^2)/9`.
//!
//! Three semiflat twists come as coordinate deformations whose pulled-back
//! triples have constant raw matrices. Each raw pair is put in polar normal
//! form by [`symmetrize`](super::symmetrize) to obtain a curve in the
//! gauge-fixed slice.

use super::jet::{Jet, Scalar};
use super::triple::{pullback_pm, sample_points, CoordinateMap};
use super::{lambda_of, symmetrize, HkError, HkResult};
use crate::ratfun::{RatFun, Var};
use nalgebra::Matrix3;
use num_rational::BigRational;
use std::fmt;

/// A 3x3 array over a scalar type.
pub type Mat3<S> = [[S; 3]; 3];

fn zeros<S: Scalar>() -> Mat3<S> {
    [[S::cst(0.0); 3]; 3]
}

/// The relative-scaling family at parameter `t`, with `t` replaced by
/// `alpha t`.
pub fn calabi_scaling_at<S: Scalar>(alpha: f64, t: S) -> HkResult<(Mat3<S>, Mat3<S>)> {
    let tau = S::cst(alpha) * t;
    let one = S::cst(1.0);
    let rad = S::cst(12.0) - S::cst(3.0) * tau * tau;
    if rad.value() <= 0.0 {
        return Err(HkError::OutOfRange(format!(
            "12 - 3 (alpha t)^2 = {} is not positive",
            rad.value()
        )));
    }
    let base = one + S::cst(0.5) * tau * tau + S::cst(0.5) * tau * rad.sqrt();
    if base.value() <= 0.0 {
        return Err(HkError::OutOfRange(
            "cube-root argument is not positive".into(),
        ));
    }
    let c = base.powf(1.0 / 3.0);
    let a = (one - tau * tau) / (c * c);
    let mut am = zeros();
    let mut bm = zeros();
    am[0][0] = a * c * c;
    let d = S::cst(0.5) * c * (a * a + c * c);
    am[1][1] = d;
    am[2][2] = d;
    let e = S::cst(0.5) * c * (c * c - a * a);
    bm[1][1] = e;
    bm[2][2] = e;
    Ok((am, bm))
}

/// The conformal-modulus family at parameter `t`.
///
/// With `u = 1 - kappa t^2` and `s = 3 u^-2 - u`, the trace condition reads
/// `a0 + b0 = s` and `a0 b0 = u^2 + beta^2 t^2`. The discriminant
/// `(a0 - b0)^2` vanishes at `t = 0`; writing it as `t^2 q(t)` with
/// `q(0) = 4 alpha^2` and taking `a0 - b0 = sign(alpha) t sqrt(q)` selects
/// the branch `a0 ~ 1 + alpha t` that is smooth through `t = 0`.
pub fn calabi_modulus_at<S: Scalar>(alpha: f64, beta: f64, t: S) -> HkResult<(Mat3<S>, Mat3<S>)> {
    let kappa = (alpha * alpha + beta * beta) / 9.0;
    let one = S::cst(1.0);
    let u = one - S::cst(kappa) * t * t;
    if u.value() <= 0.0 {
        return Err(HkError::OutOfRange(format!(
            "1 - kappa t^2 = {} is not positive",
            u.value()
        )));
    }
    let u2 = u * u;
    let s = S::cst(3.0) / u2 - u;
    let q = S::cst(3.0 * kappa) * (one + u + u2) * (S::cst(3.0) / u2 + u) / u2
        - S::cst(4.0 * beta * beta);
    if q.value() < 0.0 {
        return Err(HkError::OutOfRange(format!(
            "discriminant {} is negative",
            q.value()
        )));
    }
    let sign = if alpha < 0.0 { -1.0 } else { 1.0 };
    let w = S::cst(sign) * t * q.sqrt();
    let half = S::cst(0.5);
    let d = u2;
    let mut am = zeros();
    let mut bm = zeros();
    am[0][0] = u * d;
    am[1][1] = d * s * half;
    am[2][2] = d * s * half;
    let c0 = S::cst(beta) * t;
    bm[1][1] = d * w * half;
    bm[1][2] = d * c0;
    bm[2][1] = d * c0;
    bm[2][2] = -(d * w * half);
    Ok((am, bm))
}

/// The relative-scaling family with `t` and `c = c(t)` kept symbolic.
///
/// The entries are rational in `t` (the variable `t`) and `c` (the
/// variable `c`), with `a = (1 - t^2)/c^2` substituted. The cube root
/// `c(t)` enters only through its defining relation
/// `c^6 - (2 + t^2) c^3 + (1 - t^2)^2 = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct CalabiScalingSymbolic {
    /// `A(t, c)`.
    pub a: [[RatFun; 3]; 3],
    /// `B(t, c)`.
    pub b: [[RatFun; 3]; 3],
    /// `lambda = A_11^2`.
    pub lambda: RatFun,
    /// The polynomial relation satisfied by `c(t)`.
    pub relation: RatFun,
}

/// Outcome of the exact checks on [`CalabiScalingSymbolic`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SymbolicCheck {
    /// `A^2 - B B^T - lambda I` vanishes identically in `(t, c)`.
    pub constraint_identically_zero: bool,
    /// `c^3 (tr A - 3)` equals the defining relation, so `tr A = 3` holds
    /// exactly on the curve.
    pub trace_reduces_to_relation: bool,
}

impl CalabiScalingSymbolic {
    /// Assemble the symbolic matrices.
    pub fn new() -> HkResult<Self> {
        let rf = |s: &str| RatFun::parse(s).expect("literal");
        let a = rf("(1 - t^2)/c^2");
        let c = RatFun::var(Var::C);
        let half = RatFun::frac(1, 2);
        let a2 = a.mul(&a)?;
        let c2 = c.mul(&c)?;
        let mut am: [[RatFun; 3]; 3] = Default::default();
        let mut bm: [[RatFun; 3]; 3] = Default::default();
        am[0][0] = a.mul(&c2)?;
        let d = half.mul(&c)?.mul(&a2.add(&c2)?)?;
        let e = half.mul(&c)?.mul(&c2.sub(&a2)?)?;
        am[1][1] = d.clone();
        am[2][2] = d;
        bm[1][1] = e.clone();
        bm[2][2] = e;
        let lambda = am[0][0].mul(&am[0][0])?;
        Ok(CalabiScalingSymbolic {
            a: am,
            b: bm,
            lambda,
            relation: rf("c^6 - (2 + t^2)*c^3 + (1 - t^2)^2"),
        })
    }

    /// Run the exact checks.
    pub fn verify(&self) -> HkResult<SymbolicCheck> {
        let mut zero = true;
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = if i == j {
                    self.lambda.neg()
                } else {
                    RatFun::zero()
                };
                for k in 0..3 {
                    acc = acc.add(&self.a[i][k].mul(&self.a[k][j])?)?;
                    acc = acc.sub(&self.b[i][k].mul(&self.b[j][k])?)?;
                }
                zero &= acc.is_zero();
            }
        }
        let tr = self.a[0][0].add(&self.a[1][1])?.add(&self.a[2][2])?;
        let lhs = tr.sub(&RatFun::int(3))?.mul(&RatFun::var_pow(Var::C, 3))?;
        Ok(SymbolicCheck {
            constraint_identically_zero: zero,
            trace_reduces_to_relation: lhs == self.relation,
        })
    }
}

/// The three semiflat twists.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SemiflatTwist {
    /// `theta~ = theta + c r^2`.
    Theta,
    /// `y1~ = y1 + c r`.
    Y1,
    /// `y2~ = y2 + c r`, with the fibre gauge `theta~ = theta - c r y1`.
    Y2,
}

impl SemiflatTwist {
    /// All three twists.
    pub const ALL: [SemiflatTwist; 3] =
        [SemiflatTwist::Theta, SemiflatTwist::Y1, SemiflatTwist::Y2];

    /// Short name.
    pub fn name(self) -> &'static str {
        match self {
            SemiflatTwist::Theta => "theta_twist",
            SemiflatTwist::Y1 => "y1_twist",
            SemiflatTwist::Y2 => "y2_twist",
        }
    }

    /// Parse a short name (`theta_twist`, `sf-theta`, `theta`, ...).
    pub fn from_name(s: &str) -> Option<Self> {
        let s = s.trim_start_matches("sf-").trim_end_matches("_twist");
        match s {
            "theta" => Some(SemiflatTwist::Theta),
            "y1" => Some(SemiflatTwist::Y1),
            "y2" => Some(SemiflatTwist::Y2),
            _ => None,
        }
    }

    /// The coordinate deformation with parameter `c` (any function; a
    /// constant or the symbolic variable `c`).
    ///
    /// For the `y2` twist the connection `d theta + y1 dy2` picks up the
    /// non-constant term `c y1 dr`; the compensating fibre shift
    /// `theta~ = theta - c r y1` removes it. Without that shift the
    /// pulled-back triple is not a constant combination of the basis, see
    /// [`SemiflatTwist::naive_map`].
    pub fn map(self, c: &RatFun) -> HkResult<CoordinateMap> {
        let mut m = CoordinateMap::identity();
        let r = RatFun::var(Var::R);
        match self {
            SemiflatTwist::Theta => {
                m.theta = m.theta.add(&c.mul(&r.mul(&r)?)?)?;
            }
            SemiflatTwist::Y1 => {
                m.y1 = m.y1.add(&c.mul(&r)?)?;
            }
            SemiflatTwist::Y2 => {
                m.y2 = m.y2.add(&c.mul(&r)?)?;
                m.theta = m.theta.sub(&c.mul(&r)?.mul(&RatFun::var(Var::Y1))?)?;
            }
        }
        Ok(m)
    }

    /// The coordinate deformation exactly as written, with no fibre gauge
    /// shift. Differs from [`SemiflatTwist::map`] only for the `y2` twist.
    pub fn naive_map(self, c: &RatFun) -> HkResult<CoordinateMap> {
        match self {
            SemiflatTwist::Y2 => {
                let mut m = CoordinateMap::identity();
                m.y2 = m.y2.add(&c.mul(&RatFun::var(Var::R))?)?;
                Ok(m)
            }
            _ => self.map(c),
        }
    }

    /// The raw constant matrices `(A, B)` of the twisted triple.
    pub fn raw_matrices(self, c: f64) -> (Matrix3<f64>, Matrix3<f64>) {
        let h = c * c / 2.0;
        match self {
            SemiflatTwist::Theta => (
                Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0, -c, 0.0, c, 1.0),
                Matrix3::new(0.0, 0.0, 0.0, 0.0, 0.0, c, 0.0, -c, 0.0),
            ),
            SemiflatTwist::Y1 => (
                Matrix3::new(1.0, -c, 0.0, c, 1.0 - h, 0.0, 0.0, 0.0, 1.0),
                Matrix3::new(0.0, c, 0.0, 0.0, h, 0.0, 0.0, 0.0, 0.0),
            ),
            SemiflatTwist::Y2 => (
                Matrix3::new(1.0, 0.0, -c, 0.0, 1.0, 0.0, c, 0.0, 1.0 - h),
                Matrix3::new(0.0, 0.0, c, 0.0, 0.0, 0.0, 0.0, 0.0, h),
            ),
        }
    }
}

/// Tolerance for matching the raw matrices against the pullback.
pub const PULLBACK_MATCH_TOL: f64 = 1e-12;

/// The raw semiflat matrices at parameter `c`, cross-checked against the
/// pullback of the deformed triple at five sample points.
pub fn family_semiflat(which: SemiflatTwist, c: f64) -> HkResult<(Matrix3<f64>, Matrix3<f64>)> {
    let cq = BigRational::from_float(c).ok_or_else(|| HkError::OutOfRange(format!("c = {c}")))?;
    let frame = which.map(&RatFun::constant(cq))?.coframe()?;
    let (pa, pb) = pullback_pm(&frame, &sample_points())?;
    let (a, b) = which.raw_matrices(c);
    for (name, m, p) in [("A", &a, &pa), ("B", &b, &pb)] {
        for i in 0..3 {
            for j in 0..3 {
                if (m[(i, j)] - p[(i, j)]).abs() > PULLBACK_MATCH_TOL {
                    return Err(HkError::PullbackMismatch {
                        family: which.name().into(),
                        entry: format!("{name}{}{}", i + 1, j + 1),
                        listed: m[(i, j)],
                        computed: p[(i, j)],
                    });
                }
            }
        }
    }
    Ok((a, b))
}

/// A one-parameter curve through `(I, 0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DeformationFamily {
    /// Relative scaling with rate `alpha`.
    CalabiScaling {
        /// Rate.
        alpha: f64,
    },
    /// Conformal modulus with rates `(alpha, beta)`.
    CalabiModulus {
        /// Rate of the diagonal part.
        alpha: f64,
        /// Rate of the off-diagonal part.
        beta: f64,
    },
    /// A semiflat twist in polar normal form, parameter `t = c`.
    Semiflat(SemiflatTwist),
    /// The constant curve `A = I`, `B = 0`.
    Trivial,
}

/// A point on a family curve.
#[derive(Clone, Debug, PartialEq)]
pub struct FamilyPoint {
    /// `A(t)`.
    pub a: Matrix3<f64>,
    /// `B(t)`.
    pub b: Matrix3<f64>,
    /// `lambda(t) = tr(A A^T - B B^T)/3`.
    pub lambda: f64,
}

fn to_matrix(m: &Mat3<f64>) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| m[i][j])
}

impl DeformationFamily {
    /// Short label.
    pub fn label(&self) -> String {
        match self {
            DeformationFamily::CalabiScaling { alpha } => format!("calabi-scaling(alpha={alpha})"),
            DeformationFamily::CalabiModulus { alpha, beta } => {
                format!("calabi-modulus(alpha={alpha}, beta={beta})")
            }
            DeformationFamily::Semiflat(w) => format!("semiflat {}", w.name()),
            DeformationFamily::Trivial => "trivial".into(),
        }
    }

    /// Evaluate the curve at `t`.
    pub fn eval(&self, t: f64) -> HkResult<FamilyPoint> {
        let (a, b) = match *self {
            DeformationFamily::CalabiScaling { alpha } => {
                let (a, b) = calabi_scaling_at(alpha, t)?;
                (to_matrix(&a), to_matrix(&b))
            }
            DeformationFamily::CalabiModulus { alpha, beta } => {
                let (a, b) = calabi_modulus_at(alpha, beta, t)?;
                (to_matrix(&a), to_matrix(&b))
            }
            DeformationFamily::Semiflat(w) => {
                let (a, b) = w.raw_matrices(t);
                let s = symmetrize(&a, &b)?;
                (s.a, s.b)
            }
            DeformationFamily::Trivial => (Matrix3::identity(), Matrix3::zeros()),
        };
        let lambda = (a * a.transpose() - b * b.transpose()).trace() / 3.0;
        Ok(FamilyPoint { a, b, lambda })
    }

    /// Jets of `(A, B, lambda)` at `t0` for families with closed forms
    /// that are smooth under jet arithmetic; `None` otherwise.
    pub fn jets(&self, t0: f64) -> Option<HkResult<(Mat3<Jet>, Mat3<Jet>, Jet)>> {
        let t = Jet::param(t0);
        let r = match *self {
            DeformationFamily::CalabiScaling { alpha } => calabi_scaling_at(alpha, t),
            DeformationFamily::CalabiModulus { alpha, beta } => calabi_modulus_at(alpha, beta, t),
            DeformationFamily::Trivial => {
                let mut a = zeros::<Jet>();
                for (i, row) in a.iter_mut().enumerate() {
                    row[i] = Jet::cst(1.0);
                }
                Ok((a, zeros()))
            }
            DeformationFamily::Semiflat(_) => return None,
        };
        Some(r.map(|(a, b)| {
            let l = lambda_of(&a, &b);
            (a, b, l)
        }))
    }
}

impl fmt::Display for DeformationFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hk::triple::pullback_pm_exact;

    #[test]
    fn scaling_family_constraint_along_curve() {
        for &t in &[-0.3, 0.0, 0.1, 0.45] {
            let (a, b) = calabi_scaling_at(1.3, t).unwrap();
            let (a, b) = (to_matrix(&a), to_matrix(&b));
            let lam = (a[(0, 0)]).powi(2);
            let f = a * a - b * b.transpose() - Matrix3::identity() * lam;
            assert!(f.norm() < 1e-13, "t={t} residual {}", f.norm());
            assert!((a.trace() - 3.0).abs() < 1e-13);
        }
        assert!(calabi_scaling_at(1.0, 2.5).is_err());
    }

    #[test]
    fn scaling_family_is_exact_in_t() {
        let sym = CalabiScalingSymbolic::new().unwrap();
        let check = sym.verify().unwrap();
        assert!(check.constraint_identically_zero);
        assert!(check.trace_reduces_to_relation);
        // The closed form satisfies the relation and matches the symbolic entries.
        let t = 0.3;
        let c = (1.0 + t * t / 2.0 + t / 2.0 * (12.0 - 3.0 * t * t).sqrt()).cbrt();
        let pt = crate::ratfun::FPoint::new().with(Var::T, t).with(Var::C, c);
        assert!(sym.relation.eval_f64(&pt).unwrap().abs() < 1e-13);
        let (a, _) = calabi_scaling_at(1.0, t).unwrap();
        assert!((sym.a[1][1].eval_f64(&pt).unwrap() - a[1][1]).abs() < 1e-13);
    }

    #[test]
    fn modulus_family_branch_is_smooth() {
        let (a, b) = calabi_modulus_at(0.8, 0.3, 0.05).unwrap();
        let (am, bm) = calabi_modulus_at(0.8, 0.3, -0.05).unwrap();
        // A is even in t and B is odd, up to the branch choice.
        for i in 0..3 {
            for j in 0..3 {
                assert!((a[i][j] - am[i][j]).abs() < 1e-14);
                assert!((b[i][j] + bm[i][j]).abs() < 1e-14);
            }
        }
        // Trace condition holds exactly along the curve.
        assert!((a[0][0] + a[1][1] + a[2][2] - 3.0).abs() < 1e-13);
    }

    #[test]
    fn semiflat_exact_pullbacks() {
        let c = RatFun::var(Var::C);
        for w in SemiflatTwist::ALL {
            let (a, b) = pullback_pm_exact(&w.map(&c).unwrap().coframe().unwrap()).unwrap();
            let pt = crate::ratfun::FPoint::new().with(Var::C, 0.37);
            let (ra, rb) = w.raw_matrices(0.37);
            for i in 0..3 {
                for j in 0..3 {
                    assert!((a[i][j].eval_f64(&pt).unwrap() - ra[(i, j)]).abs() < 1e-15);
                    assert!((b[i][j].eval_f64(&pt).unwrap() - rb[(i, j)]).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn naive_y2_map_is_position_dependent() {
        let c = RatFun::frac(1, 2);
        let frame = SemiflatTwist::Y2.naive_map(&c).unwrap().coframe().unwrap();
        assert!(matches!(
            pullback_pm_exact(&frame),
            Err(HkError::PositionDependent { .. })
        ));
        assert!(matches!(
            pullback_pm(&frame, &sample_points()),
            Err(HkError::PositionDependent { .. })
        ));
    }
}

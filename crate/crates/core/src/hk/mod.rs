//! HyperKaehler triples and the deformation algebra at infinity.
//!
//! A deformation of the model triple near infinity is written as
//! `w_i~ = sum_j A_ij w_j^+ + B_ij w_j^-` in the standard self-dual and
//! anti-self-dual bases. The hyperKaehler condition becomes the matrix
//! constraint `A A^T - B B^T = lambda I`, and the gauge fixes `A` symmetric
//! with `tr A = 3`. Closedness forces the first row of `B` to vanish. The
//! resulting parameter set
//!
//! ```text
//! P = { (A, B, lambda) : A^2 - B B^T = lambda I, tr A = 3, B_1i = 0 }
//! ```
//!
//! is a six-dimensional manifold near `(I, 0, 1)` whose tangent space is
//! the set of `B'` with zero first row.
//!
//! This module provides:
//!
//! * [`Triple`], [`q_map`] and [`gauge_residual`] on exact forms;
//! * [`PPoint`], [`constraint_f`] and [`tangent_space`] for the matrix
//!   constraint;
//! * [`symmetrize`], the polar normal form `A = U^T A~` with `A~`
//!   symmetric positive definite;
//! * the explicit families in [`families`], and
//!   [`second_derivative_report`] which differentiates them at `t = 0`
//!   and evaluates the second-order identity in two normalisations.

pub mod families;
pub mod jet;
pub mod triple;

pub use families::{
    calabi_modulus_at, calabi_scaling_at, family_semiflat, CalabiScalingSymbolic,
    DeformationFamily, FamilyPoint, Mat3, SemiflatTwist, SymbolicCheck,
};
pub use jet::{Jet, Scalar};
pub use triple::{
    gauge_residual, pullback_pm, pullback_pm_exact, q_map, sample_points, CoordinateMap,
    DeformedCoframe, Triple,
};

use crate::forms::FormsError;
use crate::ratfun::RatFunError;
use nalgebra::{DMatrix, Matrix3};
use std::fmt;
use thiserror::Error;

/// Errors from the hyperKaehler algebra.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum HkError {
    #[error("reference volume form vanishes identically")]
    ZeroVolume,
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("matrix A is not symmetric (asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("first row of B is not zero (norm {0:e})")]
    FirstRowNonzero(f64),
    #[error("lambda must be positive, got {0}")]
    NonPositiveLambda(f64),
    #[error(
        "not a manifold point here: constraint differential has rank {rank}, expected {expected}"
    )]
    NotManifoldPoint { rank: usize, expected: usize },
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("expansion coefficient {entry} depends on position: {detail}")]
    PositionDependent { entry: String, detail: String },
    #[error("{family}: listed {entry} = {listed} but the pullback gives {computed}")]
    PullbackMismatch {
        family: String,
        entry: String,
        listed: f64,
        computed: f64,
    },
    #[error("polar normal form needs det A > 0, got {0}")]
    NonPositiveDeterminant(f64),
    #[error(transparent)]
    Forms(#[from] FormsError),
    #[error(transparent)]
    RatFun(#[from] RatFunError),
}

/// Result alias for this module.
pub type HkResult<T> = Result<T, HkError>;

/// Tolerance for structural checks on [`PPoint`] inputs.
pub const STRUCTURE_TOL: f64 = 1e-12;

/// Relative singular-value threshold used for numerical ranks.
pub const RANK_TOL: f64 = 1e-10;

/// `lambda = tr(A A^T - B B^T)/3` over any scalar type.
pub fn lambda_of<S: Scalar>(a: &Mat3<S>, b: &Mat3<S>) -> S {
    let mut acc = S::cst(0.0);
    for i in 0..3 {
        for j in 0..3 {
            acc = acc + a[i][j] * a[i][j] - b[i][j] * b[i][j];
        }
    }
    acc / S::cst(3.0)
}

/// `F(A, B, lambda) = A A^T - B B^T - lambda I`. For symmetric `A` this is
/// `A^2 - B B^T - lambda I`; the transpose form also applies to the raw,
/// non-symmetric semiflat matrices.
pub fn constraint_f(a: &Matrix3<f64>, b: &Matrix3<f64>, lambda: f64) -> Matrix3<f64> {
    a * a.transpose() - b * b.transpose() - Matrix3::identity() * lambda
}

/// A point of the parameter space: `A` symmetric, `B` with zero first row,
/// `lambda > 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct PPoint {
    /// Symmetric matrix `A`.
    pub a: Matrix3<f64>,
    /// Matrix `B` with zero first row.
    pub b: Matrix3<f64>,
    /// Scale `lambda`.
    pub lambda: f64,
}

impl PPoint {
    /// Validate and build a point.
    pub fn new(a: Matrix3<f64>, b: Matrix3<f64>, lambda: f64) -> HkResult<Self> {
        let asym = (a - a.transpose()).norm();
        if asym > STRUCTURE_TOL {
            return Err(HkError::NotSymmetric(asym));
        }
        let row = b.row(0).norm();
        if row > STRUCTURE_TOL {
            return Err(HkError::FirstRowNonzero(row));
        }
        if !(lambda > 0.0) {
            return Err(HkError::NonPositiveLambda(lambda));
        }
        Ok(PPoint { a, b, lambda })
    }

    /// The base point `(I, 0, 1)`.
    pub fn identity() -> Self {
        PPoint {
            a: Matrix3::identity(),
            b: Matrix3::zeros(),
            lambda: 1.0,
        }
    }

    /// Frobenius norm of the constraint.
    pub fn residual(&self) -> f64 {
        constraint_f(&self.a, &self.b, self.lambda).norm()
    }

    /// Constraint satisfied to `tol`.
    pub fn is_on_manifold(&self, tol: f64) -> bool {
        self.residual() <= tol
    }

    /// Trace gauge `tr A = 3` satisfied to `tol`.
    pub fn is_gauge_fixed(&self, tol: f64) -> bool {
        (self.a.trace() - 3.0).abs() <= tol
    }
}

/// A tangent vector `(A', B', lambda')`.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentVector {
    /// `A'`.
    pub a_dot: Matrix3<f64>,
    /// `B'`.
    pub b_dot: Matrix3<f64>,
    /// `lambda'`.
    pub lambda_dot: f64,
}

/// The tangent space of the constraint set at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentSpace {
    /// Orthonormal basis of the nullspace.
    pub basis: Vec<TangentVector>,
    /// Numerical rank of the assembled differential.
    pub rank: usize,
    /// Number of scalar unknowns (`A'`, `B'`, `lambda'`).
    pub unknowns: usize,
    /// Number of scalar equations.
    pub equations: usize,
}

impl TangentSpace {
    /// Dimension.
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Largest `|A'|` over the basis.
    pub fn max_a_dot(&self) -> f64 {
        self.basis
            .iter()
            .map(|v| v.a_dot.norm())
            .fold(0.0, f64::max)
    }

    /// Largest `|lambda'|` over the basis.
    pub fn max_lambda_dot(&self) -> f64 {
        self.basis
            .iter()
            .map(|v| v.lambda_dot.abs())
            .fold(0.0, f64::max)
    }

    /// Largest first-row entry of `B'` over the basis.
    pub fn max_b_first_row(&self) -> f64 {
        self.basis
            .iter()
            .map(|v| v.b_dot.row(0).amax())
            .fold(0.0, f64::max)
    }
}

const UNKNOWNS: usize = 19;
const EQUATIONS: usize = 13;

fn unpack(v: &[f64]) -> TangentVector {
    TangentVector {
        a_dot: Matrix3::from_fn(|i, j| v[3 * i + j]),
        b_dot: Matrix3::from_fn(|i, j| v[9 + 3 * i + j]),
        lambda_dot: v[18],
    }
}

/// The linearised constraint and gauge conditions applied to a tangent
/// vector: six components of `A' A^T + A A'^T - B' B^T - B B'^T - lambda' I`,
/// three of `A' - A'^T`, the trace of `A'`, and the first row of `B'`.
fn differential(p: &PPoint, t: &TangentVector) -> [f64; EQUATIONS] {
    let f = t.a_dot * p.a.transpose() + p.a * t.a_dot.transpose()
        - t.b_dot * p.b.transpose()
        - p.b * t.b_dot.transpose()
        - Matrix3::identity() * t.lambda_dot;
    let s = t.a_dot - t.a_dot.transpose();
    [
        f[(0, 0)],
        f[(1, 1)],
        f[(2, 2)],
        f[(0, 1)],
        f[(0, 2)],
        f[(1, 2)],
        s[(0, 1)],
        s[(0, 2)],
        s[(1, 2)],
        t.a_dot.trace(),
        t.b_dot[(0, 0)],
        t.b_dot[(0, 1)],
        t.b_dot[(0, 2)],
    ]
}

/// Nullspace of the full differential at `p` (constraint, symmetry of
/// `A'`, trace of `A'` and first row of `B'`), computed from a singular
/// value decomposition. Fails when the differential is not of full rank.
pub fn tangent_space(p: &PPoint) -> HkResult<TangentSpace> {
    // Pad to a square matrix so that the decomposition returns a full set
    // of right singular vectors.
    let mut j = DMatrix::<f64>::zeros(UNKNOWNS, UNKNOWNS);
    for k in 0..UNKNOWNS {
        let mut e = [0.0; UNKNOWNS];
        e[k] = 1.0;
        let col = differential(p, &unpack(&e));
        for (r, v) in col.iter().enumerate() {
            j[(r, k)] = *v;
        }
    }
    let svd = j.svd(false, true);
    let vt = svd.v_t.as_ref().expect("requested right singular vectors");
    let smax = svd.singular_values.max();
    let cut = RANK_TOL * smax.max(1.0);
    let rank = svd.singular_values.iter().filter(|&&s| s > cut).count();
    if rank < EQUATIONS {
        return Err(HkError::NotManifoldPoint {
            rank,
            expected: EQUATIONS,
        });
    }
    let basis = (0..UNKNOWNS)
        .filter(|&i| svd.singular_values[i] <= cut)
        .map(|i| {
            let row: Vec<f64> = vt.row(i).iter().cloned().collect();
            unpack(&row)
        })
        .collect();
    Ok(TangentSpace {
        basis,
        rank,
        unknowns: UNKNOWNS,
        equations: EQUATIONS,
    })
}

/// Polar normal form of a pair `(A, B)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Symmetrized {
    /// The rotation `U` in SO(3).
    pub u: Matrix3<f64>,
    /// `A~ = U A`, symmetric positive definite.
    pub a: Matrix3<f64>,
    /// `B~ = U B`.
    pub b: Matrix3<f64>,
}

/// Rotate `(A, B)` by the unique `U` in SO(3) that makes `U A` symmetric
/// positive definite: `A = U^T A~` is the polar decomposition of `A`.
pub fn symmetrize(a: &Matrix3<f64>, b: &Matrix3<f64>) -> HkResult<Symmetrized> {
    let det = a.determinant();
    if !(det > 0.0) {
        return Err(HkError::NonPositiveDeterminant(det));
    }
    let svd = a.svd(true, true);
    let w = svd.u.expect("requested");
    let vt = svd.v_t.expect("requested");
    let sigma = Matrix3::from_diagonal(&svd.singular_values);
    let u = vt.transpose() * w.transpose();
    let p = vt.transpose() * sigma * vt;
    let p = (p + p.transpose()) * 0.5;
    Ok(Symmetrized { u, a: p, b: u * b })
}

/// How derivatives at `t = 0` were obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DerivativeMethod {
    /// Exact differentiation of the closed form by jet arithmetic.
    Jet,
    /// Richardson-extrapolated central differences.
    Richardson,
}

/// Smallest Richardson step; the coarser levels use `2h` and `4h`.
pub const RICHARDSON_STEP: f64 = 1e-3;

/// Derivatives of a family at `t = 0` and the second-order identity.
#[derive(Clone, Debug, PartialEq)]
pub struct SecondDerivativeReport {
    /// Family label.
    pub family: String,
    /// Derivative method used for the reported values.
    pub method: DerivativeMethod,
    /// `A'(0)`.
    pub a_dot: Matrix3<f64>,
    /// `A''(0)`.
    pub a_ddot: Matrix3<f64>,
    /// `B'(0)`.
    pub b_dot: Matrix3<f64>,
    /// `lambda'(0)`.
    pub lambda_dot: f64,
    /// `lambda''(0)`, with `lambda(t)` read off from the constraint.
    pub lambda_ddot: f64,
    /// `A'' + A''^T - B' B'^T - lambda'' I`.
    pub mm_printed: Matrix3<f64>,
    /// `A'' + A''^T - 2 B' B'^T - lambda'' I`, the second derivative of
    /// the constraint at `(I, 0, 1)` when `A'(0) = 0`.
    pub mm_factor2: Matrix3<f64>,
    /// Largest difference between jet and Richardson values of `A''`,
    /// `B'` and `lambda''`, when both are available.
    pub richardson_gap: Option<f64>,
}

impl SecondDerivativeReport {
    /// Frobenius norm of the identity as printed.
    pub fn mm_residual_printed(&self) -> f64 {
        self.mm_printed.norm()
    }

    /// Frobenius norm of the identity with the factor 2.
    pub fn mm_residual_factor2(&self) -> f64 {
        self.mm_factor2.norm()
    }

    /// Taylor coefficient `A''(0)/2`.
    pub fn a_taylor2(&self) -> Matrix3<f64> {
        self.a_ddot * 0.5
    }

    /// Taylor coefficient `lambda''(0)/2`.
    pub fn lambda_taylor2(&self) -> f64 {
        self.lambda_ddot * 0.5
    }
}

fn pack(p: &FamilyPoint) -> [f64; UNKNOWNS] {
    let mut out = [0.0; UNKNOWNS];
    for i in 0..3 {
        for j in 0..3 {
            out[3 * i + j] = p.a[(i, j)];
            out[9 + 3 * i + j] = p.b[(i, j)];
        }
    }
    out[18] = p.lambda;
    out
}

/// First and second derivatives at `t = 0` by central differences on the
/// steps `4h, 2h, h`, extrapolated twice in `h^2`.
fn richardson(f: &DeformationFamily) -> HkResult<([f64; UNKNOWNS], [f64; UNKNOWNS])> {
    let f0 = pack(&f.eval(0.0)?);
    let mut d1 = Vec::new();
    let mut d2 = Vec::new();
    for k in [4.0, 2.0, 1.0] {
        let h = RICHARDSON_STEP * k;
        let fp = pack(&f.eval(h)?);
        let fm = pack(&f.eval(-h)?);
        let mut a = [0.0; UNKNOWNS];
        let mut b = [0.0; UNKNOWNS];
        for i in 0..UNKNOWNS {
            a[i] = (fp[i] - fm[i]) / (2.0 * h);
            b[i] = (fp[i] - 2.0 * f0[i] + fm[i]) / (h * h);
        }
        d1.push(a);
        d2.push(b);
    }
    let extrapolate = |d: &[[f64; UNKNOWNS]]| {
        let mut out = [0.0; UNKNOWNS];
        for i in 0..UNKNOWNS {
            let r0 = (4.0 * d[1][i] - d[0][i]) / 3.0;
            let r1 = (4.0 * d[2][i] - d[1][i]) / 3.0;
            out[i] = (16.0 * r1 - r0) / 15.0;
        }
        out
    };
    Ok((extrapolate(&d1), extrapolate(&d2)))
}

/// Differentiate a family at `t = 0` and evaluate the second-order
/// identity both as `A'' + A''^T - B'B'^T = lambda'' I` and with the
/// coefficient 2 on `B'B'^T`. Jet arithmetic is used when the closed form
/// supports it, with Richardson extrapolation as cross-check; otherwise
/// Richardson values are reported.
pub fn second_derivative_report(f: &DeformationFamily) -> HkResult<SecondDerivativeReport> {
    let (r1, r2) = richardson(f)?;
    let jets = match f.jets(0.0) {
        Some(r) => {
            let (a, b, l) = r?;
            let finite = a
                .iter()
                .flatten()
                .chain(b.iter().flatten())
                .all(|j| j.is_finite())
                && l.is_finite();
            finite.then_some((a, b, l))
        }
        None => None,
    };
    let (method, d1, d2, gap) = match jets {
        Some((a, b, l)) => {
            let mut d1 = [0.0; UNKNOWNS];
            let mut d2 = [0.0; UNKNOWNS];
            for i in 0..3 {
                for j in 0..3 {
                    d1[3 * i + j] = a[i][j].d1;
                    d2[3 * i + j] = a[i][j].d2;
                    d1[9 + 3 * i + j] = b[i][j].d1;
                    d2[9 + 3 * i + j] = b[i][j].d2;
                }
            }
            d1[18] = l.d1;
            d2[18] = l.d2;
            // Compare the quantities the report is about: A'', B', lambda''.
            let mut gap: f64 = 0.0;
            for i in 0..9 {
                gap = gap.max((d2[i] - r2[i]).abs());
                gap = gap.max((d1[9 + i] - r1[9 + i]).abs());
            }
            gap = gap.max((d2[18] - r2[18]).abs());
            (DerivativeMethod::Jet, d1, d2, Some(gap))
        }
        None => (DerivativeMethod::Richardson, r1, r2, None),
    };
    let tv1 = unpack(&d1);
    let tv2 = unpack(&d2);
    let bbt = tv1.b_dot * tv1.b_dot.transpose();
    let sym = tv2.a_dot + tv2.a_dot.transpose();
    let lam = Matrix3::identity() * tv2.lambda_dot;
    Ok(SecondDerivativeReport {
        family: f.label(),
        method,
        a_dot: tv1.a_dot,
        a_ddot: tv2.a_dot,
        b_dot: tv1.b_dot,
        lambda_dot: tv1.lambda_dot,
        lambda_ddot: tv2.lambda_dot,
        mm_printed: sym - bbt - lam,
        mm_factor2: sym - bbt * 2.0 - lam,
        richardson_gap: gap,
    })
}

fn fmt_mat(m: &Matrix3<f64>) -> String {
    let rows: Vec<String> = (0..3)
        .map(|i| {
            let r: Vec<String> = (0..3).map(|j| format!("{:.12}", m[(i, j)])).collect();
            format!("[{}]", r.join(", "))
        })
        .collect();
    format!("[{}]", rows.join(", "))
}

impl fmt::Display for SecondDerivativeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "family: {} ({:?})", self.family, self.method)?;
        writeln!(f, "A'' = {}", fmt_mat(&self.a_ddot))?;
        writeln!(f, "B'  = {}", fmt_mat(&self.b_dot))?;
        writeln!(f, "lambda'' = {:.12}", self.lambda_ddot)?;
        writeln!(
            f,
            "|A''+A''^T-B'B'^T-lambda'' I| = {:.3e}",
            self.mm_residual_printed()
        )?;
        write!(
            f,
            "|A''+A''^T-2B'B'^T-lambda'' I| = {:.3e}",
            self.mm_residual_factor2()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constraint_at_identity() {
        assert_eq!(
            constraint_f(&Matrix3::identity(), &Matrix3::zeros(), 1.0),
            Matrix3::zeros()
        );
        assert!(PPoint::identity().is_on_manifold(0.0));
        assert!(PPoint::new(Matrix3::identity(), Matrix3::identity(), 1.0).is_err());
    }

    #[test]
    fn tangent_space_at_identity() {
        let ts = tangent_space(&PPoint::identity()).unwrap();
        assert_eq!(ts.dim(), 6);
        assert_eq!(ts.rank, 13);
        assert!(ts.max_a_dot() < 1e-12);
        assert!(ts.max_lambda_dot() < 1e-12);
        assert!(ts.max_b_first_row() < 1e-12);
    }

    #[test]
    fn symmetric_input_is_fixed() {
        let a = Matrix3::new(2.0, 0.5, 0.0, 0.5, 1.0, 0.1, 0.0, 0.1, 1.5);
        let s = symmetrize(&a, &Matrix3::zeros()).unwrap();
        assert!((s.u - Matrix3::identity()).norm() < 1e-13);
        assert!((s.a - a).norm() < 1e-13);
        assert!(symmetrize(&(-a), &Matrix3::zeros()).is_err());
    }

    #[test]
    fn trivial_family_report_vanishes() {
        let r = second_derivative_report(&DeformationFamily::Trivial).unwrap();
        assert_eq!(r.mm_residual_printed(), 0.0);
        assert_eq!(r.mm_residual_factor2(), 0.0);
    }
}

//! The hyperKaehler parameter space, polar normal forms and the explicit
//! deformation families.

use alh_lab::hk::{
    family_semiflat, second_derivative_report, symmetrize, tangent_space, CalabiScalingSymbolic,
    DeformationFamily, DerivativeMethod, PPoint, SemiflatTwist,
};
use nalgebra::{Matrix3, Rotation3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CS: [f64; 3] = [0.1, 0.5, 1.0];

fn max_abs(m: &Matrix3<f64>) -> f64 {
    m.iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

#[test]
fn tangent_space_at_the_identity() {
    let ts = tangent_space(&PPoint::identity()).unwrap();
    assert_eq!(ts.dim(), 6);
    assert_eq!(ts.rank, 13);
    assert!(ts.max_a_dot() < 1e-10);
    assert!(ts.max_lambda_dot() < 1e-10);
    assert!(ts.max_b_first_row() < 1e-10);
    // The nullspace is exactly the span of B' with zero first row: its
    // projection onto the six unit matrices E_ij (i >= 1) has full rank.
    let m = nalgebra::DMatrix::from_fn(6, 6, |r, c| {
        let (i, j) = (1 + r / 3, r % 3);
        ts.basis[c].b_dot[(i, j)]
    });
    assert_eq!(m.rank(1e-10), 6);
}

#[test]
fn polar_form_is_idempotent_and_gauge_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..20 {
        let a = Matrix3::identity() + Matrix3::from_fn(|_, _| rng.gen_range(-0.3..0.3));
        let b = Matrix3::from_fn(|i, _| {
            if i == 0 {
                0.0
            } else {
                rng.gen_range(-1.0..1.0)
            }
        });
        let s = symmetrize(&a, &b).unwrap();
        assert!(max_abs(&(s.a - s.a.transpose())) < 1e-12);
        assert!(s.a.symmetric_eigenvalues().min() > 0.0);
        assert!((s.u.determinant() - 1.0).abs() < 1e-12);
        assert!(max_abs(&(s.u * s.u.transpose() - Matrix3::identity())) < 1e-12);
        let again = symmetrize(&s.a, &s.b).unwrap();
        assert!(max_abs(&(again.a - s.a)) < 1e-12);
        assert!(max_abs(&(again.u - Matrix3::identity())) < 1e-12);
        let axis = Vector3::new(rng.gen(), rng.gen(), rng.gen::<f64>()).normalize();
        let u0 = Rotation3::from_axis_angle(
            &nalgebra::Unit::new_normalize(axis),
            rng.gen_range(0.0..3.0),
        );
        let u0 = *u0.matrix();
        let rotated = symmetrize(&(u0 * a), &(u0 * b)).unwrap();
        assert!(max_abs(&(rotated.a - s.a)) < 1e-12);
        assert!(max_abs(&(rotated.b - s.b)) < 1e-12);
    }
    assert!(symmetrize(&(-Matrix3::<f64>::identity()), &Matrix3::zeros()).is_err());
}

#[test]
fn theta_twist_matches_listed_normal_form() {
    for c in CS {
        let (a, b) = family_semiflat(SemiflatTwist::Theta, c).unwrap();
        let s = symmetrize(&a, &b).unwrap();
        let r = (1.0 + c * c).sqrt();
        let u = Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0 / r, c / r, 0.0, -c / r, 1.0 / r);
        let at = Matrix3::new(1.0, 0.0, 0.0, 0.0, r, 0.0, 0.0, 0.0, r);
        let bt = Matrix3::new(
            0.0,
            0.0,
            0.0,
            0.0,
            -c * c / r,
            c / r,
            0.0,
            -c / r,
            -c * c / r,
        );
        assert!(max_abs(&(s.u - u)) < 1e-12, "c={c}");
        assert!(max_abs(&(s.a - at)) < 1e-12, "c={c}");
        assert!(max_abs(&(s.b - bt)) < 1e-12, "c={c}");
    }
}

/// Normal form of the `y1` twist: `d = 1 + c^2/4`.
fn y1_twist_normal_form(
    c: f64,
    a12_numerator: f64,
    b22_numerator: f64,
) -> (Matrix3<f64>, Matrix3<f64>) {
    let d = 1.0 + c * c / 4.0;
    let a = Matrix3::new(
        (1.0 + 0.75 * c * c) / d,
        a12_numerator / d,
        0.0,
        a12_numerator / d,
        (1.0 + c * c / 4.0 + c.powi(4) / 8.0) / d,
        0.0,
        0.0,
        0.0,
        1.0,
    );
    let b = Matrix3::new(
        0.0,
        (c + c.powi(3) / 4.0) / d,
        0.0,
        0.0,
        b22_numerator / d,
        0.0,
        0.0,
        0.0,
        0.0,
    );
    (a, b)
}

fn swap_y1_y2(m: &Matrix3<f64>) -> Matrix3<f64> {
    let p = Matrix3::new(1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0);
    p * m * p
}

#[test]
fn torus_twists_match_corrected_normal_forms() {
    for c in CS {
        let corrected = y1_twist_normal_form(c, -c.powi(3) / 4.0, -c * c / 2.0 - c.powi(4) / 8.0);
        let listed =
            y1_twist_normal_form(c, -3.0 * c.powi(3) / 4.0, -c * c / 2.0 - c.powi(3) / 8.0);
        let (a, b) = family_semiflat(SemiflatTwist::Y1, c).unwrap();
        let s = symmetrize(&a, &b).unwrap();
        assert!(max_abs(&(s.a - corrected.0)) < 1e-12, "c={c}");
        assert!(max_abs(&(s.b - corrected.1)) < 1e-12, "c={c}");
        // All listed entries agree except A12 = A21 and B22; the listed B22
        // has c^3 in place of c^4 and is therefore right only at c = 1.
        let da = s.a - listed.0;
        let db = s.b - listed.1;
        for i in 0..3 {
            for j in 0..3 {
                let off_a = (i, j) == (0, 1) || (i, j) == (1, 0);
                assert_eq!(da[(i, j)].abs() > 1e-12, off_a, "A{}{} c={c}", i + 1, j + 1);
                let off_b = (i, j) == (1, 1) && c != 1.0;
                assert_eq!(db[(i, j)].abs() > 1e-12, off_b, "B{}{} c={c}", i + 1, j + 1);
            }
        }
        // The y2 twist is the y1 twist with the second and third indices swapped.
        let (a2, b2) = family_semiflat(SemiflatTwist::Y2, c).unwrap();
        let s2 = symmetrize(&a2, &b2).unwrap();
        assert!(max_abs(&(s2.a - swap_y1_y2(&corrected.0))) < 1e-12);
        assert!(max_abs(&(s2.b - swap_y1_y2(&corrected.1))) < 1e-12);
    }
}

#[test]
fn scaling_family_is_exact_and_matches_listed_variations() {
    let check = CalabiScalingSymbolic::new().unwrap().verify().unwrap();
    assert!(check.constraint_identically_zero && check.trace_reduces_to_relation);
    for alpha in [1.0, 0.7, -1.3] {
        let r = second_derivative_report(&DeformationFamily::CalabiScaling { alpha }).unwrap();
        assert_eq!(r.method, DerivativeMethod::Jet);
        let a2 = alpha * alpha;
        let s3 = 3f64.sqrt() * alpha;
        assert!(
            max_abs(&(r.a_ddot - Matrix3::from_diagonal(&Vector3::new(-2.0 * a2, a2, a2)))) < 1e-9
        );
        assert!(max_abs(&(r.b_dot - Matrix3::from_diagonal(&Vector3::new(0.0, s3, s3)))) < 1e-9);
        assert!(max_abs(&r.a_dot) < 1e-12 && r.lambda_dot.abs() < 1e-12);
        assert!(
            r.richardson_gap.unwrap() < 1e-9,
            "gap {:?}",
            r.richardson_gap
        );
        // lambda'' is -4 alpha^2; the listed -2 alpha^2 is its Taylor coefficient.
        assert!((r.lambda_ddot + 4.0 * a2).abs() < 1e-9);
        assert!((r.lambda_taylor2() + 2.0 * a2).abs() < 1e-9);
        assert!(r.mm_residual_factor2() < 1e-9);
    }
}

#[test]
fn modulus_family_matches_listed_taylor_coefficients() {
    for (alpha, beta) in [(1.0, 0.5), (0.4, -0.9), (-0.6, 0.2)] {
        let r =
            second_derivative_report(&DeformationFamily::CalabiModulus { alpha, beta }).unwrap();
        let k = alpha * alpha + beta * beta;
        let listed_a = Matrix3::from_diagonal(&Vector3::new(-k / 3.0, k / 6.0, k / 6.0));
        let listed_b = Matrix3::new(0.0, 0.0, 0.0, 0.0, alpha, beta, 0.0, beta, -alpha);
        assert!(max_abs(&(r.a_taylor2() - listed_a)) < 1e-9);
        assert!(max_abs(&(r.b_dot - listed_b)) < 1e-9);
        assert!((r.lambda_taylor2() + 2.0 * k / 3.0).abs() < 1e-9);
        assert!(r.richardson_gap.unwrap() < 1e-9);
        assert!(r.mm_residual_factor2() < 1e-9);
        assert!(r.mm_residual_printed() > 0.1);
    }
    // On alpha = 0 the smooth branch is lost and Richardson values are reported.
    let r = second_derivative_report(&DeformationFamily::CalabiModulus {
        alpha: 0.0,
        beta: 0.5,
    })
    .unwrap();
    assert_eq!(r.method, DerivativeMethod::Richardson);
}

#[test]
fn semiflat_families_are_first_order_rigid() {
    for w in SemiflatTwist::ALL {
        let r = second_derivative_report(&DeformationFamily::Semiflat(w)).unwrap();
        assert_eq!(r.method, DerivativeMethod::Richardson);
        assert!(max_abs(&r.a_dot) < 1e-8, "{}", w.name());
        assert!(r.lambda_dot.abs() < 1e-8);
        assert!(
            r.mm_residual_factor2() < 1e-6,
            "{}: {}",
            w.name(),
            r.mm_residual_factor2()
        );
    }
}

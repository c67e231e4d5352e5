//! Curvature of the model metrics against an independent finite-difference
//! oracle built from hand-written closed forms.

mod common;

use alh_lab::geometry::{curvature, metric_a, metric_gh, Chart};
use alh_lab::ratfun::RatFun;
use common::{
    fd_riemann, gh_closed_form, metric_a_closed_form, ricci_from, scalar_from, sphere_torus,
    steps_for,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_points(n: usize, seed: u64) -> Vec<[f64; 4]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            [
                rng.gen_range(0.2..0.5),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(0.0..std::f64::consts::TAU),
            ]
        })
        .collect()
}

#[test]
fn gh_riemann_matches_finite_differences() {
    let curv = curvature(&metric_gh()).unwrap();
    assert!(curv.ricci_flat());
    for p in random_points(10, 7) {
        let (ho, hi) = steps_for(p[0]);
        let fd = fd_riemann(&gh_closed_form, p, ho, hi);
        let fp = Chart::boundary().fpoint(p);
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for (idx, r) in curv.riemann.iter().enumerate() {
            let exact = r.eval_f64(&fp).unwrap();
            worst = worst.max((exact - fd[idx]).abs());
            scale = scale.max(exact.abs());
        }
        assert!(scale > 1.0, "curvature should not vanish at {p:?}");
        assert!(worst < 1e-6, "{p:?}: Riemann error {worst}");
        let ric = ricci_from(&fd);
        let rmax = ric.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(rmax < 1e-6, "{p:?}: oracle Ricci {rmax}");
    }
}

#[test]
fn sphere_has_positive_scalar_curvature() {
    for p in [
        [0.3, -0.2, 0.0, 0.0],
        [1.1, 0.4, 0.5, 1.0],
        [0.0, 0.0, 0.0, 0.0],
    ] {
        let fd = fd_riemann(&sphere_torus, p, 1e-3, 1e-3);
        let s = scalar_from(&sphere_torus, p, &ricci_from(&fd));
        assert!((s - 2.0).abs() < 1e-6, "{p:?}: {s}");
    }
}

#[test]
fn metric_a_ricci_at_half() {
    let curv = curvature(&metric_a()).unwrap();
    assert!(!curv.ricci_flat());
    let p = [0.5, 0.0, 0.0, 0.0];
    let (ho, hi) = steps_for(p[0]);
    let ric_fd = ricci_from(&fd_riemann(&metric_a_closed_form, p, ho, hi));
    let fp = Chart::boundary().fpoint(p);
    for j in 0..4 {
        for k in 0..4 {
            let exact = curv.ricci[j][k].eval_f64(&fp).unwrap();
            assert!(
                (exact - ric_fd[j][k]).abs() < 1e-6,
                "Ric[{j}][{k}]: {exact} vs {}",
                ric_fd[j][k]
            );
        }
    }
    // Regression value from the oracle: Ric_xx = 8 at x = 1/2, that is 2/x^2.
    assert!((ric_fd[0][0] - 8.0).abs() < 1e-6);
    assert_eq!(curv.ricci[0][0], RatFun::parse("2/x^2").unwrap());
    assert_eq!(curv.ricci[3][3], RatFun::parse("x^4/2").unwrap());
}

#[test]
fn gh_bianchi_and_scalar() {
    let curv = curvature(&metric_gh()).unwrap();
    assert_eq!(curv.first_bianchi_violations().unwrap(), 0);
    assert!(curv.scalar.is_zero());
}

//! Numerical checks of the radial solver against closed-form solutions.

use alh_lab::geometry::metric_gh;
use alh_lab::indicial::{indicial_poly, indicial_roots};
use alh_lab::modes::{
    discrete_a_norm, fit_expansion, fit_exponents, fit_log_rate, simpson, solve_bvp,
    solve_with_refinement, weighted_singular_values, BVProblem, BoundaryCondition, ModesConfig,
    ModesError, NormDensity, RadialGrid,
};
use alh_lab::operators::{
    laplacian, product_model_laplacian, project_modes, reduced_d00, reduced_scalar_b,
    LaplacianSign, Parity,
};

fn cfg() -> ModesConfig {
    ModesConfig::default()
}

fn scalar_dirichlet(n: usize) -> (RadialGrid, Vec<f64>) {
    let grid = RadialGrid::geometric(1e-3, 0.5, n);
    let p = BVProblem {
        op: reduced_scalar_b(),
        grid: grid.clone(),
        rhs: None,
        left: BoundaryCondition::Dirichlet(vec![2.0]),
        right: BoundaryCondition::Dirichlet(vec![1.0]),
    };
    let s = solve_bvp(&p).unwrap();
    assert!(s.residual < 1e-8);
    (grid, s.values[0].clone())
}

/// Closed form `a + b/x` through `u(x0) = 2`, `u(xN) = 1`.
fn closed_form(x: f64) -> f64 {
    let (x0, x1) = (1e-3, 0.5);
    let b = (2.0 - 1.0) / (1.0 / x0 - 1.0 / x1);
    let a = 1.0 - b / x1;
    a + b / x
}

#[test]
fn scalar_b_operator_converges_at_second_order() {
    let mut errs = Vec::new();
    for n in [250, 500, 1000, 2000] {
        let (g, u) = scalar_dirichlet(n);
        let e = g
            .nodes
            .iter()
            .zip(&u)
            .map(|(x, v)| (v - closed_form(*x)).abs())
            .fold(0.0f64, f64::max);
        errs.push(e);
    }
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order > 1.9, "observed order {order} from {errs:?}");
    }
}

#[test]
fn zero_mode_solution_spans_constants_and_inverse() {
    let (g, u) = scalar_dirichlet(2000);
    let s = alh_lab::modes::Solution {
        grid: g,
        values: vec![u],
        residual: 0.0,
    };
    let fit = fit_exponents(&s, &[-1.0, 0.0], &cfg()).unwrap();
    assert!(fit.residual < 1e-5, "residual {}", fit.residual);
    let roots = indicial_roots(&indicial_poly(&reduced_scalar_b()).unwrap()).unwrap();
    // Weight -5/2 admits both roots.
    let f2 = fit_expansion(&s, &roots, -2.5, &cfg()).unwrap();
    assert_eq!(f2.exponents, vec![-1.0, 0.0]);
    // Weight -3/2 admits only the constant.
    let f3 = fit_expansion(&s, &roots, -1.5, &cfg()).unwrap();
    assert_eq!(f3.exponents, vec![0.0]);
    assert!(matches!(
        fit_expansion(&s, &roots, 5.0, &cfg()),
        Err(ModesError::EmptyCandidates(_))
    ));
}

#[test]
fn c_mode_decays_like_exp_minus_one_over_x() {
    let lap = laplacian(&metric_gh(), LaplacianSign::Analyst).unwrap();
    let op = project_modes(&lap, 0, [1, 0], false).unwrap();
    let p = BVProblem {
        op,
        grid: cfg().grid(),
        rhs: None,
        left: BoundaryCondition::Decay { weight: 0.0 },
        right: BoundaryCondition::Dirichlet(vec![1.0]),
    };
    let s = solve_bvp(&p).unwrap();
    let fit = fit_log_rate(&s, 1.0, &cfg()).unwrap();
    assert!((fit.rate + 1.0).abs() < 0.05, "{fit:?}");
    // Pointwise against the closed form exp(-1/x) normalized at x = 1/2.
    for (x, v) in s.grid.nodes.iter().zip(&s.values[0]) {
        if *x > 0.03 {
            let e = (-1.0 / x + 2.0f64).exp();
            assert!((v - e).abs() < 1e-2 * e, "x={x} u={v} exact={e}");
        }
    }
}

#[test]
fn a_mode_decays_like_gaussian_in_inverse_x() {
    let op = project_modes(&product_model_laplacian().unwrap(), 1, [0, 0], true).unwrap();
    let p = BVProblem {
        op,
        grid: cfg().grid(),
        rhs: None,
        left: BoundaryCondition::Decay { weight: 0.0 },
        right: BoundaryCondition::Dirichlet(vec![1.0]),
    };
    let s = solve_bvp(&p).unwrap();
    let fit = fit_log_rate(&s, 2.0, &cfg()).unwrap();
    assert!((fit.rate + 0.5).abs() < 0.025, "{fit:?}");
    // Super-polynomial decay: log-log slope grows toward x = 0.
    let u = &s.values[0];
    let x = &s.grid.nodes;
    let slope = |i: usize, j: usize| (u[j].ln() - u[i].ln()) / (x[j].ln() - x[i].ln());
    let i1 = x.iter().position(|v| *v > 0.2).unwrap();
    let i2 = x.iter().position(|v| *v > 0.1).unwrap();
    assert!(slope(i2, i2 + 10) > 2.0 * slope(i1, i1 + 10));
}

#[test]
fn d00_even_block_leading_exponent_two() {
    let op = reduced_d00(Parity::Even).block(&[3, 4], "even block");
    let p = BVProblem {
        op: op.clone(),
        grid: cfg().grid(),
        rhs: None,
        left: BoundaryCondition::Decay { weight: 0.0 },
        right: BoundaryCondition::Linear(vec![(vec![1.0, 0.0], 1.0)]),
    };
    let s = solve_bvp(&p).unwrap();
    let roots = indicial_roots(&indicial_poly(&op).unwrap()).unwrap();
    let fit = fit_expansion(&s, &roots, 0.0, &cfg()).unwrap();
    assert_eq!(fit.exponents, vec![2.0]);
    assert!(fit.residual < 1e-4, "{fit:?}");
    assert!(!fit.flagged);
    let c = &fit.coefficients[0];
    assert!((c[0] - c[1]).abs() < 1e-4 * c[0].abs());
}

#[test]
fn d00_odd_block_exponents() {
    let op = reduced_d00(Parity::Odd).block(&[3, 4], "odd block");
    let p = BVProblem {
        op: op.clone(),
        grid: cfg().grid(),
        rhs: None,
        left: BoundaryCondition::Linear(vec![(vec![1.0, 0.0], 1.0)]),
        right: BoundaryCondition::Linear(vec![(vec![0.0, 1.0], 1.0)]),
    };
    let s = solve_bvp(&p).unwrap();
    let roots = indicial_roots(&indicial_poly(&op).unwrap()).unwrap();
    let fit = fit_expansion(&s, &roots, -3.0, &cfg()).unwrap();
    assert_eq!(fit.exponents, vec![-1.5, 0.5]);
    assert!(fit.residual < 1e-4, "{fit:?}");
}

#[test]
fn refinement_check_passes_for_smooth_problem() {
    let p = BVProblem {
        op: reduced_scalar_b(),
        grid: RadialGrid::geometric(1e-3, 0.5, 500),
        rhs: None,
        left: BoundaryCondition::Dirichlet(vec![2.0]),
        right: BoundaryCondition::Dirichlet(vec![1.0]),
    };
    let (_, d) = solve_with_refinement(&p, &cfg()).unwrap();
    assert!(d < 1e-4);
}

#[test]
fn decay_at_indicial_weight_is_rejected() {
    let p = BVProblem {
        op: reduced_scalar_b(),
        grid: RadialGrid::geometric(1e-3, 0.5, 200),
        rhs: None,
        left: BoundaryCondition::Decay { weight: -1.0 },
        right: BoundaryCondition::Dirichlet(vec![1.0]),
    };
    assert!(matches!(solve_bvp(&p), Err(ModesError::IndicialWeight(_))));
}

#[test]
fn weighted_norm_of_bump_matches_closed_form() {
    // u = x^mu (x-a)^2 (b-x)^2 on [a, b]; the x^-3 density and the weight
    // cancel the x^mu, leaving int (x-a)^4 (b-x)^4 x^-3 dx.
    let (a, b) = (0.1, 0.3);
    let grid = RadialGrid::geometric(1e-3, 0.5, 20000);
    let mu = 0.7;
    let u: Vec<f64> = grid
        .nodes
        .iter()
        .map(|x| {
            if *x > a && *x < b {
                x.powf(mu) * ((x - a) * (b - x)).powi(2)
            } else {
                0.0
            }
        })
        .collect();
    let v = discrete_a_norm(&grid, &u, mu, 0, NormDensity::Gh, 0, [0, 0]).unwrap();
    // Expand p(x) = (x-a)^4 (b-x)^4 = sum c_n x^n and integrate x^{n-3}.
    let mut c = vec![1.0f64];
    for root in [a, a, a, a, b, b, b, b] {
        let mut next = vec![0.0; c.len() + 1];
        for (i, ci) in c.iter().enumerate() {
            next[i + 1] += ci;
            next[i] -= root * ci;
        }
        c = next;
    }
    let mut exact = 0.0;
    for (n, cn) in c.iter().enumerate() {
        let e = n as i32 - 3;
        exact += if e == -1 {
            cn * (b / a).ln()
        } else {
            cn * (b.powi(e + 1) - a.powi(e + 1)) / (e + 1) as f64
        };
    }
    assert!(
        (v.value * v.value - exact).abs() < 1e-6 * exact.abs().max(1e-12),
        "{} vs {exact}",
        v.value.powi(2)
    );
    assert!(!v.divergent);
    let z = discrete_a_norm(
        &grid,
        &vec![0.0; grid.nodes.len()],
        0.0,
        2,
        NormDensity::A,
        1,
        [1, 1],
    )
    .unwrap();
    assert_eq!(z.value, 0.0);
}

#[test]
fn volume_equivalence_shifts_weight_by_one() {
    let grid = RadialGrid::geometric(1e-3, 0.5, 4000);
    let u: Vec<f64> = grid
        .nodes
        .iter()
        .map(|x| x * x * (1.0 - 2.0 * x).powi(2))
        .collect();
    for c in [-0.5, 0.0, 0.5] {
        let gh = discrete_a_norm(&grid, &u, c, 0, NormDensity::Gh, 0, [0, 0]).unwrap();
        let a = discrete_a_norm(&grid, &u, c - 1.0, 0, NormDensity::A, 0, [0, 0]).unwrap();
        assert!((gh.value - a.value).abs() < 1e-12 * gh.value);
    }
}

#[test]
fn divergent_weight_is_flagged() {
    let grid = RadialGrid::geometric(1e-3, 0.5, 400);
    let u = vec![1.0; grid.nodes.len()];
    let v = discrete_a_norm(&grid, &u, 0.0, 0, NormDensity::Gh, 0, [0, 0]).unwrap();
    assert!(v.divergent);
}

#[test]
fn singular_value_collapses_only_at_indicial_weights() {
    let op = reduced_scalar_b();
    let at = |c: f64, x0: f64| weighted_singular_values(&op, c, x0, 0.5, 0.05).unwrap();
    for c in [-2.0, -1.0] {
        let s1 = at(c, 1e-2).essential;
        let s2 = at(c, 1e-6).essential;
        let s3 = at(c, 1e-10).essential;
        assert!(
            s2 < 0.3 * s1 && s3 < 0.6 * s2,
            "c={c}: {s1} -> {s2} -> {s3}"
        );
    }
    // Away from the weights the essential value stays near the distance of
    // the shifted symbol from zero (1/4 at c = -3/2, 2 at c = 0).
    for (c, floor, count) in [(-1.5, 0.2, 0), (0.0, 1.0, 1), (-3.0, 1.0, 1)] {
        let s = at(c, 1e-10);
        assert_eq!(s.index_count, count, "c={c}");
        assert!(s.essential > floor, "c={c}: {s:?}");
    }
}

#[test]
fn simpson_integrates_smooth_functions() {
    let n = 100;
    let h = std::f64::consts::PI / n as f64;
    let f: Vec<f64> = (0..=n).map(|i| (i as f64 * h).sin()).collect();
    assert!((simpson(&f, h) - 2.0).abs() < 1e-7);
}

#[test]
fn solve_mode_covers_the_three_regimes() {
    use alh_lab::modes::{solve_mode, ModeRegime};
    let b = solve_mode(0, [0, 0], &cfg()).unwrap();
    assert_eq!(b.regime, ModeRegime::B);
    assert!(b.relative_error < 1e-4, "{}", b.relative_error);
    let c = solve_mode(0, [1, 0], &cfg()).unwrap();
    assert!(c.relative_error < 0.05, "{}", c.relative_error);
    let a = solve_mode(1, [0, 0], &cfg()).unwrap();
    assert!(a.relative_error < 0.05, "{}", a.relative_error);
    // At k = 0 the twist term y1 d_theta drops out, so a pure y2 frequency
    // decays like exp(-|m|/x) as well.
    let c2 = solve_mode(0, [0, 2], &cfg()).unwrap();
    assert_eq!(c2.expected_rate, Some(-2.0));
    assert!(c2.relative_error < 0.05, "{}", c2.relative_error);
}

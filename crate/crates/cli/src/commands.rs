//! Implementations of the subcommands.
//!
//! Each command returns an [`Outcome`]: the report to emit and, when a
//! check did not pass, the error that decides the exit code. A failed
//! check still produces its report so that the diagnostic reaches the
//! user. Errors returned directly (without a report) are usage errors or
//! failures before any result exists.

use crate::config::RunConfig;
use crate::error::{exact, numerical, CliError, CliResult};
use crate::output::Report;
use alh_lab::cohomology::{
    l2_hodge_table, moduli_dim, weight_shift, wh_interval, IntervalDegree, BRACKET_CONVENTION,
};
use alh_lab::geometry::{
    curvature, metric_a, metric_calabi, metric_flat, metric_gh, metric_model, MetricField,
};
use alh_lab::hk::{
    family_semiflat, gauge_residual, q_map, second_derivative_report, symmetrize,
    CalabiScalingSymbolic, DeformationFamily, SemiflatTwist, Triple,
};
use alh_lab::indicial::{indicial_poly, indicial_roots, weight_window};
use alh_lab::modes::{solve_mode, ModeFit, ModeRegime};
use alh_lab::operators::blowup::stage_substitution;
use alh_lab::operators::{
    blowup_lift, lift_chart, reduced_d00, reduced_scalar_b, structure_fields, BlowupStage, Parity,
    Structure,
};
use alh_lab::ratfun::{fmt_q, Point, RatFun, Var};
use nalgebra::Matrix3;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

/// Report plus the error, if any, that sets the exit code.
pub struct Outcome {
    /// Artifact to emit.
    pub report: Report,
    /// Failure detected while producing the report.
    pub failure: Option<CliError>,
}

impl Outcome {
    fn check(report: Report, failure: Option<CliError>) -> Self {
        Outcome { report, failure }
    }
}

fn mat3(m: &Matrix3<f64>) -> Value {
    json!((0..3)
        .map(|i| (0..3).map(|j| m[(i, j)]).collect::<Vec<_>>())
        .collect::<Vec<_>>())
}

fn rf_matrix<const N: usize>(m: &[[RatFun; N]; N]) -> Value {
    json!(m
        .iter()
        .map(|row| row.iter().map(|f| f.to_string()).collect::<Vec<_>>())
        .collect::<Vec<_>>())
}

/// Metric names accepted by `curvature --metric`.
pub fn parse_metric(name: &str) -> CliResult<MetricField> {
    match name {
        "gh" => Ok(metric_gh()),
        "a" => Ok(metric_a()),
        "model" => Ok(metric_model()),
        "flat" => Ok(metric_flat()),
        _ => {
            let n = name
                .strip_prefix("calabi:")
                .and_then(|n| n.parse::<u32>().ok())
                .ok_or_else(|| {
                    CliError::Usage(format!(
                        "unknown metric '{name}' (expected gh, a, model, flat or calabi:N)"
                    ))
                })?;
            metric_calabi(n).map_err(|e| CliError::Usage(e.to_string()))
        }
    }
}

/// `curvature`: exact Ricci and scalar curvature, or their values at a
/// point of the boundary chart.
pub fn curvature_cmd(metric: &str, at: Option<&[f64]>, exact_flag: bool) -> CliResult<Outcome> {
    let g = parse_metric(metric)?;
    let point = match at {
        None => None,
        Some(v) if v.len() == 4 => Some([v[0], v[1], v[2], v[3]]),
        Some(v) => {
            return Err(CliError::Usage(format!(
                "--at needs four values x,y1,y2,theta, got {}",
                v.len()
            )))
        }
    };
    let mut report = Report::new(
        "curvature",
        json!({ "metric": metric, "at": point, "exact": exact_flag }),
    );
    let curv = curvature(&g).map_err(exact("curvature"))?;
    let flat = curv.ricci_flat();
    let bianchi = curv
        .first_bianchi_violations()
        .map_err(exact("first Bianchi identity"))?;
    report.put("ricci_flat", json!(flat));
    report.put("first_bianchi_violations", json!(bianchi));
    if exact_flag || point.is_none() {
        if flat {
            report.put("ricci", json!("0 (identically)"));
        } else {
            report.put("ricci", rf_matrix(&curv.ricci));
        }
        report.put("scalar", json!(curv.scalar.to_string()));
    }
    if let Some(p) = point {
        let chart = g.chart();
        if !chart.in_default_domain(p) {
            report.warnings.push(format!(
                "point {p:?} is outside the default domain of the {}",
                chart.name
            ));
        }
        let fp = chart.fpoint(p);
        let mut ric = [[0.0; 4]; 4];
        for (i, row) in ric.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = curv.ricci[i][j]
                    .eval_f64(&fp)
                    .map_err(numerical("evaluate Ricci"))?;
            }
        }
        report.put("ricci_at", json!(ric));
        report.put(
            "scalar_at",
            json!(curv
                .scalar
                .eval_f64(&fp)
                .map_err(numerical("evaluate scalar curvature"))?),
        );
    }
    let must_be_flat = matches!(metric, "gh" | "flat" | "calabi:2");
    let failure = if bianchi > 0 {
        Some(CliError::Consistency(format!(
            "{bianchi} first Bianchi components are nonzero"
        )))
    } else if must_be_flat && !flat {
        Some(CliError::Consistency(format!(
            "Ricci curvature of '{metric}' is not identically zero"
        )))
    } else {
        None
    };
    Ok(Outcome::check(report, failure))
}

/// `indicial`: determinant, roots with multiplicities and nullvectors,
/// and optionally the indicial weights.
pub fn indicial_cmd(operator: &str, weights: bool) -> CliResult<Outcome> {
    let (op, names): (_, Vec<&str>) = match operator {
        "scalar" => (reduced_scalar_b(), vec!["u"]),
        "d00-even" => (
            reduced_d00(Parity::Even),
            Parity::Even.component_names().to_vec(),
        ),
        "d00-odd" => (
            reduced_d00(Parity::Odd),
            Parity::Odd.component_names().to_vec(),
        ),
        _ => {
            return Err(CliError::Usage(format!(
                "unknown operator '{operator}' (expected scalar, d00-even or d00-odd)"
            )))
        }
    };
    let mut report = Report::new(
        "indicial",
        json!({ "operator": operator, "weights": weights }),
    );
    let m = indicial_poly(&op).map_err(exact("indicial polynomial"))?;
    let roots = indicial_roots(&m).map_err(numerical("indicial roots"))?;
    report.put("components", json!(names));
    report.put("determinant", json!(m.det().to_string()));
    let rows: Vec<Value> = roots
        .iter()
        .map(|r| {
            json!({
                "value": r.value.to_string(),
                "re": r.value.re(),
                "im": r.value.im(),
                "multiplicity": r.multiplicity,
                "exact_nullvectors": r.exact_nullvectors.iter()
                    .map(|v| v.iter().map(fmt_q).collect::<Vec<_>>())
                    .collect::<Vec<_>>(),
                "nullvectors": r.nullvectors,
            })
        })
        .collect();
    report.put("roots", json!(rows));
    if weights {
        let w = weight_window(&roots);
        report.put("weights", json!(w.weights));
        report.put(
            "weights_exact",
            json!(w
                .exact
                .iter()
                .map(|e| e.as_ref().map(fmt_q))
                .collect::<Vec<_>>()),
        );
        report.convention("indicial weight c = Re(root) - 1");
    }
    let total: usize = roots.iter().map(|r| r.multiplicity).sum();
    let degree = m.det().degree().unwrap_or(0);
    let failure = (total != degree).then(|| {
        CliError::Numerical(format!(
            "root multiplicities sum to {total} but the determinant has degree {degree}"
        ))
    });
    Ok(Outcome::check(report, failure))
}

/// `modes solve`: boundary value solve for one Fourier mode with the fit
/// of its tail.
pub fn modes_solve_cmd(
    k: i64,
    m: &[i64],
    fit: bool,
    with_solution: bool,
    cfg: &RunConfig,
) -> CliResult<Outcome> {
    if m.len() != 2 {
        return Err(CliError::Usage(format!(
            "--m needs two values M1,M2, got {}",
            m.len()
        )));
    }
    cfg.validate()?;
    let m = [m[0], m[1]];
    let c = &cfg.modes;
    let mut report = Report::new(
        "modes solve",
        json!({ "k": k, "m": m, "fit": fit, "n": c.n, "x0": c.x0, "x_max": c.x_max }),
    );
    let r = solve_mode(k, m, c).map_err(numerical("mode solve"))?;
    let regime = match r.regime {
        ModeRegime::B => "b",
        ModeRegime::C => "c",
        ModeRegime::A => "a",
    };
    report.put("regime", json!(regime));
    report.put("expected_rate", json!(r.expected_rate));
    report.put("relative_error", json!(r.relative_error));
    if fit {
        report.put("fit", serde_json::to_value(&r.fit).expect("fit serialises"));
    }
    if with_solution {
        report.put("x", json!(r.solution.x()));
        report.put("u", json!(r.solution.component(0)));
    }
    let tol = match r.fit {
        ModeFit::Expansion(_) => c.expansion_tol,
        ModeFit::Rate(_) => c.rate_tol,
    };
    report.convention(match r.regime {
        ModeRegime::B => {
            "b regime: error is the maximum relative deviation from the span of 1 and 1/x"
        }
        ModeRegime::C => "c regime: rate is the coefficient of 1/x in log|u|",
        ModeRegime::A => {
            "a regime: rate is the coefficient of x^-2 in log|u| for the product model"
        }
    });
    let failure = (r.relative_error.is_nan() || r.relative_error > tol).then(|| {
        CliError::Numerical(format!(
            "relative error {:.3e} exceeds the tolerance {tol:.1e}",
            r.relative_error
        ))
    });
    Ok(Outcome::check(report, failure))
}

/// Family names accepted by `deform --family`.
pub fn parse_family(name: &str, param: &str) -> CliResult<DeformationFamily> {
    let nums: Vec<f64> = param
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Usage(format!("--param '{param}': {e}")))?;
    let want = |n: usize| {
        if nums.len() == n {
            Ok(())
        } else {
            Err(CliError::Usage(format!(
                "family '{name}' takes {n} parameter(s), got {}",
                nums.len()
            )))
        }
    };
    match name {
        "calabi-scaling" => want(1).map(|_| DeformationFamily::CalabiScaling { alpha: nums[0] }),
        "calabi-modulus" => want(2).map(|_| DeformationFamily::CalabiModulus {
            alpha: nums[0],
            beta: nums[1],
        }),
        _ => {
            let w = name
                .strip_prefix("sf-")
                .and_then(SemiflatTwist::from_name)
                .ok_or_else(|| {
                    CliError::Usage(format!(
                        "unknown family '{name}' (expected calabi-scaling, calabi-modulus, sf-theta, sf-y1 or sf-y2)"
                    ))
                })?;
            want(1)?;
            Ok(DeformationFamily::Semiflat(w))
        }
    }
}

/// Tolerance for the constraint residual of evaluated family points.
const CONSTRAINT_TOL: f64 = 1e-9;

/// `deform`: family matrices, polar normal form and derivatives at `t = 0`.
pub fn deform_cmd(family: &str, param: &str, t: f64, report_mm: bool) -> CliResult<Outcome> {
    let fam = parse_family(family, param)?;
    let mut report = Report::new(
        "deform",
        json!({ "family": family, "param": param, "t": t, "report_mm": report_mm }),
    );
    let mut failure = None;
    match fam {
        DeformationFamily::Semiflat(w) => {
            let c: f64 = param.trim().parse().expect("checked by parse_family");
            let (a, b) = w.raw_matrices(c);
            report.put("a_raw", mat3(&a));
            report.put("b_raw", mat3(&b));
            match family_semiflat(w, c) {
                Ok(_) => report.put("pullback_constant", json!(true)),
                Err(e) => {
                    report.put("pullback_constant", json!(false));
                    failure = Some(CliError::Consistency(format!("pullback of the twist: {e}")));
                }
            }
            let s = symmetrize(&a, &b).map_err(numerical("polar normal form"))?;
            report.put("u", mat3(&s.u));
            report.put("a_sym", mat3(&s.a));
            report.put("b_sym", mat3(&s.b));
            report.convention(
                "polar normal form A = U^T A~ with A~ symmetric positive definite, B~ = U B",
            );
        }
        _ => {
            let p = fam.eval(t).map_err(numerical("evaluate family"))?;
            let res =
                (p.a * p.a.transpose() - p.b * p.b.transpose() - Matrix3::identity() * p.lambda)
                    .norm();
            report.put("a", mat3(&p.a));
            report.put("b", mat3(&p.b));
            report.put("lambda", json!(p.lambda));
            report.put("constraint_residual", json!(res));
            if res > CONSTRAINT_TOL {
                failure = Some(CliError::Numerical(format!(
                    "constraint residual {res:.3e} at t = {t} exceeds {CONSTRAINT_TOL:.0e}"
                )));
            }
            if matches!(fam, DeformationFamily::CalabiScaling { .. }) {
                let check = CalabiScalingSymbolic::new()
                    .and_then(|s| s.verify())
                    .map_err(exact("symbolic scaling family"))?;
                report.put(
                    "symbolic",
                    json!({
                        "constraint_identically_zero": check.constraint_identically_zero,
                        "trace_reduces_to_relation": check.trace_reduces_to_relation,
                    }),
                );
                if !(check.constraint_identically_zero && check.trace_reduces_to_relation) {
                    failure = Some(CliError::Consistency(
                        "scaling family violates the constraint symbolically".into(),
                    ));
                }
            }
        }
    }
    let d = second_derivative_report(&fam).map_err(numerical("derivatives at t = 0"))?;
    report.put(
        "derivatives",
        json!({
            "method": format!("{:?}", d.method).to_lowercase(),
            "a_dot": mat3(&d.a_dot),
            "a_ddot": mat3(&d.a_ddot),
            "a_taylor2": mat3(&d.a_taylor2()),
            "b_dot": mat3(&d.b_dot),
            "lambda_dot": d.lambda_dot,
            "lambda_ddot": d.lambda_ddot,
            "richardson_gap": d.richardson_gap,
        }),
    );
    report.convention(
        "a_ddot is the second derivative at t = 0; a_taylor2 = a_ddot/2 is the Taylor coefficient",
    );
    if report_mm {
        let (r1, r2) = (d.mm_residual_printed(), d.mm_residual_factor2());
        report.put(
            "second_order_identity",
            json!({
                "residual_matrix": mat3(&d.mm_printed),
                "residual": r1,
                "residual_matrix_factor2": mat3(&d.mm_factor2),
                "residual_factor2": r2,
            }),
        );
        report.warnings.push(format!(
            "A''+A''^T-B'B'^T-lambda'' I has norm {r1:.3e}; with 2B'B'^T it has norm {r2:.3e}"
        ));
    }
    Ok(Outcome::check(report, failure))
}

/// `cohomology`: the L2 harmonic forms table, moduli dimension and the
/// half-line weighted cohomology cases.
pub fn cohomology_cmd(b: i64) -> CliResult<Outcome> {
    let mut report = Report::new("cohomology", json!({ "b": b }));
    let table = l2_hodge_table(b).map_err(|e| CliError::Usage(e.to_string()))?;
    let moduli = moduli_dim(b).map_err(|e| CliError::Usage(e.to_string()))?;
    report.put(
        "l2_harmonic",
        json!(table
            .iter()
            .map(|e| json!({ "k": e.k, "space": e.label, "dim": e.dim }))
            .collect::<Vec<_>>()),
    );
    report.put("moduli", serde_json::to_value(moduli).expect("serialises"));
    let half_line: Vec<Value> = [-1.0, -0.5, 0.0, 0.5]
        .iter()
        .flat_map(|&g| {
            [(0, IntervalDegree::Zero), (1, IntervalDegree::One)].map(
                |(d, deg)| json!({ "degree": d, "gamma": g, "dim": wh_interval(deg, g).dim() }),
            )
        })
        .collect();
    report.put("half_line", json!(half_line));
    report.put(
        "perversity_index_weight0",
        json!((0..=4).map(|k| weight_shift(0.0, k)).collect::<Vec<_>>()),
    );
    report.convention(&format!(
        "bracket in the perversity index [a + 2 - k/2] read as {BRACKET_CONVENTION}"
    ));
    let symmetric = (0..=4).all(|k| table[k].dim == table[4 - k].dim);
    let split =
        moduli.total == moduli.from_l2 + moduli.from_infinity && moduli.total == 3 * (10 - b);
    let failure = if !symmetric {
        Some(CliError::Consistency(
            "dimension table is not symmetric under k -> 4 - k".into(),
        ))
    } else if !split {
        Some(CliError::Consistency(
            "moduli dimension does not split as 3(9 - b) + 3".into(),
        ))
    } else {
        None
    };
    Ok(Outcome::check(report, failure))
}

/// `lift-check`: lift the structure fields of the `a` regime through the
/// three blow-ups and verify `D(old)/D(new) . lift = field` exactly, both
/// as an identity of rational functions and at seeded rational points.
pub fn lift_check_cmd(seed: u64) -> CliResult<Outcome> {
    let mut report = Report::new(
        "lift-check",
        json!({ "seed": seed, "points_per_stage": LIFT_POINTS }),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fields = structure_fields(Structure::A, false);
    let mut names: Vec<String> = (0..fields.len()).map(|i| format!("V{}", i + 1)).collect();
    fields.push(structure_fields(Structure::A, true)[2].clone());
    names.push("V3_twisted".into());
    let mut rows = Vec::new();
    let mut broken = Vec::new();
    for (stage_name, stage) in [
        ("b", BlowupStage::B),
        ("c", BlowupStage::C),
        ("a", BlowupStage::A),
    ] {
        let chart = lift_chart(stage);
        let subs = stage_substitution(stage);
        let old: Vec<RatFun> = [Var::X, Var::Y1, Var::Y2, Var::Theta]
            .iter()
            .map(|v| {
                subs.iter()
                    .find(|(w, _)| w == v)
                    .map(|(_, f)| f.clone())
                    .unwrap_or_else(|| RatFun::var(*v))
            })
            .collect();
        let jac: Vec<Vec<RatFun>> = old
            .iter()
            .map(|f| {
                chart
                    .coords
                    .iter()
                    .map(|v| f.derive(*v))
                    .collect::<Result<_, _>>()
            })
            .collect::<Result<_, _>>()
            .map_err(exact("Jacobian of the blow-down map"))?;
        let points: Vec<Point> = (0..LIFT_POINTS)
            .map(|_| sample_lift_point(&mut rng, &chart.coords))
            .collect();
        for (name, field) in names.iter().zip(&fields) {
            let lift = blowup_lift(field, stage).map_err(exact("lift"))?;
            let mut holds = true;
            let mut point_mismatches = 0;
            for i in 0..4 {
                let mut push = RatFun::zero();
                for k in 0..4 {
                    push = jac[i][k]
                        .mul(&lift.coeffs[k])
                        .and_then(|t| push.add(&t))
                        .map_err(exact("pushforward"))?;
                }
                let target = field.coeffs[i]
                    .substitute(&subs)
                    .map_err(exact("substitution"))?;
                holds &= push == target;
                for p in &points {
                    let lhs = push.eval(p).map_err(numerical("evaluate pushforward"))?;
                    let rhs = target.eval(p).map_err(numerical("evaluate field"))?;
                    point_mismatches += usize::from(lhs != rhs);
                }
            }
            holds &= point_mismatches == 0;
            if !holds {
                broken.push(format!("{name} at stage {stage_name}"));
            }
            rows.push(json!({
                "stage": stage_name,
                "field": name,
                "chart": chart.coords.iter().map(|v| v.name()).collect::<Vec<_>>(),
                "lift": lift.coeffs.iter().map(|f| f.to_string()).collect::<Vec<_>>(),
                "pushforward_matches": holds,
                "point_mismatches": point_mismatches,
            }));
        }
    }
    report.put("lifts", json!(rows));
    let failure = (!broken.is_empty()).then(|| {
        CliError::Consistency(format!(
            "lift does not push forward to the field: {}",
            broken.join(", ")
        ))
    });
    Ok(Outcome::check(report, failure))
}

/// Rational sample points per blow-up stage in `lift-check`.
const LIFT_POINTS: usize = 10;

/// A rational point of a projective chart with its right-factor
/// parameters. Face coordinates and `x_tilde` are positive so that no
/// denominator of the blow-down map vanishes.
fn sample_lift_point(rng: &mut ChaCha8Rng, coords: &[Var; 4]) -> Point {
    let mut frac = |lo: i64, hi: i64| {
        BigRational::new(rng.gen_range(lo..=hi).into(), rng.gen_range(1..=9).into())
    };
    let mut p = Point::new().with(coords[0], frac(1, 9));
    for &v in &coords[1..] {
        p.set(v, frac(-9, 9));
    }
    p.with(Var::XTilde, frac(1, 9))
        .with(Var::Y1Tilde, frac(-9, 9))
        .with(Var::Y2Tilde, frac(-9, 9))
}

/// `triple-q`: the trace-free Gram matrix of the standard triple and the
/// gauge residual on three test perturbations.
pub fn triple_q_cmd(eps: &str) -> CliResult<Outcome> {
    let e = RatFun::parse(eps).map_err(|e| CliError::Usage(format!("--eps '{eps}': {e}")))?;
    if e.as_constant().is_none() {
        return Err(CliError::Usage(format!(
            "--eps must be a rational constant, got '{eps}'"
        )));
    }
    let mut report = Report::new("triple-q", json!({ "eps": eps }));
    let omega = Triple::standard();
    let vol = omega
        .volume()
        .map_err(exact("volume of the standard triple"))?;
    let q = q_map(&omega, &vol).map_err(exact("Q of the standard triple"))?;
    let closed = omega.is_closed().map_err(exact("closedness"))?;
    let q_zero = q.iter().flatten().all(RatFun::is_zero);
    report.put("q_standard", rf_matrix(&q));
    report.put("q_standard_zero", json!(q_zero));
    report.put("standard_closed", json!(closed));
    let g = alh_lab::geometry::metric_gh_inverted();
    let chart = omega.chart();
    let scaled = omega.scale(&e).map_err(exact("scale triple"))?;
    let two_eps = e.scale(&BigRational::from_integer(2.into()));
    let mut demos = Vec::new();
    let mut mismatched = Vec::new();
    for (label, eta, expected_diag) in [
        ("zero", Triple::zero(chart), RatFun::zero()),
        ("anti_self_dual", Triple::anti_self_dual(), RatFun::zero()),
        ("eps_standard", scaled, two_eps),
    ] {
        let j = gauge_residual(&eta, &omega, &g).map_err(exact("gauge residual"))?;
        let matches = (0..3).all(|i| {
            (0..3).all(|k| {
                if i == k {
                    j[i][k] == expected_diag
                } else {
                    j[i][k].is_zero()
                }
            })
        });
        if !matches {
            mismatched.push(label);
        }
        demos.push(json!({
            "eta": label,
            "residual": rf_matrix(&j),
            "expected_diagonal": expected_diag.to_string(),
            "matches": matches,
        }));
    }
    report.put("gauge_residual", json!(demos));
    report.convention(
        "Q(w) is the trace-free part of w_i ^ w_j / vol(w); residual J(eta) = 2 eta^+ ^ w + Q(eta)",
    );
    let failure = if !q_zero || !closed {
        Some(CliError::Consistency(
            "standard triple is not closed with Q = 0".into(),
        ))
    } else if !mismatched.is_empty() {
        Some(CliError::Consistency(format!(
            "gauge residual differs from its expected value for {}",
            mismatched.join(", ")
        )))
    } else {
        None
    };
    Ok(Outcome::check(report, failure))
}

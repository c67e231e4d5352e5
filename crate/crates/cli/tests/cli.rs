//! End-to-end runs of the `alh-lab` binary: documented outputs, exit
//! codes, output formats and configuration handling.

use alh_lab::ratfun::RatFun;
use serde_json::Value;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_alh-lab"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn run_json(args: &[&str]) -> Value {
    let out = run(args);
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("valid json")
}

#[test]
fn cohomology_b1_lists_dimension_ten_and_moduli_27() {
    let v = run_json(&["cohomology", "--b", "1"]);
    assert_eq!(v["command"], "cohomology");
    let table = v["results"]["l2_harmonic"].as_array().unwrap();
    assert_eq!(table.len(), 5);
    assert_eq!(table[2]["k"], 2);
    assert_eq!(table[2]["dim"], 10);
    for k in [0, 1, 3, 4] {
        assert_eq!(table[k]["dim"], 0);
    }
    assert_eq!(v["results"]["moduli"]["total"], 27);
    assert_eq!(v["results"]["moduli"]["from_l2"], 24);
    let conv = v["provenance"]["conventions"].as_array().unwrap();
    assert!(conv.iter().any(|c| c.as_str().unwrap().contains("floor")));
}

#[test]
fn scalar_indicial_roots_and_weights() {
    let v = run_json(&["indicial", "--operator", "scalar", "--weights"]);
    let roots: Vec<&str> = v["results"]["roots"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["value"].as_str().unwrap())
        .collect();
    assert_eq!(roots, ["-1", "0"]);
    assert_eq!(v["results"]["weights"], serde_json::json!([-2.0, -1.0]));
}

#[test]
fn d00_roots_and_exact_strings_reparse() {
    let v = run_json(&["indicial", "--operator", "d00-even"]);
    let det = v["results"]["determinant"].as_str().unwrap();
    assert!(det.starts_with("g^8"), "{det}");
    let mut seen = Vec::new();
    for r in v["results"]["roots"].as_array().unwrap() {
        let exact = RatFun::parse(r["value"].as_str().unwrap()).unwrap();
        let re = r["re"].as_f64().unwrap();
        assert_eq!(exact.to_f64_constant().unwrap(), re);
        seen.push(re);
    }
    assert_eq!(seen, [0.0, 2.0]);
}

#[test]
fn gh_is_ricci_flat_identically() {
    let v = run_json(&["curvature", "--metric", "gh", "--exact"]);
    assert_eq!(v["results"]["ricci"], "0 (identically)");
    assert_eq!(v["results"]["ricci_flat"], true);
    let v = run_json(&["curvature", "--metric", "a", "--at", "0.5,0,0,0"]);
    assert_eq!(v["results"]["ricci_at"][0][0], 8.0);
    assert_eq!(v["results"]["ricci_flat"], false);
}

#[test]
fn modes_solve_reports_rate_and_fit() {
    let v = run_json(&[
        "modes", "solve", "--k", "0", "--m", "1,0", "--grid", "2000", "--fit",
    ]);
    assert_eq!(v["results"]["regime"], "c");
    let rate = v["results"]["fit"]["Rate"]["rate"].as_f64().unwrap();
    assert!((rate + 1.0).abs() < 0.05, "{rate}");
    assert!(v["results"]["relative_error"].as_f64().unwrap() < 0.05);
}

#[test]
fn numerical_failure_exits_2_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# impossible tolerance\nrate_tol = 1e-12\n").unwrap();
    let out = run(&[
        "--config",
        cfg.to_str().unwrap(),
        "modes",
        "solve",
        "--k",
        "1",
        "--m",
        "0,0",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let warnings = v["warnings"].as_array().unwrap();
    assert!(warnings
        .iter()
        .any(|w| w.as_str().unwrap().contains("exceeds the tolerance")));
}

#[test]
fn usage_errors_exit_1() {
    for args in [
        vec!["bogus"],
        vec!["cohomology", "--b", "12"],
        vec!["curvature", "--metric", "nope"],
        vec!["curvature", "--metric", "gh", "--at", "1,2"],
        vec!["indicial", "--operator", "vector"],
        vec!["deform", "--family", "calabi-modulus", "--param", "1"],
        vec!["modes", "solve", "--k", "0", "--m", "1"],
        vec!["triple-q", "--eps", "x"],
    ] {
        assert_eq!(run(&args).status.code(), Some(1), "{args:?}");
    }
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "no equals sign\n").unwrap();
    assert_eq!(
        run(&["--config", cfg.to_str().unwrap(), "lift-check"])
            .status
            .code(),
        Some(1)
    );
    let out = bin()
        .env("ALH_LAB_THREADS", "zero")
        .args(["lift-check"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn csv_output_has_header_and_flattened_keys() {
    let out = run(&["cohomology", "--b", "3", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("key,value"));
    assert!(text.contains("results.l2_harmonic.2.dim,8\n"));
    assert!(text.contains("results.moduli.total,21\n"));
}

#[test]
fn output_file_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("lifts.json");
    let out = bin()
        .env("ALH_LAB_THREADS", "2")
        .args(["lift-check", "--output", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let first = std::fs::read_to_string(&path).unwrap();
    let v: Value = serde_json::from_str(&first).unwrap();
    let lifts = v["results"]["lifts"].as_array().unwrap();
    assert_eq!(lifts.len(), 15);
    assert!(lifts.iter().all(|l| l["pushforward_matches"] == true));
    assert_eq!(
        String::from_utf8(run(&["lift-check"]).stdout).unwrap(),
        first
    );
    // No temporary file is left behind.
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn deform_reports_symbolic_check_and_both_normalisations() {
    let v = run_json(&[
        "deform",
        "--family",
        "calabi-scaling",
        "--param",
        "1",
        "--report-mm",
    ]);
    assert_eq!(
        v["results"]["symbolic"]["constraint_identically_zero"],
        true
    );
    assert_eq!(v["results"]["derivatives"]["lambda_ddot"], -4.0);
    assert!(
        v["results"]["second_order_identity"]["residual_factor2"]
            .as_f64()
            .unwrap()
            < 1e-9
    );
    let v = run_json(&["deform", "--family", "sf-theta", "--param", "0.5"]);
    assert_eq!(v["results"]["pullback_constant"], true);
    let b = &v["results"]["b_sym"];
    let r = (1.25f64).sqrt();
    assert!((b[1][2].as_f64().unwrap() - 0.5 / r).abs() < 1e-12);
}

#[test]
fn triple_q_is_zero_and_gauge_examples_match() {
    let v = run_json(&["triple-q", "--eps", "1/10"]);
    assert_eq!(v["results"]["q_standard_zero"], true);
    let demos = v["results"]["gauge_residual"].as_array().unwrap();
    assert!(demos.iter().all(|d| d["matches"] == true));
    assert_eq!(demos[2]["residual"][0][0], "1/5");
}

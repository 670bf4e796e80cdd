use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn wvalab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wvalab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn run_ok(command: &str, config: &Path, out: &Path, extra: &[&str]) -> Value {
    let mut args = vec![command, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = wvalab(&args);
    assert!(
        o.status.success(),
        "exit {:?}: {}",
        o.status.code(),
        String::from_utf8_lossy(&o.stderr)
    );
    serde_json::from_slice(&o.stdout).expect("manifest on stdout")
}

/// Columns of a CSV file by header name.
fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<f64>], name: &str) -> Vec<f64> {
    let i = header.iter().position(|h| h == name).unwrap();
    rows.iter().map(|r| r[i]).collect()
}

#[test]
fn shift_curves_hit_both_limits() {
    let dir = TempDir::new().unwrap();
    let theta = PI / 4.0;
    let cfg = write_config(
        &dir,
        "shift.json",
        &format!(r#"{{"shift": {{"gammas": [1e-4, 10.0], "thetas": [{theta}, 0.3, 1.2]}}}}"#),
    );
    let out = dir.path().join("out");
    run_ok("shift", &cfg, &out, &[]);
    let (h, rows) = read_csv(&out.join("transition.csv"));
    for row in &rows {
        let (gamma, t, shift) = (row[0], row[1], row[2]);
        if gamma > 1.0 {
            assert!((shift + (2.0 * t).sin()).abs() < 1e-9, "strong limit at θ={t}: {shift}");
        } else if (t - theta).abs() < 1e-12 {
            assert!((shift + 1.0).abs() < 1e-6, "{shift}");
        }
    }
    assert_eq!(h, vec!["gamma", "theta", "shift"]);
}

#[test]
fn budget_rows_close_and_plateau_is_high() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "budget.json", r#"{"budget": {"g_over_2sigma": 0.1, "theta_points": 30}}"#);
    let out = dir.path().join("out");
    run_ok("budget", &cfg, &out, &[]);
    let (h, rows) = read_csv(&out.join("budget.csv"));
    for s in column(&h, &rows, "sum_ratio") {
        assert!((s - 1.0).abs() < 1e-6);
    }
    let q = column(&h, &rows, "q_wva_ratio");
    assert!(q[0] > 0.999, "{}", q[0]);
}

#[test]
fn white_noise_columns_agree() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "noise.json",
        r#"{"noise": {"a": 1.0, "c": 1.0, "dt": 1.0, "tau_c": 1e-3, "n": 300, "p_f": 0.01, "tau_sweep": [1e-3]}}"#,
    );
    let out = dir.path().join("out");
    run_ok("noise", &cfg, &out, &[]);
    let (_, rows) = read_csv(&out.join("information.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][1], 1.0);
    for v in &rows[0][2..] {
        assert!((v - 150.0).abs() < 1e-6, "{v}");
    }
}

#[test]
fn phase_space_sweep_reports_quadratic_slope() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "ps.json",
        r#"{"scheme": {"phase_space": {"g": 1e-7, "epsilon": 0.1,
            "meter": {"coherent": {"mean_photons": 100.0}}, "sweep": [100.0, 1000.0, 10000.0]}}}"#,
    );
    let out = dir.path().join("out");
    let manifest = run_ok("scheme", &cfg, &out, &["--format", "json"]);
    let report: Value = serde_json::from_str(&std::fs::read_to_string(out.join("scheme.json")).unwrap()).unwrap();
    let slope = report["report"]["details"]["heisenberg_slope"].as_f64().unwrap();
    assert!((slope - 2.0).abs() < 0.05, "{slope}");
    assert!(out.join("heisenberg_sweep.json").exists());
    assert!(!out.join("heisenberg_sweep.csv").exists());
    assert_eq!(manifest["seed"], 0);
}

#[test]
fn estimate_is_reproducible_and_carries_seed() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "est.json",
        r#"{"scheme": {"conventional": {"g": 0.01, "sigma": 1.0}},
            "experiment": {"nu": 200, "trials": 20, "seed": 1, "dump_samples": true}}"#,
    );
    let a = run_ok("estimate", &cfg, &dir.path().join("a"), &["--seed", "42"]);
    let b = run_ok("estimate", &cfg, &dir.path().join("b"), &["--seed", "42"]);
    assert_eq!(a["seed"], 42);
    assert_eq!(a["files"], b["files"]);
    assert_eq!(a["config_sha256"], b["config_sha256"]);
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("a/estimate.json")).unwrap()).unwrap();
    assert_eq!(report["seed"], 42);
    assert_eq!(report["report"]["result"]["seed"], 42);
    assert!(dir.path().join("a/samples.csv").exists());

    let c = run_ok("estimate", &cfg, &dir.path().join("c"), &["--seed", "43"]);
    assert_ne!(a["files"], c["files"]);
}

#[test]
fn config_echo_reparses_to_the_same_scenario() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "est.json",
        r#"{"scheme": {"standard": {"g": 0.001, "sigma": 1.0, "weak": "imaginary", "angle": 0.2}},
            "noise": {"a": 0.1, "c": 0.5, "dt": 1.0, "tau_c": 5.0},
            "experiment": {"nu": 50, "trials": 5, "seed": 3, "estimator": "mle_correlated"}}"#,
    );
    let first = run_ok("estimate", &cfg, &dir.path().join("a"), &["--seed", "11"]);
    let echo = dir.path().join("a/config.json");
    let second = run_ok("estimate", &echo, &dir.path().join("b"), &[]);
    assert_eq!(first["config_sha256"], second["config_sha256"]);
    assert_eq!(first["files"], second["files"]);
}

#[test]
fn unknown_keys_fail_with_line_numbers() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "bad.json", "{\n  \"shift\": {\n    \"gammas\": [1.0],\n    \"thetaz\": [0.1]\n  }\n}\n");
    let o = wvalab(&["shift", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "parse");
    assert_eq!(err["error"]["line"], 4);
}

#[test]
fn missing_block_is_a_structured_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "empty.json", "{}");
    let o = wvalab(&["scheme", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "missing_block");
}

#[test]
fn invalid_parameters_surface_as_computation_errors() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "neg.json", r#"{"scheme": {"conventional": {"g": 0.1, "sigma": -1.0}}}"#);
    let o = wvalab(&["scheme", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "computation");
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn write_config(dir: &TempDir, name: &str, cfg: &Value) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    path
}

fn qfeedback(cmd: &str, config: &Path, extra: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qfeedback"))
        .arg(cmd)
        .arg("--config")
        .arg(config)
        .args(extra)
        .output()
        .unwrap()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn stderr_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().rev().find(|l| l.starts_with('{')).expect("json error on stderr");
    serde_json::from_str(line).unwrap()
}

fn simulate_config() -> Value {
    json!({
        "schema_version": 1,
        "units": "nondimensional",
        "params": { "k": 0.5, "eta": 0.5 },
        "controller": { "mode": "lqg", "q": 0.5 },
        "init": { "kind": "thermal", "nbar": 2.0, "mean_x": 1.0 },
        "horizon": 0.5,
        "dt": 1e-4,
        "base_seed": 3
    })
}

#[test]
fn design_reports_inverse_weight_gain() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({
        "schema_version": 1,
        "units": "nondimensional",
        "params": { "k": 0.5, "eta": 0.25 },
        "controller": { "mode": "lqg", "q": 0.1 }
    });
    let out = qfeedback("design", &write_config(&dir, "d.json", &cfg), &[]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    let rec = &v["records"][0];
    assert_eq!(v["schema_version"], 1);
    let k = &rec["k_gain"];
    assert!((k[0][0].as_f64().unwrap() - 10.0).abs() < 1e-9);
    assert!(k[0][1].as_f64().unwrap().abs() < 1e-9);
    assert!((rec["steady_state"]["purity"].as_f64().unwrap() - 0.5).abs() < 1e-9);
}

#[test]
fn simulate_writes_reproducible_csv() {
    let dir = TempDir::new().unwrap();
    let path = write_config(&dir, "s.json", &simulate_config());
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for target in [&a, &b] {
        let out = qfeedback("simulate", &path, &["--out", target.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let text = std::fs::read(&a).unwrap();
    assert_eq!(text, std::fs::read(&b).unwrap());
    let text = String::from_utf8(text).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# schema_version: 1"));
    assert_eq!(
        lines.next(),
        Some("t,mean_x,mean_p,v_x,v_p,c,dq,u_x,u_p,j_state,j_control,j_floor")
    );
    assert_eq!(lines.count(), 5000);

    let c = dir.path().join("c.csv");
    qfeedback("simulate", &path, &["--out", c.to_str().unwrap(), "--seed", "4"]);
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&c).unwrap());
}

#[test]
fn unmeasured_ground_state_keeps_its_variance() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({
        "schema_version": 1,
        "units": "nondimensional",
        "params": { "k": 0.0, "eta": 1.0 },
        "init": { "kind": "ground", "mean_x": 1.0 },
        "horizon": 1.0,
        "dt": 1e-3
    });
    let out = qfeedback("simulate", &write_config(&dir, "k0.json", &cfg), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    for line in text.lines().skip(2) {
        let cols: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        assert!((cols[3] - 0.5).abs() < 1e-12, "{line}");
        assert!((cols[1] - cols[0].cos()).abs() < 1e-3, "{line}");
    }
}

#[test]
fn invalid_efficiency_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let mut cfg = simulate_config();
    cfg["params"]["eta"] = json!(1.5);
    let out = qfeedback("simulate", &write_config(&dir, "bad.json", &cfg), &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_json(&out);
    assert_eq!(err["error"]["kind"], "config");
    assert_eq!(err["error"]["field"], "eta");
}

#[test]
fn unknown_fields_are_rejected() {
    let dir = TempDir::new().unwrap();
    let mut cfg = simulate_config();
    cfg["horizn"] = json!(1.0);
    let out = qfeedback("simulate", &write_config(&dir, "typo.json", &cfg), &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn truncation_leakage_is_a_numerical_error() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({
        "schema_version": 1,
        "units": "nondimensional",
        "params": { "k": 0.1, "eta": 1.0 },
        "init": { "kind": "ground", "mean_x": 3.0 },
        "horizon": 0.1,
        "dt": 1e-4,
        "verify": { "dim": 6, "paths": 1 }
    });
    let out = qfeedback("verify", &write_config(&dir, "leak.json", &cfg), &[]);
    assert_eq!(out.status.code(), Some(3));
    let err = stderr_json(&out);
    assert_eq!(err["error"]["kind"], "numerical");
    assert_eq!(err["error"]["details"]["dim"], 6);
}

#[test]
fn failed_comparison_exits_with_report() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({
        "schema_version": 1,
        "units": "nondimensional",
        "params": { "k": 0.1, "eta": 1.0 },
        "init": { "kind": "ground" },
        "horizon": 0.2,
        "dt": 1e-3,
        "verify": { "dim": 20, "paths": 1, "tolerance": 1e-14 }
    });
    let report = dir.path().join("report.json");
    let out = qfeedback("verify", &write_config(&dir, "v.json", &cfg), &["--out", report.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    let v: Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    assert_eq!(v["report"]["within_tolerance"], false);
    assert_eq!(stderr_json(&out)["error"]["kind"], "verification");
}

#[test]
fn sweep_gives_one_record_per_point() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({
        "schema_version": 1,
        "units": "nondimensional",
        "params": { "k": 0.5, "eta": 1.0 },
        "controller": { "mode": "lqg", "q": 1.0 },
        "sweep": { "parameter": "q", "values": [0.1, 0.3, 1.0, 3.0] }
    });
    let out = qfeedback("design", &write_config(&dir, "sweep.json", &cfg), &[]);
    assert_eq!(out.status.code(), Some(0));
    let records = stdout_json(&out)["records"].as_array().unwrap().clone();
    assert_eq!(records.len(), 4);
    for (rec, q) in records.iter().zip([0.1, 0.3, 1.0, 3.0]) {
        assert_eq!(rec["q"].as_f64().unwrap(), q);
        assert!((rec["k_gain"][1][1].as_f64().unwrap() - 1.0 / q).abs() < 1e-9);
    }
}

#[test]
fn single_trajectory_ensemble_has_null_error() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({
        "schema_version": 1,
        "units": "nondimensional",
        "params": { "k": 1.0, "eta": 1.0 },
        "controller": { "mode": "damping", "gamma_x": 2.0, "gamma_p": 2.0, "cost_q": 0.5 },
        "init": { "kind": "steady" },
        "horizon": 2.0,
        "dt": 4e-4,
        "n_traj": 1,
        "tail_start": 1.0
    });
    let out = qfeedback("ensemble", &write_config(&dir, "e.json", &cfg), &["--jobs", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rec = &stdout_json(&out)["records"][0];
    assert_eq!(rec["n_traj"], 1);
    assert!(rec["empirical"]["standard_error"].is_null());
    assert!(rec["analytic"]["excess_tilde"]["ve_x"].as_f64().unwrap() > 0.0);
}

#[test]
fn oversized_step_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let mut cfg = simulate_config();
    cfg["dt"] = json!(0.5);
    let out = qfeedback("simulate", &write_config(&dir, "dt.json", &cfg), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"]["field"], "dt");
}

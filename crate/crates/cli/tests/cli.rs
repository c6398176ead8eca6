use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn specdec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_specdec")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn malformed_program_fails_with_schema_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, r#"{"format": 1, "distance": 7}"#).unwrap();
    let o = specdec(&["run", "--program", path.to_str().unwrap()]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("schema violation"), "{err}");
}

#[test]
fn run_writes_result_and_traces() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("msd");
    let o = specdec(&[
        "run", "--builtin", "msd_15to1", "--d", "7", "--strategy", "aligned", "--spec", "on", "--latency", "fixed:2d",
        "--out", out.to_str().unwrap(),
    ]);
    let summary: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(summary["distance"], 7);
    assert_eq!(summary["latency"], "fixed:14");
    assert!(summary["runtime_d"].as_f64().unwrap() > 5.0);
    let full: Value = serde_json::from_str(&fs::read_to_string(out.join("result.json")).unwrap()).unwrap();
    assert_eq!(full["runtime_rounds"], summary["runtime_rounds"]);
    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    assert!(trace.starts_with("round,patch,label\n"));
    assert!(trace.contains("t_teleport"));
    assert!(fs::read_to_string(out.join("trace.svg")).unwrap().starts_with("<svg"));
}

#[test]
fn runs_are_deterministic_per_seed() {
    let args = ["run", "--builtin", "repeated_t", "--d", "5", "--count", "20", "--spec", "on", "--seed", "9"];
    assert_eq!(stdout(&specdec(&args)), stdout(&specdec(&args)));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"strategy": "sliding", "latency": "fixed:3", "accuracy-adjacent": 0.5}"#).unwrap();
    let o = specdec(&[
        "run", "--builtin", "repeated_t", "--d", "5", "--count", "4", "--config", cfg.to_str().unwrap(), "--strategy",
        "parallel",
    ]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["strategy"], "parallel");
    assert_eq!(v["latency"], "fixed:3");
}

#[test]
fn predictor_eval_without_noise_is_exact() {
    let o = specdec(&["predictor-eval", "--d", "5,7", "--shots", "50", "--p", "0"]);
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 6);
    for r in rows {
        assert_eq!(r[4], "1.000000");
        assert_eq!(r[5], "0.000000");
        assert_eq!(r[6], "0.000000");
    }
}

#[test]
fn recovery_eval_with_perfect_accuracy_wastes_nothing() {
    let o = specdec(&[
        "recovery-eval", "--windows", "20", "--cycles", "1,4", "--shots", "10", "--accuracy", "1", "--accuracy-adjacent",
        "1",
    ]);
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 6);
    for r in rows {
        assert_eq!(r[4].parse::<f64>().unwrap(), 0.0, "{r:?}");
    }
}

#[test]
fn processor_limit_without_speculation_is_peak() {
    let o = specdec(&["processors", "--builtin", "repeated_t", "--d", "5", "--count", "20", "--latency", "linear:2"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["epsilon"], 0.0);
    assert_eq!(v["limit"], v["p_max"]);
    assert!(v["peak_limited"].as_u64().unwrap() <= v["limit"].as_u64().unwrap());
}

#[test]
fn sweep_zero_accuracy_matches_speculation_off() {
    let o = specdec(&[
        "sweep-latency", "--d", "5", "--count", "15", "--strategies", "parallel,sliding", "--accuracies", "off,0",
        "--rs", "0.4,1", "--seeds", "2",
    ]);
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 8);
    for pair in rows.chunks(4) {
        // Rows are ordered strategy, accuracy, r.
        assert_eq!(pair[0][5], pair[2][5]);
        assert_eq!(pair[1][5], pair[3][5]);
    }
}

#[test]
fn unknown_builtin_is_rejected() {
    let o = specdec(&["run", "--builtin", "shor"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("shor"));
}

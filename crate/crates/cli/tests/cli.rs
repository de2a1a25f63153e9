use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn epiassim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_epiassim")).args(args).output().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn error_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().rev().find(|l| l.starts_with('{')).expect("error json on stderr");
    serde_json::from_str(line).unwrap()
}

fn simulate(dir: &Path, name: &str, days: usize, seed: u64) -> std::path::PathBuf {
    let path = dir.join(name);
    let out = epiassim(&["simulate", "--seed", &seed.to_string(), "--days", &days.to_string(), "--out", p(&path)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path
}

const FAST: [&str; 6] = ["--iters", "20000", "--burn-in", "5000", "--thin", "15"];

fn run(data: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", "--data", p(data), "--population", "1e6", "--out", p(out)];
    args.extend_from_slice(&FAST);
    args.extend_from_slice(extra);
    epiassim(&args)
}

#[test]
fn simulate_requires_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out = epiassim(&["simulate", "--out", p(&dir.path().join("x.csv"))]);
    assert!(!out.status.success());
}

#[test]
fn simulate_writes_truth_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.csv");
    let out = epiassim(&["simulate", "--seed", "9", "--days", "20", "--change", "10:0.4", "--out", p(&path)]);
    assert!(out.status.success());
    let truth: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("s.csv.truth.json")).unwrap()).unwrap();
    assert_eq!(truth["seed"], 9);
    assert_eq!(truth["change_points"][0]["day"], 10);
    assert_eq!(truth["params"]["beta"], 0.8);
    assert_eq!(truth["expected_cases"].as_array().unwrap().len(), 20);
    assert_eq!(fs::read_to_string(&path).unwrap().lines().count(), 21);
}

#[test]
fn toy_run_artifacts_and_scoring() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), "toy.csv", 35, 1);
    let out_dir = dir.path().join("out");
    let out = run(&data, &out_dir, &["--max-windows", "1", "--seed", "42"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed: 42"));

    let mut names: Vec<String> = fs::read_dir(&out_dir).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert_eq!(
        names,
        ["forecast_0.csv", "forecast_0_cases.svg", "forecast_0_deaths.svg", "posterior_0.csv", "summary.json"]
    );

    let summary: Value = serde_json::from_str(&fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    let order: Vec<&str> = summary["windows"][0]["parameters"].as_array().unwrap().iter().map(|v| v["name"].as_str().unwrap()).collect();
    assert_eq!(order, ["E0", "O0", "U0", "R0", "D0", "beta", "omega", "g"]);
    assert_eq!(summary["completed"], true);
    assert_eq!(summary["windows"][0]["forecast_start"], "2020-04-05");

    let posterior = fs::read_to_string(out_dir.join("posterior_0.csv")).unwrap();
    assert_eq!(posterior.lines().next().unwrap(), "E0,O0,U0,R0,D0,beta,omega,g");
    assert_eq!(posterior.lines().count(), 1001);

    let full = simulate(dir.path(), "full.csv", 60, 1);
    let score = epiassim(&["score", "--forecasts", p(&out_dir), "--data", p(&full)]);
    assert!(score.status.success());
    let report: Value = serde_json::from_slice(&score.stdout).unwrap();
    assert_eq!(report["aggregate"]["n"], 28);

    let short = epiassim(&["score", "--forecasts", p(&out_dir), "--data", p(&data)]);
    assert!(!short.status.success());
    assert_eq!(error_json(&short)["error"]["kind"], "scoring");
}

#[test]
fn default_seed_is_printed() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), "toy.csv", 28, 2);
    let out = run(&data, &dir.path().join("out"), &[]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed: 1"));
}

#[test]
fn missing_data_file_fails_with_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&dir.path().join("nope.csv"), &dir.path().join("out"), &[]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_json(&out)["error"]["kind"], "invalid_config");
}

#[test]
fn date_gap_fails_with_json() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("gap.csv");
    let mut text = String::from("date,cases,deaths\n");
    for d in (1..=31).filter(|d| *d != 7) {
        text.push_str(&format!("2020-01-{d:02},1,0\n"));
    }
    fs::write(&data, text).unwrap();
    let out = run(&data, &dir.path().join("out"), &[]);
    assert!(!out.status.success());
    let err = error_json(&out);
    assert_eq!(err["error"]["kind"], "date_gap");
    assert_eq!(err["error"]["missing_dates"][0], "2020-01-07");
}

#[test]
fn short_series_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), "short.csv", 20, 3);
    let out = run(&data, &dir.path().join("out"), &[]);
    assert!(!out.status.success());
    assert_eq!(error_json(&out)["error"]["kind"], "invalid_config");
}

#[test]
fn window_failure_writes_summary_and_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), "s.csv", 28, 4);
    let out_dir = dir.path().join("out");
    // omega * N cannot hold the initial infected mass, so no start is feasible
    let mut args = vec!["run", "--data", p(&data), "--population", "10", "--out", p(&out_dir)];
    args.extend_from_slice(&FAST);
    let out = epiassim(&args);
    assert_eq!(out.status.code(), Some(1));
    let err = error_json(&out);
    assert_eq!(err["error"]["kind"], "initialization_failed");
    assert_eq!(err["error"]["window"], 0);
    let summary: Value = serde_json::from_str(&fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["completed"], false);
    assert_eq!(summary["windows"].as_array().unwrap().len(), 0);
    assert_eq!(summary["error"], err["error"]);
}

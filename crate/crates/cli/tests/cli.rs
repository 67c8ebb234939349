use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kerr-purify")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON document")
}

fn f(v: &Value) -> f64 {
    v.as_f64().expect("number")
}

fn keys(v: &Value) -> Vec<String> {
    v.as_object().unwrap().keys().cloned().collect()
}

#[test]
fn verify_branches_passes_by_default() {
    let out = cli(&["verify-branches"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("15/15 checks passed"), "{text}");
    assert!(!text.contains("FAIL"));
}

#[test]
fn verify_branches_single_and_list() {
    let out = cli(&["verify-branches", "--only", "qnd1-double"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("1/1 checks passed"));
    let list = cli(&["verify-branches", "--list"]);
    assert_eq!(String::from_utf8_lossy(&list.stdout).lines().count(), 15);
    assert_eq!(cli(&["verify-branches", "--only", "nope"]).status.code(), Some(2));
}

#[test]
fn equal_phases_are_a_config_error() {
    let out = cli(&["verify-branches", "--theta", "pi/4", "--theta-prime", "pi/4"]);
    assert_eq!(out.status.code(), Some(2));
    let out = cli(&["stage1", "--p1", "0.1", "--p2", "0.01", "--f0", "0.8", "--theta", "pi/2", "--theta-prime", "5pi/2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn stage1_exact_matches_closed_form() {
    let doc = json(&cli(&["stage1", "--p1", "0.1", "--p2", "0.01", "--f0", "0.8", "--mode", "exact"]));
    let expected = (0.1 + 0.005 * 0.64) / (0.1 + 0.005 * 0.68);
    assert!((f(&doc["fidelity"]) - expected).abs() < 1e-12);
    assert!((f(&doc["fidelity"]) - f(&doc["closed_form_fidelity"])).abs() < 1e-12);
    for k in ["params", "fidelity", "closed_form_fidelity", "yield", "counts", "mode", "seed", "config"] {
        assert!(doc.get(k).is_some(), "missing key {k}");
    }
    assert_eq!(doc["config"]["theta"], "pi/4");
    assert_eq!(doc["config"]["theta_prime"], "3pi/4");
    assert_eq!(doc["config"]["seed"], 0);
}

#[test]
fn probabilities_have_at_least_fifteen_significant_digits() {
    let out = cli(&["stage1", "--p1", "0.1", "--p2", "0.01", "--f0", "0.8"]);
    let text = String::from_utf8_lossy(&out.stdout);
    let line = text.lines().find(|l| l.trim_start().starts_with("\"fidelity\"")).unwrap();
    let number = line.split(':').nth(1).unwrap().trim().trim_end_matches(',');
    let mantissa = number.split('e').next().unwrap();
    assert!(mantissa.chars().filter(|c| c.is_ascii_digit()).count() >= 15, "{number}");
}

#[test]
fn monte_carlo_output_is_byte_identical() {
    let args = ["stage1", "--p1", "0.1", "--p2", "0.01", "--f0", "0.8", "--mode", "mc", "--trials", "100000", "--seed", "7"];
    let (a, b) = (cli(&args), cli(&args));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let doc = json(&a);
    assert_eq!(doc["counts"]["kept_correct"].as_u64().unwrap()
        + doc["counts"]["kept_erroneous"].as_u64().unwrap()
        + doc["counts"]["discarded"].as_u64().unwrap(), 100_000);
    assert!(doc["fidelity_se"].is_number());
}

#[test]
fn schema_is_stable_across_modes() {
    let exact = json(&cli(&["stage1", "--p1", "0.1", "--p2", "0.01", "--f0", "0.8"]));
    let mc = json(&cli(&["stage1", "--p1", "0.1", "--p2", "0.01", "--f0", "0.8", "--mode", "mc", "--trials", "10"]));
    assert_eq!(keys(&exact), keys(&mc));
    assert_eq!(keys(&exact["config"]), keys(&mc["config"]));
}

#[test]
fn invalid_probabilities_exit_two() {
    assert_eq!(cli(&["stage1", "--p1", "0.1", "--p2", "0.01", "--f0", "1.2"]).status.code(), Some(2));
    assert_eq!(cli(&["stage1", "--p1", "0.1", "--p2", "0.01"]).status.code(), Some(2));
    assert_eq!(cli(&["stage1", "--p1", "abc", "--p2", "0.01", "--f0", "0.8"]).status.code(), Some(2));
    assert_eq!(cli(&["stage2", "--F", "0.5"]).status.code(), Some(2));
    assert_eq!(cli(&["stage2", "--F", "1.1"]).status.code(), Some(2));
    assert_eq!(cli(&["stage2", "--F", "0.8", "--rounds", "0"]).status.code(), Some(2));
    assert_eq!(cli(&["bogus"]).status.code(), Some(2));
}

#[test]
fn stage2_rounds() {
    let doc = json(&cli(&["stage2", "--F", "0.8", "--rounds", "2"]));
    let rounds = doc["rounds"].as_array().unwrap();
    assert_eq!(rounds.len(), 2);
    assert!((f(&rounds[0]["fidelity"]) - 0.64 / 0.68).abs() < 1e-12);
    assert!((f(&rounds[0]["yield"]) - 0.68).abs() < 1e-12);
    let f1: f64 = 0.64 / 0.68;
    let f2 = f1 * f1 / (f1 * f1 + (1.0 - f1) * (1.0 - f1));
    assert!((f(&rounds[1]["fidelity"]) - f2).abs() < 1e-12);
    assert!(f(&doc["fidelity"]) >= 0.996);
}

#[test]
fn baseline_ratio_is_two() {
    let doc = json(&cli(&["stage2", "--F", "0.8", "--baseline"]));
    let b = &doc["rounds"][0]["baseline"];
    assert!((f(&b["yield_ratio"]) - 2.0).abs() < 1e-12);
    assert!((f(&b["yield"]) - 0.34).abs() < 1e-12);
    assert!((f(&b["fidelity"]) - f(&doc["fidelity"])).abs() < 1e-12);
}

#[test]
fn config_file_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.cfg");
    std::fs::write(&path, "# test\np1 = 0.1\np2 = 0.01\nf0 = 0.8\nseed = 5\nmode = mc\ntrials = 50\n").unwrap();
    let p = path.to_str().unwrap();
    let from_file = json(&cli(&["stage1", "--config", p]));
    assert_eq!(from_file["seed"], 5);
    assert_eq!(from_file["mode"], "mc");
    assert_eq!(from_file["trials"], 50);
    let flagged = json(&cli(&["stage1", "--config", p, "--seed", "9", "--mode", "exact"]));
    assert_eq!(flagged["seed"], 9);
    assert_eq!(flagged["mode"], "exact");
    std::fs::write(&path, "colour = red\n").unwrap();
    assert_eq!(cli(&["stage1", "--config", p]).status.code(), Some(2));
}

fn csv_lines(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path).unwrap().lines().map(String::from).collect()
}

#[test]
fn csv_appends_with_one_header() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    let p = path.to_str().unwrap();
    json(&cli(&["stage1", "--p1", "0.1", "--p2", "0.01", "--f0", "0.8", "--csv", p]));
    json(&cli(&["stage2", "--F", "0.8", "--rounds", "2", "--baseline", "--csv", p]));
    let lines = csv_lines(&path);
    assert_eq!(lines.len(), 1 + 1 + 4);
    assert!(lines[0].starts_with("pipeline,"));
    assert!(lines[1].starts_with("stage1,"));
    assert_eq!(lines.iter().filter(|l| l.starts_with("pipeline")).count(), 1);
}

#[test]
fn out_file_receives_json() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let out = cli(&["stage2", "--F", "0.9", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(doc["command"], "stage2");
    assert!(String::from_utf8_lossy(&out.stdout).contains("stage2 [exact]"));
}

#[test]
fn sweep_emits_one_row_per_point() {
    let out = cli(&["sweep", "stage1", "--p1", "0.05,0.1", "--p2", "0.01", "--f0", "0.7,0.8,0.9"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(text.lines().count(), 1 + 6);
    let out = cli(&["sweep", "pbs", "--F", "0.6,0.7"]);
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 3);
    assert_eq!(cli(&["sweep", "stage2", "--F", "0.4"]).status.code(), Some(2));
}

use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn mediate(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_mediate")).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn json_lines(args: &[&str]) -> (i32, Vec<Value>) {
    let mut full = vec!["--format", "json-lines"];
    full.extend_from_slice(args);
    let (code, out, err) = mediate(&full);
    let rows = out
        .lines()
        .map(|l| serde_json::from_str(l).unwrap_or_else(|e| panic!("{}: {}\n{}", e, l, err)))
        .collect();
    (code, rows)
}

#[test]
fn truth_reports_exact_effects() {
    let model = fixture("noisy-chain.model");
    let (code, rows) = json_lines(&["truth", model.to_str().unwrap(), "--effect", "NIE", "--effect", "TE"]);
    assert_eq!(code, 0);
    assert_eq!(rows[0]["effect"], "NIE");
    assert!((rows[0]["value"].as_f64().unwrap() - 0.64).abs() < 1e-12);
    assert!((rows[1]["value"].as_f64().unwrap() - 0.64).abs() < 1e-12);
}

#[test]
fn identify_matches_truth_on_model_law() {
    let model = fixture("cross-world.model");
    let (code, rows) = json_lines(&["identify", model.to_str().unwrap(), "--effect", "IIE", "--class", "FFRCISTG"]);
    assert_eq!(code, 0);
    let (_, truth) = json_lines(&["truth", model.to_str().unwrap(), "--effect", "IIE"]);
    let a = rows[0]["value"].as_f64().unwrap();
    let b = truth[0]["value"].as_f64().unwrap();
    assert!((a - b).abs() < 1e-12, "{} vs {}", a, b);
}

#[test]
fn unregistered_pair_exits_four() {
    let model = fixture("noisy-chain.model");
    let (code, _, err) = mediate(&["identify", model.to_str().unwrap(), "--effect", "NIE", "--class", "FFRCISTG"]);
    assert_eq!(code, 4, "{}", err);
}

#[test]
fn invalid_model_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.model");
    std::fs::write(&p, "[variables]\nA : A : 0, 1\n").unwrap();
    let (code, rows) = json_lines(&["validate", p.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert_eq!(rows.last().unwrap()["message"], "invalid");
    std::fs::write(&p, "[variables]\nA : Q : 0, 1\n").unwrap();
    let (code, _, err) = mediate(&["truth", p.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("line 2"), "{}", err);
}

#[test]
fn check_and_classify() {
    let model = fixture("separable.model");
    let (code, rows) = json_lines(&["check", model.to_str().unwrap(), "--assumption", "A8", "--assumption", "A9"]);
    assert_eq!(code, 0);
    assert!(rows.iter().all(|r| r["holds"] == true));
    let (code, rows) = json_lines(&["classify", model.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(rows.iter().any(|r| r["class"] == "popFFRCISTG"));
}

#[test]
fn graph_queries() {
    let (code, rows) = json_lines(&[
        "graph", "separable", "--builtin", "--swig", "A_M,A_Y", "--x", "Y", "--y", "A", "--given", "C",
    ]);
    assert_eq!(code, 0);
    assert_eq!(rows[0]["separated"], true);
    let (_, rows) = json_lines(&["graph", "mediation", "--builtin", "--swig", "A,M", "--implied", "--recognized"]);
    let ids: Vec<&str> = rows.iter().map(|r| r["assumption"].as_str().unwrap()).collect();
    assert_eq!(ids, ["A1", "A2", "A3"]);
    let (code, _, _) = mediate(&["graph", "no-such", "--builtin"]);
    assert_eq!(code, 1);
}

#[test]
fn search_writes_a_reverifiable_model() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("cx.model");
    let (code, rows) = json_lines(&["search", "separable-null", "--budget", "2e3", "--out", p.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(rows[0]["effect_value"].as_f64().unwrap().abs() >= 0.01);
    let (code, rows) = json_lines(&["search", "separable-null", "--verify", p.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(rows.iter().skip(1).all(|r| r["holds"] == true));
}

#[test]
fn impossible_search_exits_five() {
    let (code, _, _) = mediate(&["search", "separable-null", "--budget", "64", "--require", "A6,A7"]);
    assert_eq!(code, 5);
}

#[test]
fn simulate_then_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("d.csv");
    let model = fixture("noisy-chain.model");
    let (code, _, _) = mediate(&["--seed", "4", "simulate", model.to_str().unwrap(), "--n", "5e3", "--out", csv.to_str().unwrap()]);
    assert_eq!(code, 0);
    let args = ["estimate", csv.to_str().unwrap(), "--effect", "NIE", "--class", "NPSEM-IE", "--bootstrap", "200"];
    let (code, rows) = json_lines(&args);
    assert_eq!(code, 0);
    let r = &rows[0];
    for field in ["formula", "m", "point", "lower", "upper", "level", "replicates", "dropped", "seed", "method", "n"] {
        assert!(r.get(field).is_some(), "missing {}", field);
    }
    let (lo, pt, hi) = (r["lower"].as_f64().unwrap(), r["point"].as_f64().unwrap(), r["upper"].as_f64().unwrap());
    assert!(lo <= pt && pt <= hi);
    assert!((pt - 0.64).abs() < 0.05);
    let (_, again) = json_lines(&args);
    assert_eq!(again, rows);
}

#[test]
fn positivity_gap_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("gap.csv");
    std::fs::write(&csv, "a:A,m:M,y:Y\n0,0,0\n0,0,1\n1,1,1\n").unwrap();
    let (code, rows) = json_lines(&["estimate", csv.to_str().unwrap(), "--formula", "mediation-indirect"]);
    assert_eq!(code, 3);
    assert!(!rows[0]["positivity_gaps"].as_array().unwrap().is_empty());
}

#[test]
fn advise_scenarios() {
    let (code, rows) = json_lines(&["advise", "--answers", "l-present=no,cross-world=implausible,interaction=fails,separable=yes"]);
    assert_eq!(code, 0);
    assert_eq!(rows[0]["estimand"], "SIE");
    let (code, rows) = json_lines(&["advise", "--answers", "l-present=yes"]);
    assert_eq!(code, 0);
    assert_eq!(rows[0]["pending"], "confounding");
    let (code, _, _) = mediate(&["advise", "--answers", "l-present=yes,confounding=violated-exposure"]);
    assert_eq!(code, 4);
}

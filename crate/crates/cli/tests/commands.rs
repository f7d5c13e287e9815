use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ftrisk::inference::parse_draws_csv;
use ftrisk::{data, PriorSpec};

fn ftrisk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ftrisk")).args(args).output().unwrap()
}

fn bundled(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/data")
        .join(name)
        .display()
        .to_string()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn path(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

#[test]
fn validate_reports_shape() {
    let out = ftrisk(&["validate", &bundled("atv_tree.json")]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "k=11 n=14 PURE_TREE");
}

#[test]
fn validate_names_the_cycle() {
    let dir = tempfile::tempdir().unwrap();
    let tree = path(dir.path(), "cycle.json");
    fs::write(
        &tree,
        r#"{"top": "G1", "events": [{"id": "A"}, {"id": "B"},
            {"id": "G1", "gate": "OR", "inputs": ["A", "G2"]},
            {"id": "G2", "gate": "AND", "inputs": ["B", "G1"]}]}"#,
    )
    .unwrap();
    let out = ftrisk(&["validate", tree.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("cycle"), "{}", stderr(&out));
    assert!(out.stdout.is_empty());
}

#[test]
fn missing_input_is_an_error() {
    let out = ftrisk(&["validate", "/nonexistent/tree.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).starts_with("error:"));
}

#[test]
fn elicited_priors_feed_the_prior_command() {
    let dir = tempfile::tempdir().unwrap();
    let priors = path(dir.path(), "priors.json");
    let out = ftrisk(&[
        "elicit",
        &bundled("atv_tree.json"),
        &bundled("atv_elicitation.json"),
        "--out",
        priors.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let spec = PriorSpec::from_json(&data::atv_tree(), &fs::read_to_string(&priors).unwrap()).unwrap();
    assert_eq!(spec.len(), 11);
    assert!(path(dir.path(), "priors.json.manifest.json").exists());

    let draws = path(dir.path(), "draws.csv");
    let out = ftrisk(&[
        "prior",
        &bundled("atv_tree.json"),
        priors.to_str().unwrap(),
        "--samples",
        "2000",
        "--seed",
        "3",
        "--out",
        path(dir.path(), "prior.json").to_str().unwrap(),
        "--draws",
        draws.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let (ids, columns) = parse_draws_csv(&fs::read_to_string(&draws).unwrap()).unwrap();
    assert_eq!(ids.first().map(String::as_str), Some("E01"));
    assert!(ids.iter().any(|id| id == "E14"));
    assert!(columns.iter().all(|c| c.len() == 2000));
}

#[test]
fn update_without_observations_returns_the_prior() {
    let dir = tempfile::tempdir().unwrap();
    let empty = path(dir.path(), "empty.csv");
    fs::write(&empty, "E14\n").unwrap();
    let summary = path(dir.path(), "posterior.json");
    let out = ftrisk(&[
        "update",
        &bundled("atv_tree.json"),
        &bundled("atv_priors_table7.json"),
        empty.to_str().unwrap(),
        "--method",
        "is",
        "--samples",
        "50000",
        "--seed",
        "5",
        "--out",
        summary.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&summary).unwrap()).unwrap();
    let prior = data::atv_published_priors();
    for q in report["quantities"].as_array().unwrap() {
        let id = q["event"].as_str().unwrap();
        if let Some(beta) = prior.get(id) {
            let mean = q["mean"].as_f64().unwrap();
            let mcse = q["mcse"].as_f64().unwrap();
            assert!(
                (mean - beta.mean()).abs() <= 4.0 * mcse,
                "{id}: {mean} vs {}",
                beta.mean()
            );
        }
    }
}

#[test]
fn update_rejects_malformed_rows() {
    let dir = tempfile::tempdir().unwrap();
    let bad = path(dir.path(), "bad.csv");
    fs::write(&bad, "E1,E7\n0,0\n1,maybe\n").unwrap();
    let priors = path(dir.path(), "priors.json");
    fs::write(&priors, PriorSpec::uniform(&data::fig1_tree()).to_json()).unwrap();
    let out = ftrisk(&[
        "update",
        &bundled("fig1_tree.json"),
        priors.to_str().unwrap(),
        bad.to_str().unwrap(),
        "--seed",
        "1",
        "--out",
        path(dir.path(), "x.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("row 2"), "{}", stderr(&out));
}

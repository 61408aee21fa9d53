use std::fs;
use std::path::Path;
use std::process::Command;

fn bootdro(dir: &Path, args: &[&str]) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_bootdro"))
        .args(["--config", "config.json", "--out", "out", "--seed", "9"])
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("config.json"),
        r#"{"n": 30, "p": 3, "k": 10, "repetitions": 3, "epsilon_grid": [0.0, 0.05, 0.5]}"#,
    )
    .unwrap();
    dir
}

#[test]
fn tradeoff_writes_records_and_figures() {
    let dir = setup();
    bootdro(dir.path(), &["--jobs", "1", "tradeoff"]);
    let out = dir.path().join("out");
    let records = fs::read_to_string(out.join("records.csv")).unwrap();
    let mut lines = records.lines();
    assert_eq!(lines.next(), Some("epsilon,rep,objective,violation,status"));
    assert_eq!(lines.count(), 9);
    for f in ["summary.csv", "tradeoff_objective.svg", "tradeoff_violation.svg", "tradeoff.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn fit_bootstrap_solve_pipeline() {
    let dir = setup();
    bootdro(dir.path(), &["fit"]);
    let out = dir.path().join("out");
    let header = fs::read_to_string(out.join("dataset.csv")).unwrap().lines().next().unwrap().to_owned();
    assert_eq!(header, "x1,x2,x3,y");
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("dataset.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 9);

    bootdro(dir.path(), &["bootstrap", "--data", "out/dataset.csv", "--k", "12"]);
    let ens: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("ensemble.json")).unwrap()).unwrap();
    assert_eq!(ens["k"], 12);
    assert_eq!(ens["source_sha256"].as_str().unwrap().len(), 64);

    bootdro(dir.path(), &["solve", "--ensemble", "out/ensemble.csv", "--epsilon", "0.1"]);
    let sol: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("solution.json")).unwrap()).unwrap();
    assert_eq!(sol["status"], "optimal");
    assert!(out.join("program.txt").exists() && out.join("problem.json").exists());

    bootdro(dir.path(), &["radius", "--data", "out/dataset.csv"]);
    assert!(out.join("radius.json").exists());
}

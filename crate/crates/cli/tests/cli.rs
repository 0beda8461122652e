use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_quasiperiodic"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

#[test]
fn edges_pass_with_exit_zero() {
    let out = run(&["edges", "--lambda", "50", "--grid", "16", "--N", "60"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("holds"));
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "lambda = 3\ntypo = 1\n").unwrap();
    let out = run(&["edges", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let missing = dir.path().join("missing.toml");
    assert_eq!(run(&["edges", "--config", missing.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(run(&["scan", "--omega", "nope"]).status.code(), Some(2));
    assert_eq!(run(&["edges", "--format", "yaml"]).status.code(), Some(2));
}

#[test]
fn scan_exports_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scan.toml");
    std::fs::write(&cfg, "lambda = 3.0\ns = 0.7\nN = 30\ngrid = 6\nseed = 4\n").unwrap();
    let csv_path = dir.path().join("scan.csv");
    let out = run(&["scan", "--config", cfg.to_str().unwrap(), "--out", csv_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv_path).unwrap();
    assert!(text.lines().any(|l| l == "kind,left,right,width,level,phase_index"));
    assert!(text.starts_with("# config: "));
    let json_path = dir.path().join("scan.json");
    let out = run(&[
        "scan",
        "--config",
        cfg.to_str().unwrap(),
        "--grid",
        "5",
        "--format",
        "json",
        "--out",
        json_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let rep = quasiperiodic::scan::import_json(&json_path).unwrap();
    assert_eq!(rep.config.grid, 5);
    assert_eq!(rep.config.seed, 4);
    assert_eq!(rep.eigenvalues.len() + rep.discarded, 30 * 25);
}

#[test]
fn json_output_for_reports() {
    let out = run(&["levelset", "--points", "8", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["points"], 64);
}

#[test]
fn degenerate_example_exits_one() {
    let out = run(&["genericity", "--example", "--s", "0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("(i) false"));
}

#[test]
fn lyapunov_and_ldt_run() {
    let out = run(&["lyapunov", "--lambda", "20", "--N", "40", "--samples", "200"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("Avalanche"));
    let out = run(&["ldt", "--lambda", "20", "--N", "40", "--samples", "200"]);
    assert_eq!(out.status.code(), Some(0));
}

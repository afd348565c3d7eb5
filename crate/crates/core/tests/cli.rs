use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tvopt::harness::CSV_HEADER;

fn tvopt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tvopt"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data").join(name)
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

const QUADRATIC: &str = r#"{
  "seed": 1, "agents": 5,
  "objective": {"kind": "quadratic", "alpha": 0.5},
  "topology": {"window": 1, "seed": 0, "graph": {"kind": "fixed", "name": "ring"}},
  "target_eps": 1e-4,
  "methods": [
    {"id": "pgd", "method": "proj_gd", "inner": {"fixed_rounds": 2}, "iterations": 30},
    {"id": "acc", "method": "accelerated", "inner": {"fixed_rounds": 8}, "iterations": 30, "gamma": METHOD_GAMMA}
  ]
}"#;

#[test]
fn run_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "q.json", &QUADRATIC.replace("METHOD_GAMMA", "0.5"));
    let out = tvopt(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("method,k,comms,grads,fgap,dist_sq_to_opt,dist_to_consensus,r_k"));
    assert_eq!(CSV_HEADER, "method,k,comms,grads,fgap,dist_sq_to_opt,dist_to_consensus,r_k");
    assert_eq!(lines.count(), 2 * 31);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["agents"], 5);
    assert_eq!(manifest["methods"][1]["status"], "ok");
}

#[test]
fn all_methods_failing_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = QUADRATIC
        .replace("METHOD_GAMMA", "1e9")
        .replace(r#"{"id": "pgd", "method": "proj_gd", "inner": {"fixed_rounds": 2}, "iterations": 30},"#, "");
    let cfg = write(dir.path(), "q.json", &cfg);
    let out = tvopt(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad_field = write(dir.path(), "a.json", &QUADRATIC.replace("\"seed\"", "\"sed\""));
    let bad_value = write(dir.path(), "b.json", &QUADRATIC.replace("\"agents\": 5", "\"agents\": 1"));
    for cfg in [bad_field, bad_value, dir.path().join("missing.json").display().to_string()] {
        assert_eq!(tvopt(&["run", &cfg]).status.code(), Some(1), "{cfg}");
    }
}

#[test]
fn parse_subcommand() {
    let out = tvopt(&["parse", data("toy.libsvm").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["rows"], 96);
    assert_eq!(summary["features"], 6);

    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.libsvm", "1 1:0.5\n+1 2:oops\n");
    let out = tvopt(&["parse", &bad]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.libsvm:2:"));
    let out = tvopt(&["parse", dir.path().join("nope.libsvm").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn malformed_data_in_run_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "d.libsvm", "1 1:1\n-1 1:x\n");
    let cfg = QUADRATIC
        .replace("METHOD_GAMMA", "0.5")
        .replace(
            r#"{"kind": "quadratic", "alpha": 0.5}"#,
            r#"{"kind": "logistic", "path": "d.libsvm"}"#,
        )
        .replace("\"agents\": 5", "\"agents\": 2");
    let cfg = write(dir.path(), "l.json", &cfg);
    assert_eq!(tvopt(&["run", &cfg]).status.code(), Some(3));
}

#[test]
fn check_topology_and_bench() {
    let cfg = data("toy_alternating.json");
    let out = tvopt(&["check-topology", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["pass"], true);
    assert!(report["delta_hat"].as_f64().unwrap() < 1.0);

    let out = tvopt(&["consensus-bench", data("quadratic_ring.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("round,dist_to_consensus,bound"));
    assert_eq!(lines.count(), 41);
}

use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn nodeflow(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_nodeflow"));
    cmd.args(args).env_remove("NODEFLOW_THREADS");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, config: &Value) -> String {
    let path = dir.join(format!("{name}.json"));
    std::fs::write(&path, config.to_string()).unwrap();
    path.to_str().unwrap().to_string()
}

fn run(dir: &Path, name: &str, config: &Value, envs: &[(&str, &str)]) -> Output {
    let path = write_config(dir, name, config);
    nodeflow(&["run", &path, "--out-dir", dir.join("out").to_str().unwrap()], envs)
}

fn read(dir: &Path, file: &str) -> String {
    std::fs::read_to_string(dir.join("out").join(file)).unwrap()
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let idx = lines.next().unwrap().split(',').position(|h| h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().to_string()).collect()
}

#[test]
fn list_prints_six_suites() {
    let out = nodeflow(&["list"], &[]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().collect::<Vec<_>>(), ["flow_axioms", "gronwall", "fit", "compose", "rescale", "normcmp"]);

    let out = nodeflow(&["list", "--json"], &[]);
    assert!(out.status.success());
    let names: Vec<String> = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(names, text.lines().collect::<Vec<_>>());
}

#[test]
fn unknown_flag_prints_usage() {
    let out = nodeflow(&["list", "--colour"], &[]);
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr).unwrap().contains("Usage"));
}

#[test]
fn flow_axioms_run() {
    let dir = tempfile::tempdir().unwrap();
    let config = json!({ "kind": "flow_axioms", "dimension": 2, "seed": 3, "output_prefix": "flow" });
    let out = run(dir.path(), "flow", &config, &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(dir.path(), "flow.csv");
    let checks = column(&csv, "check");
    let values = column(&csv, "max_value");
    let group: Vec<f64> =
        checks.iter().zip(&values).filter(|(c, _)| *c == "group_law").map(|(_, v)| v.parse().unwrap()).collect();
    assert_eq!(group.len(), 4);
    assert!(group.iter().all(|&v| v <= 1e-6));
    assert!(column(&csv, "seed").iter().all(|s| s == "3"));

    let report: Value = serde_json::from_str(&read(dir.path(), "flow.report.json")).unwrap();
    assert_eq!(report["seed"], 3);
    assert_eq!(report["passed"], true);
    assert!(report["metadata"]["generated_unix_seconds"].as_u64().unwrap() > 0);
    assert!(!dir.path().join("out/flow.svg").exists());
}

#[test]
fn normcmp_ladder_increases() {
    let dir = tempfile::tempdir().unwrap();
    let config = json!({ "kind": "normcmp", "seed": 0, "output_prefix": "nc" });
    let out = run(dir.path(), "nc", &config, &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(dir.path(), "nc.csv");
    assert!(csv.starts_with("p,delta,norm,n,gap,seed\n"));
    let norms: Vec<f64> = column(&csv, "norm").iter().map(|v| v.parse().unwrap()).collect();
    assert_eq!(norms.len(), 15);
    assert!(norms.windows(2).all(|w| w[1] > w[0]));
    let svg = read(dir.path(), "nc.svg");
    assert!(svg.starts_with("<svg") && svg.contains("<polyline"));
}

#[test]
fn missing_dimension_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let config = json!({ "kind": "flow_axioms", "seed": 3, "output_prefix": "flow" });
    let out = run(dir.path(), "bad", &config, &[]);
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr).unwrap().contains("`dimension`"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn malformed_json_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    std::fs::write(&path, "{ \"kind\": ").unwrap();
    let out = nodeflow(&["run", path.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = json!({ "kind": "rescale", "dimension": 1, "seed": 5, "output_prefix": "rs", "params": { "points": 5 } });
    assert!(run(dir.path(), "rs", &config, &[]).status.success());
    let first_csv = read(dir.path(), "rs.csv");
    let mut first: Value = serde_json::from_str(&read(dir.path(), "rs.report.json")).unwrap();
    assert!(run(dir.path(), "rs", &config, &[("NODEFLOW_THREADS", "2")]).status.success());
    assert_eq!(read(dir.path(), "rs.csv"), first_csv);
    let mut second: Value = serde_json::from_str(&read(dir.path(), "rs.report.json")).unwrap();
    assert_eq!(second["metadata"]["threads"], 2);
    first.as_object_mut().unwrap().remove("metadata");
    second.as_object_mut().unwrap().remove("metadata");
    assert_eq!(first, second);
}

#[test]
fn bad_thread_count_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = json!({ "kind": "normcmp", "seed": 0, "output_prefix": "nc" });
    let out = run(dir.path(), "nc", &config, &[("NODEFLOW_THREADS", "zero")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn library_errors_show_case_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = json!({
        "kind": "fit",
        "dimension": 1,
        "seed": 1,
        "output_prefix": "fit",
        "train": { "learning_rate": 1e150, "optimizer": "sgd", "activation": "relu", "epoch_count": 5, "sample_count": 64 }
    });
    let out = run(dir.path(), "fit", &config, &[]);
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("case {") && stderr.contains("\"learning_rate\":1e+150"), "{stderr}");
    assert!(!dir.path().join("out").exists());
}

#[test]
fn missed_budget_fails_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let zero = json!({ "dim": 2, "variant": { "type": "zero" } });
    let config = json!({
        "kind": "compose",
        "dimension": 2,
        "seed": 1,
        "output_prefix": "cmp",
        "train": { "sample_count": 64, "epoch_count": 2, "hidden_widths": [4] },
        "params": { "eps": 1e-6, "stages": [zero], "options": { "resolution": 5 } }
    });
    let out = run(dir.path(), "cmp", &config, &[]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_str(&read(dir.path(), "cmp.report.json")).unwrap();
    assert_eq!(report["passed"], false);
    assert_eq!(report["results"]["report"]["success"], false);
    assert!(report["results"]["model"].is_null());
    assert_eq!(column(&read(dir.path(), "cmp.csv"), "stage"), ["0", "final"]);
}

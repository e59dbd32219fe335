use std::process::Command;

fn dqip() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dqip"))
}

fn config(dir: &std::path::Path, text: &str) -> std::path::PathBuf {
    let p = dir.join("config.json");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn run_writes_json_and_csv_to_the_env_dir() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = config(
        dir.path(),
        r#"{"name": "g", "experiment": {"kind": "ghz", "graph": {"family": "path", "nodes": 3}, "copies": 2}}"#,
    );
    let status = dqip().arg("run").arg(&cfg).env("DQIP_OUTPUT_DIR", &out).output().unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("g.json")).unwrap()).unwrap();
    assert!((json["metrics"]["acceptance"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert!(json["metrics"]["output_fidelity"].as_f64().unwrap() >= 1.0 - 1e-9);
    assert_eq!(json["config"]["seed"], 0);
    let csv = std::fs::read_to_string(out.join("g.csv")).unwrap();
    assert!(csv.starts_with("experiment,metric,value\n"));
}

#[test]
fn equal_inputs_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        dir.path(),
        r#"{"experiment": {"kind": "dqct", "graph": {"family": "path", "nodes": 2}, "qubits_per_node": [2, 1], "inputs": "equal"}, "seed": 11}"#,
    );
    let status = dqip().args(["run"]).arg(&cfg).arg("--output").arg(dir.path()).output().unwrap();
    assert!(status.status.success());
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("dqct.json")).unwrap()).unwrap();
    assert!((json["metrics"]["acceptance"].as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn failures_print_a_machine_readable_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        dir.path(),
        r#"{"experiment": {"kind": "ghz", "graph": {"family": "path", "nodes": 3}, "copies": 1, "colour": 1}}"#,
    );
    let out = dqip().arg("run").arg(&cfg).env("DQIP_OUTPUT_DIR", dir.path()).output().unwrap();
    assert!(!out.status.success());
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "config");
    assert!(err["error"]["message"].as_str().unwrap().contains("colour"));

    let out = dqip().arg("run").arg(dir.path().join("missing.json")).output().unwrap();
    assert!(!out.status.success());
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "io");
}

#[test]
fn capacity_errors_surface() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        dir.path(),
        r#"{"experiment": {"kind": "ghz", "graph": {"family": "path", "nodes": 6}, "copies": 3}}"#,
    );
    let out = dqip().arg("run").arg(&cfg).env("DQIP_OUTPUT_DIR", dir.path()).output().unwrap();
    assert!(!out.status.success());
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "capacity");
}

#[test]
fn listings() {
    let out = dqip().arg("list-protocols").output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["bipartite-pls", "coin-echo", "tilted-0.75"] {
        assert!(text.contains(name), "{text}");
    }
    let out = dqip().arg("list-dam").output().unwrap();
    assert!(String::from_utf8(out.stdout).unwrap().contains("coin-echo"));
}

#[test]
fn verify_suite_subset() {
    let out = dqip().args(["verify-suite", "--only", "1,2"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("[PASS]")).count(), 2, "{text}");
    let out = dqip().args(["verify-suite", "--only", "99"]).output().unwrap();
    assert!(!out.status.success());
}

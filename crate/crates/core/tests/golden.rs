//! Reports and protocol documents compared against checked-in files.
//! Set `DQIP_BLESS=1` to rewrite them.

use std::path::{Path, PathBuf};

use dqip_core::cli::{run, ExperimentConfig};
use dqip_core::compile::compile_corpus;
use dqip_core::protocol::ProtocolSpec;
use serde_json::Value;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// Same shape, same strings, numbers within 1e-9.
fn close(a: &Value, b: &Value, at: &str) -> Result<(), String> {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            let (x, y) = (x.as_f64().unwrap(), y.as_f64().unwrap());
            if (x - y).abs() <= 1e-9 * (1.0 + y.abs()) {
                Ok(())
            } else {
                Err(format!("{at}: {x} != {y}"))
            }
        }
        (Value::Object(x), Value::Object(y)) => {
            let kx: Vec<_> = x.keys().collect();
            let ky: Vec<_> = y.keys().collect();
            if kx != ky {
                return Err(format!("{at}: keys {kx:?} != {ky:?}"));
            }
            x.iter().try_for_each(|(k, v)| close(v, &y[k], &format!("{at}.{k}")))
        }
        (Value::Array(x), Value::Array(y)) => {
            if x.len() != y.len() {
                return Err(format!("{at}: length {} != {}", x.len(), y.len()));
            }
            x.iter()
                .zip(y)
                .enumerate()
                .try_for_each(|(i, (p, q))| close(p, q, &format!("{at}[{i}]")))
        }
        _ if a == b => Ok(()),
        _ => Err(format!("{at}: {a} != {b}")),
    }
}

fn compare(name: &str, text: &str) {
    let path = golden_dir().join(name);
    if std::env::var_os("DQIP_BLESS").is_some() {
        std::fs::create_dir_all(golden_dir()).unwrap();
        std::fs::write(&path, text).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let a: Value = serde_json::from_str(text).unwrap();
    let b: Value = serde_json::from_str(&expected).unwrap();
    if let Err(e) = close(&a, &b, name) {
        panic!("{e}");
    }
}

fn configs() -> Vec<(String, ExperimentConfig)> {
    let mut out: Vec<_> = std::fs::read_dir(root().join("configs"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .map(|p| {
            let c = ExperimentConfig::load(&p).unwrap();
            (p.file_name().unwrap().to_string_lossy().into_owned(), c)
        })
        .collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    assert!(out.len() >= 6, "canonical configs missing");
    out
}

#[test]
fn reports_match_golden_files() {
    for (file, config) in configs() {
        let report = run(&config).unwrap_or_else(|e| panic!("{file}: {e}"));
        compare(&format!("{}.json", config.stem()), &report.to_json().unwrap());
    }
}

#[test]
fn csv_rows_are_the_json_metrics() {
    for (file, config) in configs() {
        if file.starts_with("dqct-soundness") {
            continue;
        }
        let report = run(&config).unwrap();
        let json: Value = serde_json::from_str(&report.to_json().unwrap()).unwrap();
        let metrics = json["metrics"].as_object().unwrap();
        let csv = report.to_csv().unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("experiment,metric,value"));
        let rows: Vec<_> = lines.collect();
        assert_eq!(rows.len(), metrics.len(), "{file}");
        for row in rows {
            let parts: Vec<_> = row.split(',').collect();
            assert_eq!(parts[0], config.stem());
            let v: f64 = parts[2].parse().unwrap();
            assert_eq!(metrics[parts[1]].as_f64(), Some(v), "{file}: {row}");
        }
    }
}

#[test]
fn reruns_are_byte_identical() {
    for (file, config) in configs() {
        if file.starts_with("dqct-soundness") {
            continue;
        }
        let a = run(&config).unwrap().to_json().unwrap();
        let b = run(&config).unwrap().to_json().unwrap();
        assert_eq!(a, b, "{file}");
    }
}

#[test]
fn reports_round_trip() {
    let (_, config) = configs().into_iter().find(|(f, _)| f.starts_with("ghz-path3")).unwrap();
    let report = run(&config).unwrap();
    let text = report.to_json().unwrap();
    let back: dqip_core::cli::ExperimentReport = serde_json::from_str(&text).unwrap();
    assert_eq!(back, report);
    assert_eq!(back.to_json().unwrap(), text);
}

#[test]
fn protocol_documents_match_golden_files() {
    for name in ["tilted-0.75", "coin-echo"] {
        let e = compile_corpus().unwrap().into_iter().find(|e| e.name == name).unwrap();
        let text = serde_json::to_string_pretty(&e.yes).unwrap() + "\n";
        compare(&format!("spec-{name}.json"), &text);
        let back: ProtocolSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, e.yes);
    }
}

#[test]
fn gates_are_row_major_pairs() {
    // cnot on [control, target]: local index = control + 2 * target
    let v = serde_json::to_value(dqip_core::qcore::Gate::cnot()).unwrap();
    assert_eq!(v["arity"], 2);
    let m = v["matrix"].as_array().unwrap();
    assert_eq!(m.len(), 16);
    let ones: Vec<usize> = (0..16).filter(|&i| m[i][0].as_f64() == Some(1.0)).collect();
    // |0>->|0>, |1>->|3>, |2>->|2>, |3>->|1>
    assert_eq!(ones, vec![0, 4 + 3, 2 * 4 + 2, 3 * 4 + 1]);
}

#[test]
fn shipped_schema_names_every_kind_and_protocol() {
    let text = std::fs::read_to_string(root().join("docs/config.schema.json")).unwrap();
    let schema: Value = serde_json::from_str(&text).unwrap();
    let kinds: Vec<&str> = schema["$defs"]["experiment"]["oneOf"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v["properties"]["kind"]["const"].as_str().unwrap())
        .collect();
    for (_, c) in configs() {
        assert!(kinds.contains(&c.experiment.kind()), "{}", c.experiment.kind());
    }
    assert_eq!(kinds.len(), 6);
    let names: Vec<Value> = compile_corpus().unwrap().into_iter().map(|e| Value::from(e.name)).collect();
    assert_eq!(&names, schema["$defs"]["corpus_protocol"]["enum"].as_array().unwrap());
}

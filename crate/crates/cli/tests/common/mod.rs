#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

pub const SCHEMAS: &[&str] = &["info", "fit", "simulate", "forecast", "roll", "backtest", "dm", "error"];

pub fn gas(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gas")).current_dir(dir).args(args).output().expect("binary runs")
}

/// Runs a command expected to succeed and returns its standard output.
pub fn ok(dir: &Path, args: &[&str]) -> String {
    let out = gas(dir, args);
    assert!(
        out.status.success(),
        "gas {args:?} failed ({:?}): {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

pub fn schema(name: &str) -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas").join(format!("{name}.schema.json"));
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

pub fn assert_valid(name: &str, doc: &Value) {
    let validator = jsonschema::validator_for(&schema(name)).expect("schema compiles");
    let errors: Vec<String> = validator.iter_errors(doc).map(|e| format!("{} at {}", e, e.instance_path())).collect();
    assert!(errors.is_empty(), "{name} schema: {errors:#?}");
}

pub fn json(text: &str) -> Value {
    serde_json::from_str(text).expect("valid JSON")
}

pub fn read_json(path: &Path) -> Value {
    json(&std::fs::read_to_string(path).unwrap())
}

pub fn write(dir: &Path, name: &str, contents: &str) {
    std::fs::write(dir.join(name), contents).unwrap();
}

/// Simulates the persistent-volatility Student-t model used across tests.
pub fn simulate_std(dir: &Path, name: &str, length: usize, seed: u64) -> Value {
    json(&ok(
        dir,
        &[
            "simulate", "--dist", "std", "--a-diag", "0,0.08,0", "--b-diag", "0,0.97,0", "--theta-star",
            "0,0.01,6", "--length", &length.to_string(), "--seed", &seed.to_string(), "--out", name,
        ],
    ))
}

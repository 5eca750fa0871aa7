//! Machine-readable run reports.
//!
//! Reports are plain JSON with a fixed field order; identical inputs produce
//! byte-identical reports. All numeric values are rounded to 12 significant
//! digits before serialization.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

/// Rounds to 12 significant digits.
pub fn sig12(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

#[derive(Serialize)]
pub struct CheckLine {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckLine {
    pub fn new(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            residual: sig12(residual),
            tolerance: sig12(tolerance),
            pass: residual < tolerance,
        }
    }
}

#[derive(Serialize)]
pub struct RunReport {
    pub command: String,
    /// SHA-256 digest of every input file, keyed by the path as given.
    pub inputs: BTreeMap<String, String>,
    pub checks: Vec<CheckLine>,
    #[serde(skip_serializing_if = "Map::is_empty")]
    pub results: Map<String, Value>,
    pub artifacts: Vec<String>,
    pub pass: bool,
}

impl RunReport {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            inputs: BTreeMap::new(),
            checks: Vec::new(),
            results: Map::new(),
            artifacts: Vec::new(),
            pass: true,
        }
    }

    pub fn digest_input(&mut self, path: &str) -> std::io::Result<()> {
        let bytes = std::fs::read(path)?;
        let mut hasher = Sha256::new();
        hasher.update(&bytes);
        self.inputs
            .insert(path.to_string(), format!("{:x}", hasher.finalize()));
        Ok(())
    }

    pub fn push_check(&mut self, check: CheckLine) {
        self.pass &= check.pass;
        self.checks.push(check);
    }

    pub fn set_result(&mut self, key: &str, value: Value) {
        self.results.insert(key.to_string(), value);
    }

    /// Serializes and writes the report: to `out` when given, to stdout
    /// otherwise.
    pub fn emit(&self, out: Option<&Path>) -> std::io::Result<()> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("report serializes");
        bytes.push(b'\n');
        match out {
            Some(path) => std::fs::write(path, bytes),
            None => {
                use std::io::Write;
                std::io::stdout().write_all(&bytes)
            }
        }
    }
}

/// Matrix as row-major [re, im] pairs, rounded for report output.
pub fn matrix_value(m: &instrument_forge::matrix::CMat) -> Value {
    let mut rows = Vec::new();
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            let z = m[(r, c)];
            rows.push(Value::Array(vec![
                serde_json::json!(sig12(z.re)),
                serde_json::json!(sig12(z.im)),
            ]));
        }
    }
    Value::Array(rows)
}

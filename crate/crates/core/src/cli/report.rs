//! report.json: config echo, assertion outcomes and scenario diagnostics. No timings, so
//! identical configurations give identical files.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Debug, Serialize)]
pub struct Assertion {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub bound: f64,
}

impl Assertion {
    /// value <= bound (false for NaN).
    pub fn at_most(name: &str, value: f64, bound: f64) -> Self {
        Assertion { name: name.into(), pass: value <= bound, value, bound }
    }

    /// A yes/no check, recorded as value 1 (true) or 0 against bound 1.
    pub fn holds(name: &str, ok: bool) -> Self {
        Assertion { name: name.into(), pass: ok, value: if ok { 1.0 } else { 0.0 }, bound: 1.0 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ErrorRecord {
    pub kind: String,
    pub message: String,
    pub exit_code: i32,
}

impl From<&Error> for ErrorRecord {
    fn from(e: &Error) -> Self {
        ErrorRecord { kind: e.kind().into(), message: e.to_string(), exit_code: e.exit_code() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub scenario: String,
    pub config: BTreeMap<String, String>,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure_mode: Option<String>,
    pub assertions: Vec<Assertion>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorRecord>,
    pub diagnostics: serde_json::Value,
    /// Files written next to the report.
    pub artifacts: Vec<String>,
}

impl Report {
    pub fn new(scenario: &str, config: BTreeMap<String, String>) -> Self {
        Report {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            scenario: scenario.into(),
            config,
            status: "pass".into(),
            failure_mode: None,
            assertions: Vec::new(),
            error: None,
            diagnostics: serde_json::Value::Null,
            artifacts: Vec::new(),
        }
    }

    pub fn all_pass(&self) -> bool {
        self.error.is_none() && self.assertions.iter().all(|a| a.pass)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Config(format!("report serialization: {e}")))?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }
}

/// Serializes a diagnostic value; serde_json maps non-finite floats to null.
pub fn to_value<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).unwrap_or(serde_json::Value::Null)
}

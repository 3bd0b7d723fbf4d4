//! Verification reports.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// One asserted inequality or agreement. `detail` carries the measured
/// values together with their tolerance or standard error.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: Value,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool, detail: impl Serialize) -> Self {
        Self {
            name: name.into(),
            pass,
            detail: to_value(detail),
        }
    }
}

/// A CSV table. Cells are preformatted so the report round-trips exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: &[f64]) {
        self.rows.push(row.iter().map(|&x| format_float(x)).collect());
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for row in &self.rows {
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }
}

/// `(t, value, stderr)` points of one observable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub points: Vec<[f64; 3]>,
}

impl Series {
    /// Points with a non-finite entry are dropped.
    pub fn new(name: &str, points: impl IntoIterator<Item = [f64; 3]>) -> Self {
        Self {
            name: name.into(),
            points: points.into_iter().filter(|p| p.iter().all(|x| x.is_finite())).collect(),
        }
    }
}

/// Results for one model, ball or sweep cell.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Section {
    pub label: String,
    /// Solver outputs and Monte-Carlo records.
    pub outputs: BTreeMap<String, Value>,
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
    pub series: Vec<Series>,
}

impl Section {
    pub fn new(label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            ..Self::default()
        }
    }

    pub fn output(&mut self, key: &str, value: impl Serialize) {
        self.outputs.insert(key.into(), to_value(value));
    }

    pub fn check(&mut self, name: &str, pass: bool, detail: impl Serialize) {
        self.checks.push(Check::new(name, pass, detail));
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub kind: String,
    /// The configuration as `key=value` pairs; enough to re-run the experiment.
    pub config: BTreeMap<String, String>,
    pub sections: Vec<Section>,
    pub pass: bool,
    /// Wall times in seconds, per section label and `total`.
    pub wall_times: BTreeMap<String, f64>,
}

impl VerificationReport {
    pub fn checks(&self) -> impl Iterator<Item = (&Section, &Check)> {
        self.sections.iter().flat_map(|s| s.checks.iter().map(move |c| (s, c)))
    }

    /// The report with wall times removed: a pure function of the configuration.
    pub fn without_timings(&self) -> Self {
        Self {
            wall_times: BTreeMap::new(),
            ..self.clone()
        }
    }
}

/// `{:.16e}`: 17 significant digits, which round-trips any `f64`.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        String::new()
    }
}

/// JSON value of `v`; non-finite floats become `null`.
pub fn to_value(v: impl Serialize) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

//! Structured verification output shared by the library and the CLI.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Serialize, Serializer};
use serde_json::Value;

use crate::linalg::CMatrix;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Check {
    /// Passes when `value <= threshold` (NaN fails).
    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check {
            name: name.into(),
            value,
            threshold,
            passed: value <= threshold,
            detail: None,
        }
    }

    /// Passes when `value >= threshold` (NaN fails).
    pub fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check {
            name: name.into(),
            value,
            threshold,
            passed: value >= threshold,
            detail: None,
        }
    }

    /// Passes when `value < threshold`.
    pub fn below(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check {
            passed: value < threshold,
            ..Check::at_most(name, value, threshold)
        }
    }

    /// Passes when `value > threshold`.
    pub fn above(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check {
            passed: value > threshold,
            ..Check::at_least(name, value, threshold)
        }
    }

    pub fn flag(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            value: if passed { 1.0 } else { 0.0 },
            threshold: 1.0,
            passed,
            detail: Some(detail.into()),
        }
    }

    pub fn failed(name: impl Into<String>, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            value: f64::NAN,
            threshold: f64::NAN,
            passed: false,
            detail: Some(detail.into()),
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    #[default]
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct VerificationReport {
    pub command: String,
    pub config: Value,
    pub checks: Vec<Check>,
    pub certificates: BTreeMap<String, Value>,
    pub tables: BTreeMap<String, Table>,
    pub notes: Vec<String>,
    pub verdict: Verdict,
    pub wall_time: f64,
}

impl VerificationReport {
    pub fn new(command: impl Into<String>) -> Self {
        VerificationReport {
            command: command.into(),
            config: Value::Null,
            ..Default::default()
        }
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
        self.update_verdict();
    }

    pub fn extend(&mut self, other: VerificationReport) {
        self.checks.extend(other.checks);
        for (k, v) in other.certificates {
            self.certificates.insert(k, v);
        }
        for (k, v) in other.tables {
            self.tables.insert(k, v);
        }
        for note in other.notes {
            self.note(note);
        }
        self.update_verdict();
    }

    pub fn note(&mut self, note: impl Into<String>) {
        let note = note.into();
        if !self.notes.contains(&note) {
            self.notes.push(note);
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    fn update_verdict(&mut self) {
        self.verdict = if self.passed() { Verdict::Pass } else { Verdict::Fail };
    }
}

pub fn complex_json(c: Complex64) -> Value {
    serde_json::json!([c.re, c.im])
}

pub fn matrix_json(m: &CMatrix) -> Value {
    Value::Array(
        m.to_rows()
            .into_iter()
            .map(|row| Value::Array(row.into_iter().map(complex_json).collect()))
            .collect(),
    )
}

impl Serialize for CMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = self
            .to_rows()
            .into_iter()
            .map(|row| row.into_iter().map(|c| [c.re, c.im]).collect())
            .collect();
        rows.serialize(serializer)
    }
}

//! Machine-readable experiment reports.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub label: String,
    #[serde(default)]
    pub inputs: BTreeMap<String, Value>,
    #[serde(default)]
    pub values: BTreeMap<String, Value>,
    #[serde(default)]
    pub residual: Option<f64>,
    #[serde(default)]
    pub tolerance: Option<f64>,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

fn to_value<T: Serialize>(v: T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

impl Row {
    pub fn new(label: impl Into<String>) -> Self {
        Row {
            label: label.into(),
            inputs: BTreeMap::new(),
            values: BTreeMap::new(),
            residual: None,
            tolerance: None,
            pass: true,
            note: None,
        }
    }

    pub fn input<T: Serialize>(mut self, key: &str, v: T) -> Self {
        self.inputs.insert(key.to_string(), to_value(v));
        self
    }

    pub fn value<T: Serialize>(mut self, key: &str, v: T) -> Self {
        self.values.insert(key.to_string(), to_value(v));
        self
    }

    /// Records `residual ≤ tolerance`; a non-finite residual fails and is stored as `None`.
    pub fn check(mut self, residual: f64, tolerance: f64) -> Self {
        let ok = residual.is_finite() && residual <= tolerance;
        self.residual = residual.is_finite().then_some(residual);
        self.tolerance = Some(tolerance);
        self.pass &= ok;
        self
    }

    pub fn require(mut self, ok: bool) -> Self {
        self.pass &= ok;
        self
    }

    pub fn note(mut self, text: impl Into<String>) -> Self {
        self.note = Some(text.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub max_residual: f64,
    pub target: Option<f64>,
    pub achieved: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema: u32,
    pub command: String,
    pub parameters: BTreeMap<String, String>,
    pub rows: Vec<Row>,
    pub summary: Summary,
    pub version: String,
}

impl ExperimentReport {
    pub fn new(command: &str) -> Self {
        ExperimentReport {
            schema: SCHEMA,
            command: command.to_string(),
            parameters: BTreeMap::new(),
            rows: Vec::new(),
            summary: Summary {
                max_residual: 0.0,
                target: None,
                achieved: 0.0,
                pass: true,
            },
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    pub fn param(mut self, key: &str, v: impl ToString) -> Self {
        self.parameters.insert(key.to_string(), v.to_string());
        self
    }

    pub fn push(&mut self, row: Row) {
        self.rows.push(row);
    }

    /// Fills the summary; `pass` holds exactly when every row passed.
    pub fn finish(mut self, target: Option<f64>, achieved: f64) -> Self {
        self.summary = Summary {
            max_residual: self.rows.iter().filter_map(|r| r.residual).fold(0.0, f64::max),
            target,
            achieved,
            pass: self.rows.iter().all(|r| r.pass),
        };
        self
    }

    pub fn pass(&self) -> bool {
        self.summary.pass
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }

    /// Header plus one record per row; input and value keys become `in.<k>` / `val.<k>` columns.
    pub fn csv_table(&self) -> (Vec<String>, Vec<Vec<String>>) {
        let ins: BTreeSet<&String> = self.rows.iter().flat_map(|r| r.inputs.keys()).collect();
        let vals: BTreeSet<&String> = self.rows.iter().flat_map(|r| r.values.keys()).collect();
        let mut header: Vec<String> = ["command", "label", "pass", "residual", "tolerance"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        header.extend(ins.iter().map(|k| format!("in.{k}")));
        header.extend(vals.iter().map(|k| format!("val.{k}")));
        let cell = |v: Option<&Value>| match v {
            None | Some(Value::Null) => String::new(),
            Some(Value::String(s)) => s.clone(),
            Some(other) => other.to_string(),
        };
        let opt = |x: Option<f64>| x.map(|x| x.to_string()).unwrap_or_default();
        let records = self
            .rows
            .iter()
            .map(|r| {
                let mut rec = vec![
                    self.command.clone(),
                    r.label.clone(),
                    r.pass.to_string(),
                    opt(r.residual),
                    opt(r.tolerance),
                ];
                rec.extend(ins.iter().map(|k| cell(r.inputs.get(*k))));
                rec.extend(vals.iter().map(|k| cell(r.values.get(*k))));
                rec
            })
            .collect();
        (header, records)
    }
}

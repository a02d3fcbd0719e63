//! Report records and their JSON/CSV rendering. Map-valued fields use
//! `BTreeMap` so every rendering is byte-for-byte deterministic.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Serialize, Serializer};
use serde_json::Value;

use crate::prob::{format_rational, Rational};

/// Serializes an exact rational as a `"num/den"` string.
pub fn ser_rational<S: Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format_rational(r))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Mode {
    /// Exact rational arithmetic (no DP involved).
    #[serde(rename = "exact")]
    Exact,
    #[serde(rename = "exact-dyadic")]
    ExactDyadic,
    #[serde(rename = "float64")]
    Float64,
    #[serde(rename = "mc")]
    Mc,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub params: BTreeMap<String, Value>,
    pub mode: Mode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    pub value: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci95: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, Value>,
}

impl ExperimentReport {
    pub fn new(mode: Mode, value: Value) -> Self {
        ExperimentReport {
            params: BTreeMap::new(),
            mode,
            seed: None,
            trials: None,
            value,
            ci95: None,
            details: BTreeMap::new(),
        }
    }

    pub fn exact(value: &Rational) -> Self {
        Self::new(Mode::Exact, Value::String(format_rational(value)))
    }

    pub fn param(mut self, key: &str, v: impl Into<Value>) -> Self {
        self.params.insert(key.to_string(), v.into());
        self
    }

    pub fn detail(mut self, key: &str, v: impl Serialize) -> Self {
        self.details
            .insert(key.to_string(), serde_json::to_value(v).expect("serializable detail"));
        self
    }

    pub fn mc(mut self, seed: u64, trials: u64, ci95: (f64, f64)) -> Self {
        self.seed = Some(seed);
        self.trials = Some(trials);
        self.ci95 = Some([ci95.0, ci95.1]);
        self
    }

    pub fn to_json(&self) -> String {
        to_json_line(self)
    }

    /// One `key,value` row per scalar field; details are JSON-encoded cells.
    pub fn to_csv(&self) -> String {
        let mut rows = vec![("mode".to_string(), json_cell(&serde_json::to_value(self.mode).unwrap()))];
        for (k, v) in &self.params {
            rows.push((format!("params.{k}"), json_cell(v)));
        }
        if let Some(s) = self.seed {
            rows.push(("seed".into(), s.to_string()));
        }
        if let Some(t) = self.trials {
            rows.push(("trials".into(), t.to_string()));
        }
        rows.push(("value".into(), json_cell(&self.value)));
        if let Some([lo, hi]) = self.ci95 {
            rows.push(("ci95.lo".into(), lo.to_string()));
            rows.push(("ci95.hi".into(), hi.to_string()));
        }
        for (k, v) in &self.details {
            rows.push((format!("details.{k}"), json_cell(v)));
        }
        let mut out = String::from("key,value\n");
        for (k, v) in rows {
            writeln!(out, "{k},{v}").unwrap();
        }
        out
    }
}

/// Pretty JSON followed by a newline.
pub fn to_json_line<T: Serialize + ?Sized>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable report");
    s.push('\n');
    s
}

fn json_cell(v: &Value) -> String {
    let raw = match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    };
    csv_escape(&raw)
}

pub fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Renders a header line plus rows; cells are escaped as needed.
pub fn csv_table<S: AsRef<str>>(header: &[&str], rows: &[Vec<S>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|c| csv_escape(c.as_ref())).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

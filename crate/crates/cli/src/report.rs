//! Rendering of scalar reports and tables in the three output formats.

use serde_json::{Map, Value};

use crate::Format;

/// Ordered key/value report.
#[derive(Debug, Default)]
pub struct Report {
    fields: Vec<(String, Value)>,
}

/// Non-finite floats have no JSON representation and become `null`.
pub fn number(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

fn plain(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => "nan".to_string(),
        other => other.to_string(),
    }
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.fields.push((key.to_string(), value.into()));
        self
    }

    pub fn float(self, key: &str, x: f64) -> Self {
        self.with(key, number(x))
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Text => self
                .fields
                .iter()
                .map(|(k, v)| format!("{k}: {}\n", plain(v)))
                .collect(),
            Format::Csv => {
                let header: Vec<&str> = self.fields.iter().map(|(k, _)| k.as_str()).collect();
                let row: Vec<String> = self.fields.iter().map(|(_, v)| plain(v)).collect();
                format!("{}\n{}\n", header.join(","), row.join(","))
            }
            Format::Json => {
                let map: Map<String, Value> = self.fields.iter().cloned().collect();
                format!(
                    "{}\n",
                    serde_json::to_string_pretty(&Value::Object(map)).expect("serializable")
                )
            }
        }
    }
}

/// Rows with a fixed header. Text and CSV render identically.
#[derive(Debug)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Text | Format::Csv => {
                let mut out = self.header.join(",");
                out.push('\n');
                for row in &self.rows {
                    out.push_str(&row.iter().map(plain).collect::<Vec<_>>().join(","));
                    out.push('\n');
                }
                out
            }
            Format::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|row| {
                        Value::Object(
                            self.header
                                .iter()
                                .cloned()
                                .zip(row.iter().cloned())
                                .collect(),
                        )
                    })
                    .collect();
                format!(
                    "{}\n",
                    serde_json::to_string_pretty(&rows).expect("serializable")
                )
            }
        }
    }
}

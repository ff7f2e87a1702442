//! Tables and their CSV / JSON renderings.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::config::Format;
use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => format_number(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) => json!(v),
            Cell::Int(v) => json!(v),
            Cell::Text(s) => json!(s),
        }
    }
}

/// Shortest round-trip form, switching to exponent notation for very small
/// or very large magnitudes.
pub fn format_number(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e15).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub command: &'static str,
    /// (name, unit); unit is empty for dimensionless columns.
    pub columns: Vec<(String, &'static str)>,
    pub rows: Vec<Vec<Cell>>,
    /// Extra JSON-only fields (scalars, fit details).
    pub summary: Map<String, Value>,
}

impl Table {
    pub fn new(command: &'static str, columns: &[(&str, &'static str)]) -> Self {
        Table {
            command,
            columns: columns.iter().map(|(n, u)| (n.to_string(), *u)).collect(),
            rows: Vec::new(),
            summary: Map::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn note(&mut self, key: &str, value: impl Into<Value>) {
        self.summary.insert(key.to_string(), value.into());
    }

    pub fn header(&self) -> String {
        let names: Vec<String> = self
            .columns
            .iter()
            .map(|(n, u)| if u.is_empty() { n.clone() } else { format!("{n} ({u})") })
            .collect();
        format!("# {}", names.join(","))
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv)).expect("write to memory");
        }
        let body = String::from_utf8(w.into_inner().expect("flush to memory")).expect("utf-8");
        format!("{}\n{body}", self.header())
    }

    pub fn to_json(&self) -> String {
        let columns: Vec<Value> = self.columns.iter().map(|(n, u)| json!({ "name": n, "unit": u })).collect();
        let rows: Vec<Value> = self.rows.iter().map(|r| Value::Array(r.iter().map(Cell::json).collect())).collect();
        let mut doc = Map::new();
        doc.insert("schema_version".into(), json!(SCHEMA_VERSION));
        doc.insert("command".into(), json!(self.command));
        doc.insert("columns".into(), Value::Array(columns));
        doc.insert("rows".into(), Value::Array(rows));
        if !self.summary.is_empty() {
            doc.insert("summary".into(), Value::Object(self.summary.clone()));
        }
        let mut s = serde_json::to_string_pretty(&Value::Object(doc)).expect("json");
        s.push('\n');
        s
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }
}

/// Writes `text` to `path`, or to standard output when there is none.
pub fn emit(text: &str, path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(|e| CliError::Io(format!("stdout: {e}")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Table {
        let mut t = Table::new("demo", &[("tau", "ms"), ("label", ""), ("count", "")]);
        t.push(vec![0.5.into(), "a,b".into(), 3u64.into()]);
        t.push(vec![1.25e-27.into(), "c".into(), 4u64.into()]);
        t
    }

    #[test]
    fn csv_has_one_header_line() {
        let text = sample().to_csv();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# tau (ms),label,count");
        assert_eq!(lines[1], "0.5,\"a,b\",3");
        assert_eq!(lines[2], "1.25e-27,c,4");
        assert_eq!(lines.len(), 3);
    }

    #[test]
    fn json_carries_schema_version() {
        let v: Value = serde_json::from_str(&sample().to_json()).unwrap();
        assert_eq!(v["schema_version"], 1);
        assert_eq!(v["columns"][0]["unit"], "ms");
        assert_eq!(v["rows"][1][0].as_f64().unwrap(), 1.25e-27);
    }

    #[test]
    fn numbers_round_trip() {
        for v in [0.0, -3.5, 1e-30, 123456.789, 6.02e23, 0.1 + 0.2] {
            assert_eq!(format_number(v).parse::<f64>().unwrap(), v);
        }
    }
}

//! Table and JSON emission with provenance headers. CSV numbers use 17
//! significant digits so files diff cleanly and round-trip exactly.

use std::io::Write;

use serde_json::{json, Value};

use crate::config::{OutputFormat, ResolvedConfig};
use nodal_core::error::{Error, Result};

/// One table cell: empty, text, integer or float.
#[derive(Debug, Clone)]
pub enum Cell {
    Empty,
    Text(String),
    Int(i64),
    Float(f64),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Empty => String::new(),
            Cell::Text(s) => s.clone(),
            Cell::Int(i) => i.to_string(),
            Cell::Float(v) => format!("{v:.16e}"),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Empty => Value::Null,
            Cell::Text(s) => json!(s),
            Cell::Int(i) => json!(i),
            Cell::Float(v) => json!(v),
        }
    }
}

/// A rectangular result table.
#[derive(Debug, Clone)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

/// Payload of one command run.
pub enum Output {
    Table(Table),
    Json(Value),
}

pub fn render(output: &Output, config: &ResolvedConfig) -> String {
    let version = env!("CARGO_PKG_VERSION");
    let hash = config.hash();
    match (config.format, output) {
        (OutputFormat::Csv, Output::Table(t)) => {
            let mut s = String::new();
            s.push_str(&format!("# nodal {version}\n"));
            s.push_str(&format!("# config-hash: {hash}\n"));
            s.push_str(&format!("# command: {}\n", config.command));
            s.push_str(&t.columns.join(","));
            s.push('\n');
            for row in &t.rows {
                let cells: Vec<String> = row.iter().map(Cell::csv).collect();
                s.push_str(&cells.join(","));
                s.push('\n');
            }
            s
        }
        (OutputFormat::Json, Output::Table(t)) => {
            let rows: Vec<Value> = t
                .rows
                .iter()
                .map(|row| {
                    let mut obj = serde_json::Map::new();
                    for (name, cell) in t.columns.iter().zip(row) {
                        obj.insert(name.to_string(), cell.json());
                    }
                    Value::Object(obj)
                })
                .collect();
            let doc = json!({
                "version": version,
                "config_hash": hash,
                "command": config.command,
                "rows": rows,
            });
            serde_json::to_string_pretty(&doc).expect("table serializes") + "\n"
        }
        (_, Output::Json(value)) => {
            let doc = json!({
                "version": version,
                "config_hash": hash,
                "command": config.command,
                "result": value,
            });
            serde_json::to_string_pretty(&doc).expect("value serializes") + "\n"
        }
    }
}

pub fn write_rendered(text: &str, out: &Option<String>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Error::Domain(format!("cannot write {path}: {e}"))),
        None => {
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| Error::Domain(format!("stdout: {e}")))?;
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_floats_roundtrip_exactly() {
        let v = std::f64::consts::PI * 1e-7;
        let cell = Cell::Float(v);
        let parsed: f64 = cell.csv().parse().unwrap();
        assert_eq!(parsed, v);
    }
}

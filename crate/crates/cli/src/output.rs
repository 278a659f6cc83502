use std::io::Write;

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::CliError;

pub const TOOL: &str = "sobolev-gauge";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// One run's artifacts: a fixed-column table plus an optional summary.
///
/// Both renderings carry the tool name, version, seed and the config echo.
/// Nothing time-dependent is written, so reruns are byte-identical.
#[derive(Debug, Clone)]
pub struct Report {
    pub command: &'static str,
    pub seed: u64,
    pub config: Value,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
    pub summary: Option<Value>,
}

pub fn value<T: Serialize>(v: T) -> Value {
    serde_json::to_value(v).expect("report values serialize")
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Array(items) => items.iter().map(cell).collect::<Vec<_>>().join(" "),
        other => other.to_string(),
    }
}

impl Report {
    pub fn new(command: &'static str, seed: u64, config: Value, columns: Vec<&'static str>) -> Report {
        Report {
            command,
            seed,
            config,
            columns,
            rows: Vec::new(),
            summary: None,
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// `#`-prefixed header lines, then a CSV table with a header row.
    pub fn write_csv(&self, w: &mut dyn Write) -> Result<(), CliError> {
        let io = |e: std::io::Error| CliError::Io("<output>".into(), e);
        writeln!(w, "# tool: {TOOL}").map_err(io)?;
        writeln!(w, "# version: {}", sobolev_gauge::VERSION).map_err(io)?;
        writeln!(w, "# command: {}", self.command).map_err(io)?;
        writeln!(w, "# seed: {}", self.seed).map_err(io)?;
        writeln!(w, "# config: {}", self.config).map_err(io)?;
        if let Some(s) = &self.summary {
            writeln!(w, "# summary: {s}").map_err(io)?;
        }
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(&self.columns).map_err(CliError::Csv)?;
        for row in &self.rows {
            csv.write_record(row.iter().map(cell)).map_err(CliError::Csv)?;
        }
        csv.flush().map_err(io)
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let obj: Map<String, Value> = self.columns.iter().map(|c| c.to_string()).zip(r.iter().cloned()).collect();
                Value::Object(obj)
            })
            .collect();
        let mut doc = json!({
            "tool": TOOL,
            "version": sobolev_gauge::VERSION,
            "command": self.command,
            "seed": self.seed,
            "config": self.config,
            "columns": self.columns,
            "rows": rows,
        });
        if let Some(s) = &self.summary {
            doc["summary"] = s.clone();
        }
        doc
    }

    pub fn write_json(&self, w: &mut dyn Write) -> Result<(), CliError> {
        let io = |e: std::io::Error| CliError::Io("<output>".into(), e);
        serde_json::to_writer_pretty(&mut *w, &self.to_json()).map_err(|e| CliError::Io("<output>".into(), e.into()))?;
        writeln!(w).map_err(io)
    }

    pub fn write(&self, format: Format, w: &mut dyn Write) -> Result<(), CliError> {
        match format {
            Format::Csv => self.write_csv(w),
            Format::Json => self.write_json(w),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        let mut r = Report::new("demo", 7, json!({"a": 1}), vec!["x", "v", "ok"]);
        r.push(vec![json!([0.5, -1.0]), value(sobolev_gauge::Extended::INFINITY), json!(true)]);
        r.push(vec![json!([1, 2]), json!(0.25), Value::Null]);
        r
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        sample().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[3], "# seed: 7");
        assert_eq!(lines[4], r#"# config: {"a":1}"#);
        assert_eq!(&lines[5..], ["x,v,ok", "0.5 -1.0,+inf,true", "1 2,0.25,"]);
    }

    #[test]
    fn json_mirrors_columns() {
        let doc = sample().to_json();
        assert_eq!(doc["rows"][0]["v"], "+inf");
        assert_eq!(doc["rows"][1]["v"], 0.25);
        assert_eq!(doc["seed"], 7);
        assert_eq!(doc["version"], sobolev_gauge::VERSION);
    }
}

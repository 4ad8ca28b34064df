//! Tables written as CSV with `#` metadata lines, or as the equivalent JSON.

use std::io::Write;

use serde_json::{Map, Value};

use crate::config::Format;
use crate::error::{domain, Result};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub metadata: Vec<(String, Value)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

/// JSON has no NaN or infinity; those become null.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x)
        .map(Value::Number)
        .unwrap_or(Value::Null)
}

fn cell_text(v: &Value) -> String {
    match v {
        Value::Null => "NaN".to_string(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            metadata: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.metadata.push((key.to_string(), value.into()));
        self
    }

    pub fn meta_num(&mut self, key: &str, value: f64) -> &mut Self {
        self.meta(key, num(value))
    }

    pub fn push(&mut self, row: Vec<Value>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(domain(format!(
                "row has {} cells for {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn push_nums(&mut self, row: &[f64]) -> Result<()> {
        self.push(row.iter().map(|&x| num(x)).collect())
    }

    pub fn metadata_value(&self, key: &str) -> Option<&Value> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Value>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| &r[i]).collect())
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let io = |e: std::io::Error| domain(format!("write failed: {e}"));
        for (k, v) in &self.metadata {
            let text = match v {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            writeln!(w, "# {k}: {text}").map_err(io)?;
        }
        let mut csv = csv::Writer::from_writer(w);
        let err = |e: csv::Error| domain(format!("write failed: {e}"));
        csv.write_record(&self.columns).map_err(err)?;
        for row in &self.rows {
            csv.write_record(row.iter().map(cell_text)).map_err(err)?;
        }
        csv.flush().map_err(io)
    }

    pub fn to_json(&self) -> Value {
        let meta: Map<String, Value> = self.metadata.iter().cloned().collect();
        let mut obj = Map::new();
        obj.insert("metadata".into(), Value::Object(meta));
        obj.insert(
            "columns".into(),
            self.columns.iter().map(|c| Value::String(c.clone())).collect(),
        );
        obj.insert(
            "rows".into(),
            self.rows.iter().map(|r| Value::Array(r.clone())).collect(),
        );
        Value::Object(obj)
    }

    pub fn write_json<W: Write>(&self, mut w: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut w, &self.to_json()).map_err(|e| domain(format!("write failed: {e}")))?;
        writeln!(w).map_err(|e| domain(format!("write failed: {e}")))
    }

    pub fn write<W: Write>(&self, format: Format, w: W) -> Result<()> {
        match format {
            Format::Csv => self.write_csv(w),
            Format::Json => self.write_json(w),
        }
    }

    pub fn render(&self, format: Format) -> Result<String> {
        let mut buf = Vec::new();
        self.write(format, &mut buf)?;
        Ok(String::from_utf8(buf).expect("tables are UTF-8"))
    }
}

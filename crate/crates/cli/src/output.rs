use std::io::Write;
use std::path::Path;

use clap::ValueEnum;
use serde_json::{json, Map, Value};

use crate::error::CliError;

/// Bumped whenever a field is renamed or removed.
pub const SCHEMA_VERSION: u32 = 1;

pub type Row = Map<String, Value>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Default)]
pub struct Report {
    pub params: Row,
    pub method: String,
    pub results: Vec<Row>,
    /// Run-level values that do not fit a row; JSON only.
    pub extras: Row,
    pub wall_time_s: f64,
}

impl Report {
    pub fn to_json(&self) -> Value {
        let mut meta = Row::new();
        meta.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
        meta.insert("schema_version".into(), json!(SCHEMA_VERSION));
        meta.insert("wall_time_s".into(), json!(self.wall_time_s));
        meta.insert("threads".into(), json!(rayon::current_num_threads()));
        meta.insert("timing".into(), json!("wall-clock seconds on this machine"));
        meta.extend(self.extras.clone());
        json!({
            "params": self.params,
            "method": self.method,
            "results": self.results,
            "meta": meta,
        })
    }

    /// Columns in order of first appearance across the rows.
    pub fn columns(&self) -> Vec<String> {
        let mut cols: Vec<String> = Vec::new();
        for row in &self.results {
            for k in row.keys() {
                if !cols.contains(k) {
                    cols.push(k.clone());
                }
            }
        }
        cols
    }
}

fn cell(v: Option<&Value>) -> String {
    match v {
        None | Some(Value::Null) => String::new(),
        Some(Value::String(s)) => s.clone(),
        Some(other) => other.to_string(),
    }
}

pub fn render<W: Write>(report: &Report, format: Format, out: W) -> Result<(), CliError> {
    match format {
        Format::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, &report.to_json())?;
            writeln!(out)?;
        }
        Format::Csv => {
            let cols = report.columns();
            let mut w = csv::Writer::from_writer(out);
            w.write_record(&cols)?;
            for row in &report.results {
                w.write_record(cols.iter().map(|c| cell(row.get(c))))?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

pub fn write(report: &Report, format: Format, path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(p) => render(report, format, std::io::BufWriter::new(std::fs::File::create(p)?)),
        None => render(report, format, std::io::stdout().lock()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_takes_the_union_of_columns() {
        let mut a = Row::new();
        a.insert("k".into(), json!(-1.0));
        let mut b = Row::new();
        b.insert("k".into(), json!(0.5));
        b.insert("vol".into(), json!(null));
        b.insert("source".into(), json!("model"));
        let report = Report { results: vec![a, b], ..Report::default() };
        let mut buf = Vec::new();
        render(&report, Format::Csv, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "k,vol,source\n-1.0,,\n0.5,,model\n");
    }

    #[test]
    fn json_carries_the_schema_version() {
        let v = Report::default().to_json();
        assert_eq!(v["meta"]["schema_version"], json!(SCHEMA_VERSION));
        assert!(v["results"].as_array().unwrap().is_empty());
    }
}

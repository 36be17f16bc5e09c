use std::collections::BTreeMap;
use std::io::{self, Write};

use clap::ValueEnum;
use newton_series::Real;
use serde::Serialize;
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

/// The JSON envelope shared by every command.
#[derive(Debug, Serialize)]
pub struct OutputRecord {
    pub command: &'static str,
    pub tool_version: &'static str,
    pub inputs: BTreeMap<String, Value>,
    pub precision: u32,
    pub seed: Option<u64>,
    pub status: String,
    pub result: Value,
}

impl OutputRecord {
    pub fn new(command: &'static str, precision: u32) -> Self {
        OutputRecord {
            command,
            tool_version: env!("CARGO_PKG_VERSION"),
            inputs: BTreeMap::new(),
            precision,
            seed: None,
            status: "ok".to_string(),
            result: Value::Null,
        }
    }

    pub fn input(&mut self, key: &str, value: impl Into<Value>) {
        self.inputs.insert(key.to_string(), value.into());
    }
}

/// One command's results in all three renderings.
pub struct Report {
    pub record: OutputRecord,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    pub text: Vec<String>,
}

impl Report {
    pub fn new(record: OutputRecord, header: Vec<&'static str>) -> Self {
        Report {
            record,
            header,
            rows: Vec::new(),
            text: Vec::new(),
        }
    }

    pub fn line(&mut self, text: impl Into<String>) {
        self.text.push(text.into());
    }

    pub fn emit(&self, format: Format) -> io::Result<()> {
        let stdout = io::stdout();
        let mut out = stdout.lock();
        match format {
            Format::Json => {
                serde_json::to_writer_pretty(&mut out, &self.record)?;
                writeln!(out)?;
            }
            Format::Csv => {
                let mut writer = csv::Writer::from_writer(&mut out);
                writer.write_record(&self.header)?;
                for row in &self.rows {
                    writer.write_record(row)?;
                }
                writer.flush()?;
            }
            Format::Text => {
                for line in &self.text {
                    writeln!(out, "{line}")?;
                }
            }
        }
        out.flush()
    }
}

/// Decimal digits justified by the configured precision.
pub fn real(value: &Real, precision: u32) -> String {
    value.with_precision(precision).to_decimal_string()
}

pub fn opt_real(value: Option<&Real>, precision: u32) -> String {
    value.map_or_else(String::new, |v| real(v, precision))
}

pub fn json_real(value: Option<&Real>, precision: u32) -> Value {
    value.map_or(Value::Null, |v| Value::String(real(v, precision)))
}

/// Floats for CSV cells: shortest round-trip form, `.` as separator, empty when absent.
pub fn float(value: Option<f64>) -> String {
    value.map_or_else(String::new, |v| format!("{v:e}"))
}

/// Aligns whitespace-separated columns for the text rendering.
pub fn columns(header: &[&str], rows: &[Vec<String>]) -> Vec<String> {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let render = |cells: Vec<&str>| {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let mut out = vec![render(header.to_vec())];
    out.extend(rows.iter().map(|r| render(r.iter().map(String::as_str).collect())));
    out
}

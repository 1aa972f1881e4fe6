//! Provenance header, CSV tables and JSON documents.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::ValueEnum;
use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Everything needed to rerun a command; echoed into every output.
#[derive(Debug, Clone, Serialize)]
pub struct RunSpec {
    pub command: &'static str,
    pub parameters: BTreeMap<String, Value>,
    pub output_path: Option<PathBuf>,
    pub format: Format,
    pub seed: Option<u64>,
}

/// A CSV cell.
#[derive(Debug, Clone)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Bool(bool),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        Cell::Num(v.unwrap_or(f64::NAN))
    }
}

/// Shortest round-trip decimal; `inf`, `-inf` and `nan` for the rest.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v}")
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => fmt_f64(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Table { columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// What a command produced: a flat table for CSV and a structured value
/// for JSON.
pub struct Report {
    pub table: Table,
    pub document: Value,
}

pub fn to_value<T: Serialize>(v: &T) -> Value {
    // serde_json maps non-finite floats to null.
    serde_json::to_value(v).expect("report types serialize")
}

pub fn emit(spec: &RunSpec, report: &Report) -> io::Result<()> {
    let sink: Box<dyn Write> = match &spec.output_path {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(io::stdout().lock()),
    };
    let mut out = BufWriter::new(sink);
    match spec.format {
        Format::Csv => {
            writeln!(out, "# runspec: {}", serde_json::to_string(spec)?)?;
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(&report.table.columns)?;
            for row in &report.table.rows {
                w.write_record(row.iter().map(Cell::render))?;
            }
            w.flush()?;
        }
        Format::Json => {
            let doc = serde_json::json!({ "runspec": spec, "result": report.document });
            serde_json::to_writer_pretty(&mut out, &doc)?;
            writeln!(out)?;
        }
    }
    out.flush()
}

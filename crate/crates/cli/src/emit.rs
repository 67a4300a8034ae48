//! CSV and JSON writers with provenance.

use std::io::Write;
use std::path::Path;

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::args::Format;
use crate::CliError;

/// One CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Real(f64),
    Int(i64),
    Text(String),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            // 17 significant digits
            Cell::Real(v) => format!("{v:.16e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Real)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
    }
}

/// Output of one command: a table for CSV and a JSON document.
#[derive(Debug, Clone)]
pub struct Report {
    pub command: &'static str,
    /// Effective parameters, echoed into the provenance block.
    pub config: Value,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub results: Value,
}

pub fn config_hash(config: &Value) -> String {
    let digest = Sha256::digest(config.to_string().as_bytes());
    format!("{digest:x}")
}

fn provenance(report: &Report, wall_time: f64) -> Value {
    json!({
        "artifact": "stm",
        "version": env!("CARGO_PKG_VERSION"),
        "command": report.command,
        "config": report.config,
        "config_hash": config_hash(&report.config),
        "wall_time_seconds": wall_time,
    })
}

pub fn render(report: &Report, format: Format, wall_time: f64) -> Result<Vec<u8>, CliError> {
    match format {
        Format::Json => {
            let doc = json!({
                "provenance": provenance(report, wall_time),
                "results": report.results,
            });
            let mut bytes =
                serde_json::to_vec_pretty(&doc).map_err(|e| CliError::Usage(e.to_string()))?;
            bytes.push(b'\n');
            Ok(bytes)
        }
        Format::Csv => {
            let mut out = Vec::new();
            writeln!(
                out,
                "# stm {} {}",
                env!("CARGO_PKG_VERSION"),
                report.command
            )
            .ok();
            writeln!(out, "# config_hash: {}", config_hash(&report.config)).ok();
            writeln!(out, "# config: {}", report.config).ok();
            let mut writer = csv::Writer::from_writer(out);
            writer
                .write_record(&report.columns)
                .and_then(|_| {
                    report
                        .rows
                        .iter()
                        .try_for_each(|row| writer.write_record(row.iter().map(Cell::render)))
                })
                .map_err(|e| CliError::Usage(e.to_string()))?;
            writer
                .into_inner()
                .map_err(|e| CliError::Usage(e.to_string()))
        }
    }
}

pub fn write(bytes: &[u8], path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| CliError::Io(p.to_path_buf(), e)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(bytes)
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Io("<stdout>".into(), e))
        }
    }
}

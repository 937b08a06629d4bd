//! Artifact writers: `points.csv`, `fit.json`, `report.json`.

use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use qextra_core::FitResult;

use crate::error::CliError;

/// One CSV cell.
#[derive(Debug, Clone)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Text(String),
    Bool(bool),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format_float(*v),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
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

/// Scientific notation with 17 significant digits.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

/// Rows of a pipeline's `points.csv`. Every row is prefixed with the config
/// hash and seed.
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

    pub fn to_csv(&self, hash: &str, seed: u64) -> Result<Vec<u8>, CliError> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let header: Vec<&str> = ["config_hash", "seed"].into_iter().chain(self.columns.iter().copied()).collect();
        w.write_record(&header).map_err(csv_error)?;
        for row in &self.rows {
            let cells: Vec<String> =
                [hash.to_string(), seed.to_string()].into_iter().chain(row.iter().map(Cell::render)).collect();
            w.write_record(&cells).map_err(csv_error)?;
        }
        w.into_inner().map_err(|e| CliError::Io(e.into_error()))
    }
}

fn csv_error(e: csv::Error) -> CliError {
    CliError::Io(std::io::Error::other(e))
}

/// Everything a pipeline produces.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub table: Table,
    pub fit: Option<FitResult>,
    pub report: Value,
}

fn json_bytes<T: Serialize>(v: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(v).expect("serializable");
    out.push(b'\n');
    out
}

pub fn write(dir: &Path, a: &Artifacts, hash: &str, seed: u64) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("points.csv"), a.table.to_csv(hash, seed)?)?;
    fs::write(dir.join("fit.json"), json_bytes(&a.fit))?;
    fs::write(dir.join("report.json"), json_bytes(&a.report))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, json_bytes(v))?;
    Ok(())
}

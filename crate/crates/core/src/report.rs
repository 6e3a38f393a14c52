//! Report envelope, provenance and CSV input.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TOOL: &str = "sorsketch";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Conventions every report states explicitly.
pub const NORMALIZATION: &str =
    "sors operators are scaled by sqrt(N/m) (N = transform size) so that E||Ax||^2 = ||x||^2; gaussian entries are N(0, 1/m)";
pub const DISTORTION_CONVENTION: &str =
    "distortion is |‖Ax‖² − ‖x‖²| unless a report states the multiplicative ‖Ax‖/‖x‖ convention";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub trials: Option<usize>,
    pub constant_c: f64,
    pub normalization: String,
    pub distortion_convention: String,
    /// Full argument vector, minus the program name and output/threading flags.
    pub arguments: Vec<String>,
}

impl Provenance {
    pub fn new(seed: u64, trials: Option<usize>, constant_c: f64, arguments: Vec<String>) -> Self {
        Self {
            tool: TOOL.into(),
            version: VERSION.into(),
            seed,
            trials,
            constant_c,
            normalization: NORMALIZATION.into(),
            distortion_convention: DISTORTION_CONVENTION.into(),
            arguments,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report<T: Serialize> {
    pub command: String,
    pub provenance: Provenance,
    pub result: T,
}

/// Read vectors from CSV, one per row, no header.
pub fn read_points_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path)?;
    parse_points_csv(&text)
}

pub fn parse_points_csv(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let row = record
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|e| Error::InvalidParameter(format!("row {}: {f:?}: {e}", line + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        out.push(row);
    }
    if out.is_empty() {
        return Err(Error::Empty);
    }
    Ok(out)
}

pub fn write_rows_csv(rows: &[Vec<f64>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

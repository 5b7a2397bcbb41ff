//! CSV and JSON result tables.
//!
//! A report is a list of flat rows. CSV has a header line with the row's
//! field names in declaration order; missing optional values are empty
//! cells. JSON is an array of objects with keys in the same order.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
}

impl ReportFormat {
    /// Guesses the format from a file extension, defaulting to CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => ReportFormat::Json,
            _ => ReportFormat::Csv,
        }
    }
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
        })
    }
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::parse(format!("unknown report format {other:?}"))),
        }
    }
}

/// Per-annotation diversity line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiversityRow {
    pub image_id: String,
    pub annotation_index: usize,
    pub region_diversity: f64,
    pub boundary_diversity: Option<f64>,
}

/// Serializes `rows` to bytes in `format`.
pub fn render_report<T: Serialize>(rows: &[T], format: ReportFormat) -> Result<Vec<u8>> {
    if rows.is_empty() {
        return Err(Error::EmptyReport);
    }
    match format {
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in rows {
                w.serialize(r)?;
            }
            w.into_inner().map_err(|e| Error::Io(e.into_error()))
        }
        ReportFormat::Json => {
            let mut out = serde_json::to_vec_pretty(rows)?;
            out.push(b'\n');
            Ok(out)
        }
    }
}

/// Writes `rows` to `path`. Nothing is created when `rows` is empty.
pub fn emit_report<T: Serialize>(rows: &[T], path: &Path, format: ReportFormat) -> Result<()> {
    let bytes = render_report(rows, format)?;
    std::fs::write(path, bytes)?;
    Ok(())
}

pub fn read_report<T: DeserializeOwned>(path: &Path, format: ReportFormat) -> Result<Vec<T>> {
    match format {
        ReportFormat::Csv => {
            let mut r = csv::Reader::from_path(path)?;
            r.deserialize().map(|row| row.map_err(Error::from)).collect()
        }
        ReportFormat::Json => Ok(serde_json::from_slice(&std::fs::read(path)?)?),
    }
}

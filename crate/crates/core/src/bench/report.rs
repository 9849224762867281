//! CSV and JSON emission for benchmark results. Files are written to a
//! sibling temporary path and renamed into place.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::normality::NormalityReport;
use super::GmseGrid;
use crate::error::{invalid, Error, Result};
use crate::estimators::Method;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(invalid(format!("unknown format '{other}' (expected csv or json)"))),
        }
    }
}

/// `estimator,n,cp,h,b,gmse,excluded`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub estimator: Method,
    pub n: usize,
    pub cp: f64,
    pub h: f64,
    pub b: f64,
    pub gmse: f64,
    pub excluded: usize,
}

/// `estimator,n,cp,min_gmse,h_star,b_star,trials`; the minimum and its
/// location are empty when no cell of the grid was valid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub estimator: Method,
    pub n: usize,
    pub cp: f64,
    pub min_gmse: Option<f64>,
    pub h_star: Option<f64>,
    pub b_star: Option<f64>,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct NormalityRow {
    method: Method,
    x: f64,
    y: f64,
    n: usize,
    cp: f64,
    h: f64,
    b: f64,
    trials: usize,
    excluded: usize,
    ks_stat: f64,
    ks_p: f64,
    empirical_bias: f64,
    predicted_bias_nw: f64,
    predicted_bias_ll: f64,
    level: f64,
    coverage: f64,
}

const GRID_HEADER: [&str; 7] = ["estimator", "n", "cp", "h", "b", "gmse", "excluded"];
const SUMMARY_HEADER: [&str; 7] = ["estimator", "n", "cp", "min_gmse", "h_star", "b_star", "trials"];

impl GridRow {
    pub fn from_grids(grids: &[GmseGrid]) -> Vec<Self> {
        grids
            .iter()
            .flat_map(|g| {
                g.cells.iter().map(move |c| GridRow {
                    estimator: g.estimator,
                    n: g.n,
                    cp: g.cp,
                    h: c.h,
                    b: c.b,
                    gmse: c.gmse,
                    excluded: c.excluded,
                })
            })
            .collect()
    }
}

impl SummaryRow {
    pub fn from_grids(grids: &[GmseGrid]) -> Vec<Self> {
        grids
            .iter()
            .map(|g| SummaryRow {
                estimator: g.estimator,
                n: g.n,
                cp: g.cp,
                min_gmse: g.min_gmse,
                h_star: g.argmin.map(|a| a.0),
                b_star: g.argmin.map(|a| a.1),
                trials: g.trials,
            })
            .collect()
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file_name = path
        .file_name()
        .ok_or_else(|| invalid(format!("{} is not a file path", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(file_name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp: PathBuf = path.with_file_name(tmp_name);
    let result = fs::File::create(&tmp)
        .and_then(|mut f| {
            f.write_all(bytes)?;
            f.sync_all()
        })
        .and_then(|_| fs::rename(&tmp, path));
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(io_err)
}

fn csv_bytes<T: Serialize>(rows: &[T], header: &[&str], path: &Path) -> Result<Vec<u8>> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e.into_error(),
    })
}

fn json_bytes<T: Serialize + ?Sized>(value: &T, path: &Path) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Writes every grid cell, one row per (estimator, n, cp, h, b).
pub fn emit_report(grids: &[GmseGrid], format: ReportFormat, path: &Path) -> Result<()> {
    let rows = GridRow::from_grids(grids);
    let bytes = match format {
        ReportFormat::Csv => csv_bytes(&rows, &GRID_HEADER, path)?,
        ReportFormat::Json => json_bytes(&rows, path)?,
    };
    write_atomic(path, &bytes)
}

/// Writes the grid minima, one row per (estimator, n, cp).
pub fn emit_summary(grids: &[GmseGrid], format: ReportFormat, path: &Path) -> Result<()> {
    let rows = SummaryRow::from_grids(grids);
    let bytes = match format {
        ReportFormat::Csv => csv_bytes(&rows, &SUMMARY_HEADER, path)?,
        ReportFormat::Json => json_bytes(&rows, path)?,
    };
    write_atomic(path, &bytes)
}

/// CSV carries the scalar summary; JSON also includes the standardized
/// values.
pub fn emit_normality(reports: &[NormalityReport], format: ReportFormat, path: &Path) -> Result<()> {
    let bytes = match format {
        ReportFormat::Csv => {
            let rows: Vec<NormalityRow> = reports
                .iter()
                .map(|r| NormalityRow {
                    method: r.method,
                    x: r.x,
                    y: r.y,
                    n: r.n,
                    cp: r.cp,
                    h: r.h,
                    b: r.b,
                    trials: r.trials,
                    excluded: r.excluded,
                    ks_stat: r.ks_stat,
                    ks_p: r.ks_p,
                    empirical_bias: r.empirical_bias,
                    predicted_bias_nw: r.predicted_bias_nw,
                    predicted_bias_ll: r.predicted_bias_ll,
                    level: r.level,
                    coverage: r.coverage,
                })
                .collect();
            let header = [
                "method",
                "x",
                "y",
                "n",
                "cp",
                "h",
                "b",
                "trials",
                "excluded",
                "ks_stat",
                "ks_p",
                "empirical_bias",
                "predicted_bias_nw",
                "predicted_bias_ll",
                "level",
                "coverage",
            ];
            csv_bytes(&rows, &header, path)?
        }
        ReportFormat::Json => json_bytes(reports, path)?,
    };
    write_atomic(path, &bytes)
}

//! Dataset CSV files: header `x,t,delta`, optionally followed by latent
//! `y,c` columns.

use std::fs;
use std::path::Path;

use crate::bench::write_atomic;
use crate::error::{Error, Result};
use crate::simulate::SimDataset;
use crate::survival::CensoredObservation;

pub fn write_dataset(ds: &SimDataset, with_latent: bool, path: &Path) -> Result<()> {
    let mut out = String::with_capacity(ds.observations.len() * 48);
    let latent = if with_latent { ds.latent.as_ref() } else { None };
    out.push_str(if latent.is_some() { "x,t,delta,y,c\n" } else { "x,t,delta\n" });
    for (i, o) in ds.observations.iter().enumerate() {
        match latent {
            Some(l) => out.push_str(&format!("{},{},{},{},{}\n", o.x, o.t, o.delta, l.y[i], l.c[i])),
            None => out.push_str(&format!("{},{},{}\n", o.x, o.t, o.delta)),
        }
    }
    write_atomic(path, out.as_bytes())
}

/// Reads `x,t,delta` columns by header name; extra columns are ignored.
pub fn read_dataset(path: &Path) -> Result<Vec<CensoredObservation>> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_dataset(&text, path)
}

pub fn parse_dataset(text: &str, path: &Path) -> Result<Vec<CensoredObservation>> {
    let parse_err = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| parse_err(1, format!("missing column '{name}'")))
    };
    let (ix, it, id) = (col("x")?, col("t")?, col("delta")?);

    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let field = |k: usize, name: &str| -> Result<f64> {
            let raw = record.get(k).unwrap_or("");
            raw.parse::<f64>()
                .map_err(|_| parse_err(line, format!("column '{name}': cannot parse '{raw}' as a number")))
        };
        let x = field(ix, "x")?;
        let t = field(it, "t")?;
        let delta = match record.get(id).unwrap_or("") {
            "1" => 1,
            "0" => 0,
            other => return Err(parse_err(line, format!("column 'delta': expected 0 or 1, got '{other}'"))),
        };
        let obs = CensoredObservation { x, t, delta };
        obs.validate().map_err(|e| parse_err(line, e.to_string()))?;
        out.push(obs);
    }
    if out.is_empty() {
        return Err(parse_err(1, "dataset has no rows".into()));
    }
    Ok(out)
}

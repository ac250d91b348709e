//! CSV rows and atomic file emission.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

/// A row type with a fixed column order.
pub trait CsvRow: Serialize {
    const HEADER: &'static [&'static str];
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StalenessRow {
    pub mode: &'static str,
    pub scheme: String,
    pub n: usize,
    pub scaling: String,
    pub lambda0: f64,
    pub mu: f64,
    pub c: f64,
    pub seed: u64,
    pub horizon: f64,
    pub burn_in: f64,
    pub mean_staleness: f64,
    pub max_staleness: f64,
    pub lemma1_bound: f64,
    pub thm2_fixed_point: f64,
    pub thm2_printed: f64,
}

impl CsvRow for StalenessRow {
    const HEADER: &'static [&'static str] = &[
        "mode",
        "scheme",
        "n",
        "scaling",
        "lambda0",
        "mu",
        "c",
        "seed",
        "horizon",
        "burn_in",
        "mean_staleness",
        "max_staleness",
        "lemma1_bound",
        "thm2_fixed_point",
        "thm2_printed",
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LossRow {
    pub mode: &'static str,
    pub scheme: String,
    pub n: usize,
    pub scaling: String,
    pub lambda0: f64,
    pub seed: u64,
    pub predictor: String,
    pub m: usize,
    pub epoch: u64,
    pub mean_loss: f64,
    pub max_loss: f64,
    pub sim_time: f64,
    pub diverged: bool,
}

impl CsvRow for LossRow {
    const HEADER: &'static [&'static str] = &[
        "mode",
        "scheme",
        "n",
        "scaling",
        "lambda0",
        "seed",
        "predictor",
        "m",
        "epoch",
        "mean_loss",
        "max_loss",
        "sim_time",
        "diverged",
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsRow {
    pub mode: &'static str,
    pub n: usize,
    pub scaling: String,
    pub lambda0: f64,
    pub lambda: f64,
    pub mu: f64,
    pub c: f64,
    pub lemma1_bound: f64,
    pub harmonic_exact: f64,
    pub harmonic_approx: f64,
    pub harmonic_gap: f64,
    pub thm2_fixed_point: f64,
    pub thm2_printed: f64,
}

impl CsvRow for BoundsRow {
    const HEADER: &'static [&'static str] = &[
        "mode",
        "n",
        "scaling",
        "lambda0",
        "lambda",
        "mu",
        "c",
        "lemma1_bound",
        "harmonic_exact",
        "harmonic_approx",
        "harmonic_gap",
        "thm2_fixed_point",
        "thm2_printed",
    ];
}

/// Serializes `rows` under the row type's header.
pub fn write_csv<R: CsvRow, W: Write>(rows: &[R], out: W) -> Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(R::HEADER)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `rows` to `path`, replacing any previous file atomically.
pub fn emit_csv<R: CsvRow>(rows: &[R], path: &Path) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    write_csv(rows, tmp.as_file_mut()).map_err(|e| Error::csv(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

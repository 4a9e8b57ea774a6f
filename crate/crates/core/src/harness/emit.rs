//! CSV and JSON result files.
//!
//! CSV floats use 17 significant digits (`{:.16e}`); missing values are empty
//! fields. JSON uses the shortest representation that round-trips exactly.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use super::sweep::ResultRecord;
use super::validate::ValidationRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(format!("unknown format `{other}`, expected csv or json")),
        }
    }
}

pub const RESULT_HEADER: [&str; 13] = [
    "scheme",
    "scenario",
    "sweep_name",
    "sweep_value",
    "p_fa",
    "pd_mean",
    "pd_min",
    "pd_max",
    "min_energy_mean_w",
    "sdr_bound_mean_w",
    "feasible_rate",
    "rank_one_rate",
    "wall_ms",
];

pub const VALIDATION_HEADER: [&str; 13] = [
    "case",
    "scenario",
    "point_index",
    "snr",
    "p_fa",
    "energy_w",
    "pd_closed",
    "pd_empirical",
    "pd_tol",
    "pfa_empirical",
    "pfa_tol",
    "trials",
    "pass",
];

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// A record type with a fixed CSV layout.
pub trait CsvRow: Serialize {
    fn header() -> &'static [&'static str];
    fn fields(&self) -> Vec<String>;
}

impl CsvRow for ResultRecord {
    fn header() -> &'static [&'static str] {
        &RESULT_HEADER
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.scheme.name().to_string(),
            self.scenario.clone(),
            self.sweep_name.clone(),
            fmt_f64(self.sweep_value),
            fmt_f64(self.p_fa),
            fmt_opt(self.pd_mean),
            fmt_opt(self.pd_min),
            fmt_opt(self.pd_max),
            fmt_opt(self.min_energy_mean_w),
            fmt_opt(self.sdr_bound_mean_w),
            fmt_f64(self.feasible_rate),
            fmt_opt(self.rank_one_rate),
            fmt_f64(self.wall_ms),
        ]
    }
}

impl CsvRow for ValidationRecord {
    fn header() -> &'static [&'static str] {
        &VALIDATION_HEADER
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.case.clone(),
            self.scenario.label().to_string(),
            self.point_index.to_string(),
            fmt_f64(self.snr),
            fmt_f64(self.p_fa),
            fmt_f64(self.energy_w),
            fmt_f64(self.pd_closed),
            fmt_f64(self.pd_empirical),
            fmt_f64(self.pd_tol),
            fmt_f64(self.pfa_empirical),
            fmt_f64(self.pfa_tol),
            self.trials.to_string(),
            self.pass.to_string(),
        ]
    }
}

pub fn write_csv<R: CsvRow, W: Write>(records: &[R], mut out: W) -> io::Result<()> {
    writeln!(out, "{}", R::header().join(","))?;
    for r in records {
        writeln!(out, "{}", r.fields().join(","))?;
    }
    out.flush()
}

pub fn write_json<R: CsvRow, W: Write>(records: &[R], mut out: W) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut out, records)?;
    writeln!(out)?;
    out.flush()
}

pub fn write_records<R: CsvRow, W: Write>(records: &[R], out: W, format: OutputFormat) -> io::Result<()> {
    match format {
        OutputFormat::Csv => write_csv(records, out),
        OutputFormat::Json => write_json(records, out),
    }
}

/// Writes `records` to `path`, or to stdout when `path` is `None`.
pub fn emit_results<R: CsvRow>(records: &[R], path: Option<&Path>, format: OutputFormat) -> io::Result<()> {
    match path {
        Some(p) => write_records(records, BufWriter::new(File::create(p)?), format),
        None => write_records(records, io::stdout().lock(), format),
    }
}

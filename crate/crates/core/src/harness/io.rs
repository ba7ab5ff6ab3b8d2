//! CSV readers and writers.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::{c, CMat};

/// 17 significant digits: parses back to the identical f64.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| io_err(path, e))
}

/// One row per matrix row, entries as `re,im` pairs.
pub fn covariance_csv(r: &CMat) -> String {
    let mut out = String::new();
    for i in 0..r.nrows() {
        let row: Vec<String> = (0..r.ncols())
            .flat_map(|j| [fmt_f64(r[(i, j)].re), fmt_f64(r[(i, j)].im)])
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn parse_covariance_csv(text: &str) -> Result<CMat> {
    let field = "tracking_covariance";
    let rows: Vec<Vec<f64>> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::config(field, format!("`{v}` is not a number")))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let m = rows.len();
    if m == 0 || rows.iter().any(|r| r.len() != 2 * m) {
        return Err(Error::config(field, "expected M rows of 2M values (re,im pairs)"));
    }
    Ok(CMat::from_fn(m, m, |i, j| c(rows[i][2 * j], rows[i][2 * j + 1])))
}

pub fn write_covariance(path: &Path, r: &CMat) -> Result<()> {
    write_text(path, &covariance_csv(r))
}

pub fn read_covariance(path: &Path) -> Result<CMat> {
    parse_covariance_csv(&read_text(path)?)
}

/// `angle_deg,power_db` with power relative to 1 (10 log10 P).
pub fn beampattern_csv(angles_deg: &[f64], power: &[f64]) -> String {
    let mut out = String::from("angle_deg,power_db\n");
    for (a, p) in angles_deg.iter().zip(power) {
        let db = if *p > 0.0 { 10.0 * p.log10() } else { f64::NEG_INFINITY };
        let _ = writeln!(out, "{},{}", fmt_f64(*a), fmt_f64(db));
    }
    out
}

/// One point of an experiment curve.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub sweep: f64,
    pub empirical: Option<f64>,
    pub ci_halfwidth: Option<f64>,
    pub theory: Option<f64>,
    pub trials: u64,
    pub seed: u64,
}

pub const RESULTS_HEADER: &str = "sweep,empirical,ci_halfwidth,theory,trials,seed";

pub fn results_csv(rows: &[ResultRow]) -> String {
    let mut out = format!("{RESULTS_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt_f64(r.sweep),
            fmt_opt(r.empirical),
            fmt_opt(r.ci_halfwidth),
            fmt_opt(r.theory),
            r.trials,
            r.seed
        );
    }
    out
}

pub fn parse_results_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(RESULTS_HEADER) {
        return Err(Error::Validation("missing results header".into()));
    }
    let opt = |s: &str| -> Result<Option<f64>> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse()
                .map(Some)
                .map_err(|_| Error::Validation(format!("bad number `{s}`")))
        }
    };
    lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 6 {
                return Err(Error::Validation(format!("expected 6 fields in `{l}`")));
            }
            let int = |s: &str| s.parse::<u64>().map_err(|_| Error::Validation(format!("bad integer `{s}`")));
            Ok(ResultRow {
                sweep: opt(f[0])?.ok_or_else(|| Error::Validation("empty sweep value".into()))?,
                empirical: opt(f[1])?,
                ci_halfwidth: opt(f[2])?,
                theory: opt(f[3])?,
                trials: int(f[4])?,
                seed: int(f[5])?,
            })
        })
        .collect()
}

/// `threshold,error_prob`, plus an `eta` column for two-threshold sweeps.
pub fn calibration_csv(grid: &[f64], error_prob: &[f64], eta: Option<&[f64]>) -> String {
    let mut out = String::from(if eta.is_some() {
        "threshold,error_prob,eta\n"
    } else {
        "threshold,error_prob\n"
    });
    for (i, (g, p)) in grid.iter().zip(error_prob).enumerate() {
        match eta {
            Some(e) => {
                let _ = writeln!(out, "{},{},{}", fmt_f64(*g), fmt_f64(*p), fmt_f64(e[i]));
            }
            None => {
                let _ = writeln!(out, "{},{}", fmt_f64(*g), fmt_f64(*p));
            }
        }
    }
    out
}

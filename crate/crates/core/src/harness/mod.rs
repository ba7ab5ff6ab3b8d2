//! Experiment orchestration: configuration, scenes, Monte Carlo runs and
//! CSV output.

pub mod config;
pub mod detection;
pub mod estimation;
pub mod io;
pub mod scene;

use std::path::{Path, PathBuf};
use std::time::Duration;

pub use config::{ConfigMap, DetectorId, EstimatorId, RadarSceneConfig, Sweep, SweepVariable};
pub use detection::run_detection_experiment;
pub use estimation::run_estimation_experiment;
pub use io::ResultRow;
pub use scene::Scene;

use crate::error::{Error, Result};

/// 95% normal quantile.
pub const Z95: f64 = 1.959963984540054;

/// One curve: a detector's error probability or an estimator's MSE.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub series: String,
    pub sweep_variable: SweepVariable,
    pub rows: Vec<ResultRow>,
    /// Wall time of the whole run (not written to CSV).
    pub runtime: Duration,
}

/// Half-width of the Wilson score interval at 95%.
pub fn wilson_halfwidth(successes: u64, trials: u64) -> f64 {
    if trials == 0 {
        return f64::NAN;
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    Z95 / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt()
}

/// Sample mean and the 95% half-width 1.96 s / sqrt(n).
pub fn mean_ci(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, Z95 * (var / n).sqrt())
}

/// Config of one sweep point.
pub fn apply_sweep_value(
    base: &RadarSceneConfig,
    variable: SweepVariable,
    value: f64,
    detector: Option<DetectorId>,
) -> Result<RadarSceneConfig> {
    let mut cfg = base.clone();
    match variable {
        SweepVariable::Snr => cfg.snr_db = value,
        SweepVariable::Angle => cfg.theta_deg = value,
        SweepVariable::Antennas => {
            if !(value >= 1.0) || value.fract() != 0.0 {
                return Err(Error::config("sweep", format!("`{value}` is not an antenna count")));
            }
            cfg.n = value as usize;
        }
        SweepVariable::Threshold => match detector {
            Some(DetectorId::Glrt) => cfg.glrt_threshold = config::GlrtThreshold::Value(value),
            Some(DetectorId::Rao) => cfg.rao_threshold = config::RaoThreshold::Value(value),
            Some(DetectorId::GlrtLos) => cfg.glrt_los_threshold = value,
            _ => {
                return Err(Error::config(
                    "sweep",
                    "threshold sweeps apply to glrt, rao or glrt-los",
                ))
            }
        },
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Output path of a series: `out` itself for a single series, otherwise
/// `<stem>_<series>.<ext>` next to it.
pub fn series_path(out: &Path, series: &str, count: usize) -> PathBuf {
    if count == 1 {
        return out.to_path_buf();
    }
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("results");
    let name = match out.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}_{series}.{ext}"),
        None => format!("{stem}_{series}"),
    };
    out.with_file_name(name)
}

pub fn emit_results(result: &ExperimentResult, path: &Path) -> Result<()> {
    io::write_text(path, &io::results_csv(&result.rows))
}

//! Channel-estimation experiments.

use std::time::Instant;

use super::config::{ChannelModel, EstimatorId, RadarSceneConfig, Sweep, SweepVariable};
use super::io::ResultRow;
use super::scene::Scene;
use super::{apply_sweep_value, mean_ci, ExperimentResult};
use crate::channel::PriMode;
use crate::error::{Error, Result};
use crate::estimators::{blind_los_estimate, mle_los, mle_nlos, squared_error, squared_error_scalar, PathGain};
use crate::exec::try_map_trials;
use crate::los_fit::AngleGrid;
use crate::theory::mse_theory_waveform;

pub fn default_estimators(channel: ChannelModel) -> Vec<EstimatorId> {
    match channel {
        ChannelModel::Nlos => vec![EstimatorId::MlSearch, EstimatorId::MlTrack],
        ChannelModel::Los => vec![EstimatorId::MlSearch, EstimatorId::MlTrack, EstimatorId::Blind],
    }
}

/// Names of the curves an estimator produces: one for NLoS (channel
/// matrix), two for LoS (angle in degrees², then path gain).
pub fn series_names(id: EstimatorId, channel: ChannelModel) -> Vec<String> {
    match channel {
        ChannelModel::Nlos => vec![id.as_str().to_string()],
        ChannelModel::Los => vec![format!("{}-theta", id.as_str()), format!("{}-alpha", id.as_str())],
    }
}

fn mode_of(id: EstimatorId) -> PriMode {
    match id {
        EstimatorId::MlTrack => PriMode::Track,
        _ => PriMode::Search,
    }
}

/// Squared errors of one trial, in `series_names` order.
fn trial_errors(scene: &Scene, id: EstimatorId, index: u64, grid: &AngleGrid) -> Result<Vec<f64>> {
    let trial = scene.draw(index, Some(mode_of(id)))?;
    let x = scene.waveform(trial.mode);
    match scene.cfg.channel {
        ChannelModel::Nlos => {
            let est = mle_nlos(&trial.y, x)?;
            Ok(vec![squared_error(&est.g_hat, &trial.g)?])
        }
        ChannelModel::Los => {
            let alpha = trial.alpha.expect("LoS trial carries its gain");
            let theta = scene.cfg.theta_deg;
            let est = match id {
                EstimatorId::Blind => blind_los_estimate(&trial.y, scene.waveforms.total_power, scene.n0(), grid, &scene.bs)?,
                _ => mle_los(&trial.y, x, grid, &scene.radar, &scene.bs)?,
            };
            let gain_error = match est.gain {
                PathGain::Complex(a) => (a - alpha).norm_sqr(),
                PathGain::Power(p) => squared_error_scalar(p, alpha.norm_sqr()),
            };
            Ok(vec![squared_error_scalar(est.theta_hat, theta), gain_error])
        }
    }
}

/// Monte Carlo mean squared error of each estimator over a sweep, with the
/// closed-form NLoS MSE as theory.
pub fn run_estimation_experiment(
    base: &RadarSceneConfig,
    estimators: &[EstimatorId],
    sweep: Option<&Sweep>,
) -> Result<Vec<ExperimentResult>> {
    let start = Instant::now();
    if estimators.is_empty() {
        return Err(Error::config("estimators", "no estimator selected"));
    }
    if base.channel == ChannelModel::Nlos && estimators.contains(&EstimatorId::Blind) {
        return Err(Error::config("estimators", "`blind` needs channel = los"));
    }
    let default_sweep = Sweep::new(SweepVariable::Snr, vec![base.snr_db]);
    let sweep = sweep.unwrap_or(&default_sweep);
    if matches!(sweep.variable, SweepVariable::Threshold) {
        return Err(Error::config("sweep", "estimation sweeps are over snr, angle or n"));
    }
    let names: Vec<Vec<String>> = estimators.iter().map(|&e| series_names(e, base.channel)).collect();
    let mut rows: Vec<Vec<Vec<ResultRow>>> = names.iter().map(|n| vec![Vec::new(); n.len()]).collect();
    let mut scene: Option<Scene> = None;
    for &value in &sweep.values {
        let cfg = apply_sweep_value(base, sweep.variable, value, None)?;
        let s = match &scene {
            None => Scene::prepare(&cfg)?,
            Some(prev) => prev.retarget(&cfg)?,
        };
        let grid = AngleGrid {
            step_deg: cfg.angle_step_deg,
            ..AngleGrid::default()
        };
        for (k, &id) in estimators.iter().enumerate() {
            let errors: Vec<Vec<f64>> = try_map_trials(cfg.execution, cfg.trials, |i| trial_errors(&s, id, i, &grid))?;
            let theory = match cfg.channel {
                ChannelModel::Nlos => Some(mse_theory_waveform(s.waveform(mode_of(id)), s.n0(), cfg.n)?.mse),
                ChannelModel::Los => None,
            };
            for (j, series_rows) in rows[k].iter_mut().enumerate() {
                let column: Vec<f64> = errors.iter().map(|e| e[j]).collect();
                let (mean, half) = mean_ci(&column);
                series_rows.push(ResultRow {
                    sweep: value,
                    empirical: Some(mean),
                    ci_halfwidth: Some(half),
                    theory: if j == 0 { theory } else { None },
                    trials: cfg.trials,
                    seed: cfg.seed,
                });
            }
        }
        scene = Some(s);
    }
    let runtime = start.elapsed();
    let mut out = Vec::new();
    for (series, series_rows) in names.into_iter().zip(rows) {
        for (name, rows) in series.into_iter().zip(series_rows) {
            out.push(ExperimentResult {
                series: name,
                sweep_variable: sweep.variable,
                rows,
                runtime,
            });
        }
    }
    Ok(out)
}

/// Closed-form NLoS channel-estimation MSE over a sweep.
pub fn theory_curves(
    base: &RadarSceneConfig,
    estimators: &[EstimatorId],
    sweep: Option<&Sweep>,
) -> Result<Vec<ExperimentResult>> {
    let start = Instant::now();
    if base.channel != ChannelModel::Nlos || estimators.contains(&EstimatorId::Blind) {
        return Err(Error::config(
            "estimators",
            "closed-form MSE exists only for ml-search and ml-track with channel = nlos",
        ));
    }
    let default_sweep = Sweep::new(SweepVariable::Snr, vec![base.snr_db]);
    let sweep = sweep.unwrap_or(&default_sweep);
    let mut rows: Vec<Vec<ResultRow>> = vec![Vec::new(); estimators.len()];
    let mut scene: Option<Scene> = None;
    for &value in &sweep.values {
        let cfg = apply_sweep_value(base, sweep.variable, value, None)?;
        let s = match &scene {
            None => Scene::prepare(&cfg)?,
            Some(prev) => prev.retarget(&cfg)?,
        };
        for (k, &id) in estimators.iter().enumerate() {
            rows[k].push(ResultRow {
                sweep: value,
                empirical: None,
                ci_halfwidth: None,
                theory: Some(mse_theory_waveform(s.waveform(mode_of(id)), s.n0(), cfg.n)?.mse),
                trials: 0,
                seed: cfg.seed,
            });
        }
        scene = Some(s);
    }
    let runtime = start.elapsed();
    Ok(estimators
        .iter()
        .zip(rows)
        .map(|(id, rows)| ExperimentResult {
            series: id.as_str().to_string(),
            sweep_variable: sweep.variable,
            rows,
            runtime,
        })
        .collect())
}

//! Detection experiments: mode sampling, detector statistics and error tallies.

use std::time::Instant;

use super::config::{
    ChannelModel, DetectorId, EdThresholds, GlrtThreshold, RadarSceneConfig, RaoThreshold, Sweep, SweepVariable,
};
use super::io::ResultRow;
use super::scene::Scene;
use super::{apply_sweep_value, wilson_halfwidth, ExperimentResult};
use crate::calibration::{self, ThresholdSweep};
use crate::detectors::{
    default_energy_thresholds, energy_decision, energy_statistic, glrt_los, glrt_optimal_threshold, rao_statistic,
    Decision, GlrtNlos, RaoSpecial,
};
use crate::error::{Error, Result};
use crate::exec::{try_map_trials, Execution};
use crate::los_fit::AngleGrid;
use crate::rng::{mix, Stream};
use crate::theory::{rao_special_laws, EdTheory, GlrtTheory};
use crate::CMat;

/// Decision rule applied to a scalar statistic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rule {
    /// H1 iff statistic > γ.
    Above(f64),
    /// H0 iff γ <= statistic <= η.
    Band(f64, f64),
}

impl Rule {
    pub fn decide(self, statistic: f64) -> Decision {
        match self {
            Rule::Above(g) => {
                if statistic > g {
                    Decision::Track
                } else {
                    Decision::Search
                }
            }
            Rule::Band(g, e) => energy_decision(statistic, g, e),
        }
    }

    /// (γ, η) for reporting.
    pub fn thresholds(self) -> (f64, Option<f64>) {
        match self {
            Rule::Above(g) => (g, None),
            Rule::Band(g, e) => (g, Some(e)),
        }
    }
}

/// Per-scene precomputation shared by all trials.
pub struct Engine<'a> {
    pub scene: &'a Scene,
    glrt: Option<GlrtNlos>,
    rao_special: Option<RaoSpecial>,
    grid: AngleGrid,
}

impl<'a> Engine<'a> {
    pub fn new(scene: &'a Scene, detectors: &[DetectorId]) -> Result<Self> {
        let w = &scene.waveforms;
        let n0 = scene.n0();
        let needs = |ids: &[DetectorId]| detectors.iter().any(|d| ids.contains(d));
        let glrt = if needs(&[DetectorId::Glrt, DetectorId::GlrtZero]) {
            Some(GlrtNlos::with_threshold(&w.x0, &w.x1, n0, 0.0)?)
        } else {
            None
        };
        let rao_special = if needs(&[DetectorId::Rao]) && scene.cfg.m == scene.cfg.n {
            Some(RaoSpecial::new(&w.x0, w.total_power, n0)?)
        } else {
            None
        };
        Ok(Self {
            scene,
            glrt,
            rao_special,
            grid: AngleGrid {
                step_deg: scene.cfg.angle_step_deg,
                ..AngleGrid::default()
            },
        })
    }

    pub fn statistic(&self, id: DetectorId, y: &CMat) -> Result<f64> {
        let scene = self.scene;
        let w = &scene.waveforms;
        match id {
            DetectorId::Glrt | DetectorId::GlrtZero => Ok(self.glrt.as_ref().expect("GLRT prepared").statistic(y)),
            DetectorId::Rao => match &self.rao_special {
                Some(r) => Ok(r.statistic(y)),
                None => rao_statistic(y, &w.x0, w.total_power, scene.n0()),
            },
            DetectorId::Ed => Ok(energy_statistic(y)),
            DetectorId::GlrtLos => Ok(glrt_los(y, &w.x0, &w.x1, scene.n0(), 0.0, &self.grid, &scene.radar, &scene.bs)?
                .detection
                .statistic),
        }
    }
}

fn check_channel(id: DetectorId, cfg: &RadarSceneConfig) -> Result<()> {
    let ok = match id {
        DetectorId::Ed | DetectorId::GlrtLos => cfg.channel == ChannelModel::Los,
        _ => cfg.channel == ChannelModel::Nlos,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::config(
            "detectors",
            format!("`{}` does not apply to the configured channel", id.as_str()),
        ))
    }
}

/// Theory-optimal Rao threshold applies to M = N with a known NLoS channel.
fn rao_theory_available(scene: &Scene) -> bool {
    scene.cfg.m == scene.cfg.n && scene.cfg.channel == ChannelModel::Nlos && scene.cfg.fixed_channel
}

/// Resolve the decision rule of a detector at one sweep point.
pub fn resolve_rule(id: DetectorId, scene: &Scene, calibration_seed: u64, exec: Execution) -> Result<Rule> {
    let cfg = &scene.cfg;
    Ok(match id {
        DetectorId::Glrt => Rule::Above(match cfg.glrt_threshold {
            GlrtThreshold::Optimal => match cfg.p_d {
                p if p <= 0.0 => f64::INFINITY,
                p if p >= 1.0 => f64::NEG_INFINITY,
                p => glrt_optimal_threshold(p)?,
            },
            GlrtThreshold::Zero => 0.0,
            GlrtThreshold::Value(v) => v,
        }),
        DetectorId::GlrtZero => Rule::Above(0.0),
        DetectorId::GlrtLos => Rule::Above(cfg.glrt_los_threshold),
        DetectorId::Rao => {
            let mode = match cfg.rao_threshold {
                RaoThreshold::Auto if rao_theory_available(scene) => RaoThreshold::Theory,
                RaoThreshold::Auto => RaoThreshold::Calibrate,
                other => other,
            };
            match mode {
                RaoThreshold::Value(v) => Rule::Above(v),
                RaoThreshold::Theory => {
                    if !rao_theory_available(scene) {
                        return Err(Error::config(
                            "rao_threshold",
                            "theory thresholds need m = n, channel = nlos and fixed_channel = true",
                        ));
                    }
                    let g = scene.fixed_channel().expect("fixed channel");
                    let w = &scene.waveforms;
                    let (h0, h1) = rao_special_laws(g, &w.x0, &w.x1, scene.n0(), w.total_power)?;
                    let grid = calibration::rao_default_grid(cfg.m, cfg.n, cfg.l);
                    Rule::Above(calibration::theory_optimal_threshold(&grid, |t| {
                        Ok(((1.0 - h0.cdf(t)?) * (1.0 - cfg.p_d) + h1.cdf(t)? * cfg.p_d).clamp(0.0, 1.0))
                    })?)
                }
                _ => {
                    let grid = calibration::rao_default_grid(cfg.m, cfg.n, cfg.l);
                    let sweep = calibration::calibrate_threshold(
                        DetectorId::Rao,
                        scene,
                        &grid,
                        cfg.calibration_trials,
                        calibration_seed,
                        !cfg.fixed_channel,
                        exec,
                    )?;
                    Rule::Above(sweep.argmin_threshold)
                }
            }
        }
        DetectorId::Ed => match cfg.ed_thresholds {
            EdThresholds::Default => {
                let t = default_energy_thresholds(cfg.n, cfg.p_r, scene.n0());
                Rule::Band(t.gamma, t.eta.expect("two thresholds"))
            }
            EdThresholds::Value(g, e) => Rule::Band(g, e),
            EdThresholds::Calibrate => {
                let grid = calibration::ed_default_grid(scene);
                let sweep: ThresholdSweep = calibration::calibrate_threshold(
                    DetectorId::Ed,
                    scene,
                    &grid,
                    cfg.calibration_trials,
                    calibration_seed,
                    !cfg.fixed_channel,
                    exec,
                )?;
                Rule::Band(sweep.argmin_threshold, sweep.argmin_eta.expect("paired sweep"))
            }
        },
    })
}

/// Closed-form error probability of a detector at a point, where one exists.
pub fn theory_error(id: DetectorId, scene: &Scene, rule: Rule, glrt_theory: Option<&GlrtTheory>) -> Result<Option<f64>> {
    let cfg = &scene.cfg;
    let w = &scene.waveforms;
    let p_d = cfg.p_d;
    match (id, rule) {
        (DetectorId::Glrt | DetectorId::GlrtZero, Rule::Above(g)) => {
            let (Some(channel), Some(theory)) = (scene.fixed_channel(), glrt_theory) else {
                return Ok(None);
            };
            if g == f64::NEG_INFINITY {
                return Ok(Some(1.0 - p_d));
            }
            if g == f64::INFINITY {
                return Ok(Some(p_d));
            }
            Ok(Some(theory.error_prob(channel, scene.n0(), p_d, g)?.p_error))
        }
        (DetectorId::Rao, Rule::Above(g)) if rao_theory_available(scene) => {
            let channel = scene.fixed_channel().expect("fixed channel");
            Ok(Some(
                crate::theory::rao_special_error_prob(channel, &w.x0, &w.x1, scene.n0(), w.total_power, p_d, g)?.p_error,
            ))
        }
        (DetectorId::Ed, Rule::Band(g, e)) => {
            let alpha = num_complex::Complex64::new(cfg.alpha_abs, 0.0);
            let ed = EdTheory::new(alpha, cfg.theta_deg, &w.x1, scene.n0(), w.total_power, &scene.radar, &scene.bs)?;
            Ok(Some(ed.error_prob(p_d, g, e)?))
        }
        _ => Ok(None),
    }
}

/// Default detectors of a channel model.
pub fn default_detectors(channel: ChannelModel) -> Vec<DetectorId> {
    match channel {
        ChannelModel::Nlos => vec![DetectorId::Glrt, DetectorId::GlrtZero, DetectorId::Rao],
        ChannelModel::Los => vec![DetectorId::Ed, DetectorId::GlrtLos],
    }
}

/// Monte Carlo decision error of each detector over a sweep.
pub fn run_detection_experiment(
    base: &RadarSceneConfig,
    detectors: &[DetectorId],
    sweep: Option<&Sweep>,
) -> Result<Vec<ExperimentResult>> {
    let start = Instant::now();
    for &d in detectors {
        check_channel(d, base)?;
    }
    if detectors.is_empty() {
        return Err(Error::config("detectors", "no detector selected"));
    }
    let default_sweep = Sweep::new(SweepVariable::Snr, vec![base.snr_db]);
    let sweep = sweep.unwrap_or(&default_sweep);
    if sweep.variable == SweepVariable::Threshold && detectors.len() != 1 {
        return Err(Error::config("sweep", "a threshold sweep needs exactly one detector"));
    }
    let exec = base.execution;
    let mut rows: Vec<Vec<ResultRow>> = vec![Vec::new(); detectors.len()];
    let mut scene: Option<Scene> = None;
    for (point, &value) in sweep.values.iter().enumerate() {
        let cfg = apply_sweep_value(base, sweep.variable, value, detectors.first().copied())?;
        let s = match &scene {
            None => Scene::prepare(&cfg)?,
            Some(prev) => prev.retarget(&cfg)?,
        };
        let engine = Engine::new(&s, detectors)?;
        let cal_seed = mix(cfg.seed, point as u64, Stream::Misc);
        let rules: Vec<Rule> = detectors
            .iter()
            .map(|&d| resolve_rule(d, &s, cal_seed, exec))
            .collect::<Result<_>>()?;
        let glrt_theory = if s.fixed_channel().is_some()
            && detectors.iter().any(|d| matches!(d, DetectorId::Glrt | DetectorId::GlrtZero))
        {
            Some(GlrtTheory::new(&s.waveforms.x0, &s.waveforms.x1)?)
        } else {
            None
        };
        let outcomes: Vec<Vec<bool>> = try_map_trials(exec, cfg.trials, |i| {
            let trial = s.draw(i, None)?;
            detectors
                .iter()
                .zip(&rules)
                .map(|(&d, rule)| Ok(!rule.decide(engine.statistic(d, &trial.y)?).matches(trial.mode)))
                .collect::<Result<Vec<bool>>>()
        })?;
        for (k, &d) in detectors.iter().enumerate() {
            let errors = outcomes.iter().filter(|o| o[k]).count() as u64;
            let p = errors as f64 / cfg.trials as f64;
            let (g, e) = rules[k].thresholds();
            log::debug!("{} at {value}: thresholds ({g}, {e:?}), error {p}", d.as_str());
            rows[k].push(ResultRow {
                sweep: value,
                empirical: Some(p),
                ci_halfwidth: Some(wilson_halfwidth(errors, cfg.trials)),
                theory: theory_error(d, &s, rules[k], glrt_theory.as_ref())?,
                trials: cfg.trials,
                seed: cfg.seed,
            });
        }
        scene = Some(s);
    }
    let runtime = start.elapsed();
    Ok(detectors
        .iter()
        .zip(rows)
        .map(|(d, rows)| ExperimentResult {
            series: d.as_str().to_string(),
            sweep_variable: sweep.variable,
            rows,
            runtime,
        })
        .collect())
}

/// Statistics of `trials` draws, used by calibration.
pub(crate) fn statistics(
    engine: &Engine<'_>,
    id: DetectorId,
    trials: u64,
    seed: u64,
    ergodic: bool,
    exec: Execution,
) -> Result<Vec<(f64, crate::channel::PriMode)>> {
    try_map_trials(exec, trials, |i| {
        let t = engine.scene.draw_with(seed, i, None, ergodic)?;
        Ok((engine.statistic(id, &t.y)?, t.mode))
    })
}

/// Closed-form error curves only, without Monte Carlo. Detectors with no
/// tractable law get an empty theory column.
pub fn theory_curves(
    base: &RadarSceneConfig,
    detectors: &[DetectorId],
    sweep: Option<&Sweep>,
) -> Result<Vec<ExperimentResult>> {
    let start = Instant::now();
    for &d in detectors {
        check_channel(d, base)?;
    }
    if matches!(base.rao_threshold, RaoThreshold::Calibrate) || matches!(base.ed_thresholds, EdThresholds::Calibrate) {
        return Err(Error::config(
            "rao_threshold",
            "theory curves need thresholds that do not require calibration",
        ));
    }
    let default_sweep = Sweep::new(SweepVariable::Snr, vec![base.snr_db]);
    let sweep = sweep.unwrap_or(&default_sweep);
    let mut rows: Vec<Vec<ResultRow>> = vec![Vec::new(); detectors.len()];
    let mut scene: Option<Scene> = None;
    for &value in &sweep.values {
        let cfg = apply_sweep_value(base, sweep.variable, value, detectors.first().copied())?;
        let s = match &scene {
            None => Scene::prepare(&cfg)?,
            Some(prev) => prev.retarget(&cfg)?,
        };
        let glrt_theory = match s.fixed_channel() {
            Some(_) => Some(GlrtTheory::new(&s.waveforms.x0, &s.waveforms.x1)?),
            None => None,
        };
        for (k, &d) in detectors.iter().enumerate() {
            let needs_calibration = d == DetectorId::Rao
                && matches!(cfg.rao_threshold, RaoThreshold::Auto)
                && !rao_theory_available(&s);
            let theory = if needs_calibration || d == DetectorId::GlrtLos {
                None
            } else {
                let rule = resolve_rule(d, &s, 0, cfg.execution)?;
                theory_error(d, &s, rule, glrt_theory.as_ref())?
            };
            rows[k].push(ResultRow {
                sweep: value,
                empirical: None,
                ci_halfwidth: None,
                theory,
                trials: 0,
                seed: cfg.seed,
            });
        }
        scene = Some(s);
    }
    let runtime = start.elapsed();
    Ok(detectors
        .iter()
        .zip(rows)
        .map(|(d, rows)| ExperimentResult {
            series: d.as_str().to_string(),
            sweep_variable: sweep.variable,
            rows,
            runtime,
        })
        .collect())
}

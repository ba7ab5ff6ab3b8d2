//! Threshold selection by Monte Carlo sweep, and by scanning a closed-form
//! error probability where one exists.
//!
//! All grid points share the same trials (common random numbers): each
//! statistic is computed once and compared against every threshold.

use crate::channel::PriMode;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::harness::config::DetectorId;
use crate::harness::detection::{statistics, Engine, Rule};
use crate::harness::scene::Scene;

pub const MIN_TRIALS: u64 = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSweep {
    pub grid: Vec<f64>,
    pub error_prob: Vec<f64>,
    /// Upper threshold minimising the error for each lower threshold
    /// (two-threshold detectors only).
    pub eta: Option<Vec<f64>>,
    pub argmin_threshold: f64,
    pub argmin_eta: Option<f64>,
    pub trials_per_point: u64,
}

impl ThresholdSweep {
    pub fn min_error(&self) -> f64 {
        self.error_prob.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..points)
        .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp())
        .collect()
}

pub fn linear_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![lo];
    }
    (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect()
}

/// 101 log-spaced points over [K/10, 10K], K = 2N(L - M).
pub fn rao_default_grid(m: usize, n: usize, l: usize) -> Vec<f64> {
    let k = (2 * n * l.saturating_sub(m)).max(1) as f64;
    log_grid(k / 10.0, 10.0 * k, 101)
}

/// 41 log-spaced power levels from N N0 / 2 to 2N (|α|² M P_R + N0).
pub fn ed_default_grid(scene: &Scene) -> Vec<f64> {
    let cfg = &scene.cfg;
    let n = cfg.n as f64;
    let n0 = scene.n0();
    let peak = cfg.alpha_abs * cfg.alpha_abs * cfg.m as f64 * cfg.p_r;
    log_grid(n * n0 / 2.0, 2.0 * n * (peak + n0), 41)
}

/// 101 points over [-2NL, 2NL] for the sign-symmetric GLRT statistics.
pub fn glrt_default_grid(n: usize, l: usize) -> Vec<f64> {
    let s = 2.0 * (n * l) as f64;
    linear_grid(-s, s, 101)
}

pub fn default_grid(id: DetectorId, scene: &Scene) -> Vec<f64> {
    let cfg = &scene.cfg;
    match id {
        DetectorId::Rao => rao_default_grid(cfg.m, cfg.n, cfg.l),
        DetectorId::Ed => ed_default_grid(scene),
        _ => glrt_default_grid(cfg.n, cfg.l),
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::config("calibration_grid", "grid is empty"));
    }
    if grid.iter().any(|g| !g.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::config("calibration_grid", "grid must be finite and strictly ascending"));
    }
    Ok(())
}

fn error_rate(stats: &[(f64, PriMode)], rule: Rule) -> f64 {
    let errors = stats.iter().filter(|(s, mode)| !rule.decide(*s).matches(*mode)).count();
    errors as f64 / stats.len() as f64
}

/// Empirical decision error on every grid threshold; the argmin breaks ties
/// toward the smallest threshold. For the energy detector the grid is a
/// power grid and all pairs γ̃ < η̃ from it are scored; the sweep then
/// reports, for each γ̃, the best η̃.
pub fn calibrate_threshold(
    detector: DetectorId,
    scene: &Scene,
    grid: &[f64],
    trials: u64,
    base_seed: u64,
    ergodic: bool,
    exec: Execution,
) -> Result<ThresholdSweep> {
    check_grid(grid)?;
    if trials < MIN_TRIALS {
        return Err(Error::config(
            "calibration_trials",
            format!("need at least {MIN_TRIALS} trials, got {trials}"),
        ));
    }
    let engine = Engine::new(scene, &[detector])?;
    let stats = statistics(&engine, detector, trials, base_seed, ergodic, exec)?;
    if detector != DetectorId::Ed {
        let error_prob: Vec<f64> = grid.iter().map(|&g| error_rate(&stats, Rule::Above(g))).collect();
        let best = argmin(&error_prob);
        return Ok(ThresholdSweep {
            grid: grid.to_vec(),
            argmin_threshold: grid[best],
            error_prob,
            eta: None,
            argmin_eta: None,
            trials_per_point: trials,
        });
    }
    let lows = if grid.len() == 1 { grid } else { &grid[..grid.len() - 1] };
    let mut error_prob = Vec::with_capacity(lows.len());
    let mut etas = Vec::with_capacity(lows.len());
    for (i, &g) in lows.iter().enumerate() {
        let uppers = if grid.len() == 1 { grid } else { &grid[i + 1..] };
        let errs: Vec<f64> = uppers.iter().map(|&e| error_rate(&stats, Rule::Band(g, e))).collect();
        let j = argmin(&errs);
        error_prob.push(errs[j]);
        etas.push(uppers[j]);
    }
    let best = argmin(&error_prob);
    Ok(ThresholdSweep {
        grid: lows.to_vec(),
        argmin_threshold: lows[best],
        argmin_eta: Some(etas[best]),
        error_prob,
        eta: Some(etas),
        trials_per_point: trials,
    })
}

fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

/// Minimiser of a closed-form error curve: grid scan, then golden-section
/// refinement between the neighbours of the best grid point.
pub fn theory_optimal_threshold<F>(grid: &[f64], mut error: F) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    check_grid(grid)?;
    let values: Vec<f64> = grid.iter().map(|&g| error(g)).collect::<Result<_>>()?;
    let best = argmin(&values);
    if grid.len() < 3 {
        return Ok(grid[best]);
    }
    let mut a = grid[best.saturating_sub(1)];
    let mut b = grid[(best + 1).min(grid.len() - 1)];
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = error(x1)?;
    let mut f2 = error(x2)?;
    for _ in 0..60 {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = error(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = error(x2)?;
        }
    }
    let (x, f) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    Ok(if f < values[best] { x } else { grid[best] })
}

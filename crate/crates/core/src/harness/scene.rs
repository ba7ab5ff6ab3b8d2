//! A prepared experiment scene: arrays, waveforms and per-trial draws.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use num_complex::Complex64;
use rand::Rng;

use super::config::{ChannelModel, RadarSceneConfig};
use crate::array::{rad, ArrayGeometry};
use crate::channel::{los_channel_matrix, sample_nlos_channel_with, sample_pri_mode_with, synthesize_rx_with, PriMode};
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::rng::{rng_for, Stream};
use crate::waveform::{design_tracking_covariance, diagonal_loading, BeampatternSpec, SolverOptions, WaveformSet};

/// Trial index reserved for draws shared by the whole experiment.
const SHARED: u64 = u64::MAX;
/// Sweep-budget multiplier for a second design attempt after a stall.
const RETRY_FACTOR: usize = 4;

fn design_cache() -> &'static Mutex<HashMap<String, CMat>> {
    static CACHE: OnceLock<Mutex<HashMap<String, CMat>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Tracking covariance from the configured file or the beampattern design.
/// Designs are memoised per process.
pub fn tracking_covariance(cfg: &RadarSceneConfig) -> Result<CMat> {
    let r = match &cfg.tracking_covariance {
        Some(path) => {
            let r = super::io::read_covariance(path)?;
            if r.nrows() != cfg.m {
                return Err(Error::config(
                    "tracking_covariance",
                    format!("file holds a {}x{} matrix but m = {}", r.nrows(), r.ncols(), cfg.m),
                ));
            }
            r
        }
        None => {
            if cfg.radar_spacing != 0.5 {
                return Err(Error::config(
                    "tracking_covariance",
                    "the built-in design assumes half-wavelength spacing; supply a covariance file",
                ));
            }
            let key = format!(
                "{}|{:e}|{:e}|{:e}|{:e}|{:e}",
                cfg.m, cfg.p_r, cfg.mainlobe_deg, cfg.beam_width_deg, cfg.grid_step_deg, cfg.transition_deg
            );
            if let Some(r) = design_cache().lock().expect("design cache poisoned").get(&key) {
                return diagonal_loading(r, cfg.tracking_loading, cfg.p_r);
            }
            let spec = BeampatternSpec::three_db(cfg.mainlobe_deg, cfg.beam_width_deg, cfg.grid_step_deg, cfg.transition_deg)
                .map_err(|e| Error::config("beam_width_deg", e.to_string()))?;
            log::info!("designing tracking covariance for M = {}", cfg.m);
            let opts = SolverOptions::default();
            let design = match design_tracking_covariance(&spec, cfg.m, cfg.p_r, &opts) {
                Err(Error::Convergence { residual, .. }) => {
                    log::warn!("design stalled (residual {residual:e}); retrying with a larger sweep budget");
                    let retry = SolverOptions {
                        max_iterations: RETRY_FACTOR * opts.max_iterations,
                        ..opts
                    };
                    design_tracking_covariance(&spec, cfg.m, cfg.p_r, &retry)?
                }
                other => other?,
            };
            design_cache()
                .lock()
                .expect("design cache poisoned")
                .insert(key, design.covariance.clone());
            design.covariance
        }
    };
    diagonal_loading(&r, cfg.tracking_loading, cfg.p_r)
}

/// Channel and received block of one PRI.
#[derive(Debug, Clone)]
pub struct Trial {
    pub mode: PriMode,
    pub g: CMat,
    /// Path gain of a LoS channel.
    pub alpha: Option<Complex64>,
    pub y: CMat,
}

#[derive(Debug, Clone)]
pub struct Scene {
    pub cfg: RadarSceneConfig,
    pub radar: ArrayGeometry,
    pub bs: ArrayGeometry,
    pub waveforms: WaveformSet,
    /// Channel shared by all trials of a non-ergodic run.
    shared_g: Option<CMat>,
    shared_alpha: Option<Complex64>,
}

impl Scene {
    pub fn prepare(cfg: &RadarSceneConfig) -> Result<Self> {
        cfg.validate()?;
        let r = tracking_covariance(cfg)?;
        let mut rng = rng_for(cfg.seed, SHARED, Stream::Waveform);
        let waveforms = WaveformSet::generate(&mut rng, r, cfg.l, cfg.p_r)?;
        Self::with_waveforms(cfg, waveforms)
    }

    /// Same waveforms, different point parameters (N, SNR, angle, ...).
    pub fn retarget(&self, cfg: &RadarSceneConfig) -> Result<Self> {
        if cfg.m != self.cfg.m || cfg.l != self.cfg.l || cfg.p_r != self.cfg.p_r {
            return Self::prepare(cfg);
        }
        Self::with_waveforms(cfg, self.waveforms.clone())
    }

    fn with_waveforms(cfg: &RadarSceneConfig, waveforms: WaveformSet) -> Result<Self> {
        cfg.validate()?;
        let radar = ArrayGeometry::new(cfg.m, cfg.radar_spacing)?;
        let bs = ArrayGeometry::new(cfg.n, cfg.bs_spacing)?;
        let mut scene = Self {
            cfg: cfg.clone(),
            radar,
            bs,
            waveforms,
            shared_g: None,
            shared_alpha: None,
        };
        match cfg.channel {
            ChannelModel::Nlos => {
                let mut rng = rng_for(cfg.seed, SHARED, Stream::Channel);
                scene.shared_g = Some(sample_nlos_channel_with(&mut rng, cfg.n, cfg.m)?);
            }
            ChannelModel::Los => scene.shared_alpha = Some(scene.alpha_for(cfg.seed, SHARED)),
        }
        Ok(scene)
    }

    pub fn n0(&self) -> f64 {
        self.cfg.n0()
    }

    /// The NLoS channel used by every trial when `fixed_channel` is set.
    pub fn fixed_channel(&self) -> Option<&CMat> {
        if self.cfg.fixed_channel {
            self.shared_g.as_ref()
        } else {
            None
        }
    }

    pub fn waveform(&self, mode: PriMode) -> &CMat {
        match mode {
            PriMode::Search => &self.waveforms.x0,
            PriMode::Track => &self.waveforms.x1,
        }
    }

    fn alpha_for(&self, seed: u64, index: u64) -> Complex64 {
        let phase = match self.cfg.alpha_phase_deg {
            Some(p) => rad(p),
            None => {
                let mut rng = rng_for(seed, index, Stream::Phase);
                rng.random_range(0.0..std::f64::consts::TAU)
            }
        };
        Complex64::from_polar(self.cfg.alpha_abs, phase)
    }

    /// Draw trial `index`; `mode = None` samples the PRI mode from P_D.
    pub fn draw(&self, index: u64, mode: Option<PriMode>) -> Result<Trial> {
        self.draw_with(self.cfg.seed, index, mode, !self.cfg.fixed_channel)
    }

    /// Draw with an explicit trial seed. With `ergodic = false` the scene's
    /// shared channel is used instead of a fresh one.
    pub fn draw_with(&self, seed: u64, index: u64, mode: Option<PriMode>, ergodic: bool) -> Result<Trial> {
        let mode = match mode {
            Some(m) => m,
            None => sample_pri_mode_with(&mut rng_for(seed, index, Stream::Mode), self.cfg.p_d)?,
        };
        let channel_index = index / self.cfg.channel_hold;
        let (g, alpha) = match self.cfg.channel {
            ChannelModel::Nlos => {
                let g = match (&self.shared_g, ergodic) {
                    (Some(g), false) => g.clone(),
                    _ => sample_nlos_channel_with(&mut rng_for(seed, channel_index, Stream::Channel), self.cfg.n, self.cfg.m)?,
                };
                (g, None)
            }
            ChannelModel::Los => {
                let alpha = match (self.shared_alpha, ergodic) {
                    (Some(a), false) => a,
                    _ => self.alpha_for(seed, channel_index),
                };
                let g = los_channel_matrix(alpha, rad(self.cfg.theta_deg), &self.radar, &self.bs)?;
                (g, Some(alpha))
            }
        };
        let mut rng = rng_for(seed, index, Stream::Noise);
        let y = synthesize_rx_with(&mut rng, &g, self.waveform(mode), self.n0())?;
        Ok(Trial { mode, g, alpha, y })
    }
}

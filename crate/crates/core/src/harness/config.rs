//! Flat `key = value` experiment configuration.
//!
//! Blank lines and `#` comments are ignored; keys are case-insensitive and
//! `-` is accepted for `_`. Later [`ConfigMap::set`] calls (CLI overrides)
//! replace file values.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::exec::Execution;

/// Every recognised key with a one-line description and its default.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("m", "radar antennas", "16"),
    ("n", "BS antennas", "16"),
    ("l", "snapshots per pulse", "20"),
    ("p_r", "radar transmit power", "1"),
    ("snr_db", "transmit SNR P_R/N0 in dB", "0"),
    ("n0", "noise power; must agree with snr_db if both are set", "P_R 10^(-snr_db/10)"),
    ("p_d", "probability that a PRI is in tracking mode", "0.9"),
    ("channel", "nlos or los", "nlos"),
    ("theta_deg", "LoS angle of the BS seen from the radar", "20"),
    ("alpha_abs", "LoS path-loss magnitude", "1"),
    ("alpha_phase_deg", "LoS path-loss phase; random uniform if unset", "random"),
    ("radar_spacing", "radar element spacing in wavelengths", "0.5"),
    ("bs_spacing", "BS element spacing in wavelengths", "0.5"),
    ("seed", "base seed", "1"),
    ("trials", "Monte Carlo trials per sweep point", "1000"),
    ("fixed_channel", "draw one channel for the whole experiment", "false"),
    ("channel_hold", "consecutive trials sharing a channel draw", "1"),
    ("mainlobe_deg", "tracking beam direction", "0"),
    ("beam_width_deg", "tracking 3 dB beam width", "10"),
    ("grid_step_deg", "angle grid of the beampattern design", "1"),
    ("transition_deg", "gap between half-power points and sidelobe region", "5"),
    ("tracking_covariance", "CSV of a precomputed tracking covariance", "designed"),
    ("tracking_loading", "diagonal loading applied to the tracking covariance", "1e-6"),
    ("detectors", "comma list of glrt, glrt-zero, rao, ed, glrt-los", "by channel"),
    ("estimators", "comma list of ml-search, ml-track, blind", "by channel"),
    ("glrt_threshold", "optimal, zero or a number", "optimal"),
    ("rao_threshold", "auto, theory, calibrate or a number", "auto"),
    ("ed_thresholds", "default, calibrate or `gamma,eta`", "default"),
    ("glrt_los_threshold", "number", "0"),
    ("calibration_trials", "trials per calibration grid point", "2000"),
    ("calibration_grid", "threshold grid `start:stop:step` or list; default per detector", "default"),
    ("detector", "detector calibrated by the calibrate subcommand", "rao"),
    ("sweep", "`var:start:stop:step` or `var:v1,v2,...` with var in snr, angle, n, threshold", "none"),
    ("angle_step_deg", "coarse grid of the LoS angle search", "0.5"),
    ("beampattern_step_deg", "angle step of beampattern output", "0.5"),
    ("beampattern_source", "search, track or the path of a covariance CSV", "track"),
    ("execution", "parallel or sequential", "parallel"),
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigMap {
    entries: BTreeMap<String, String>,
}

fn normalize(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('-', "_")
}

impl ConfigMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut map = Self::new();
        for (no, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
                field: format!("line {}", no + 1),
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            let key = normalize(key);
            if map.entries.contains_key(&key) {
                return Err(Error::config(&key, format!("duplicate key on line {}", no + 1)));
            }
            map.set(&key, value.trim())?;
        }
        Ok(map)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = normalize(key);
        if !KEYS.iter().any(|(k, _, _)| *k == key) {
            return Err(Error::config(&key, "unknown key"));
        }
        self.entries.insert(key, value.to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn parsed<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|e| Error::config(key, format!("cannot parse `{v}`: {e}"))),
        }
    }

    pub fn optional<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|v| v.parse().map_err(|e| Error::config(key, format!("cannot parse `{v}`: {e}"))))
            .transpose()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChannelModel {
    Nlos,
    Los,
}

impl FromStr for ChannelModel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "nlos" => Ok(ChannelModel::Nlos),
            "los" => Ok(ChannelModel::Los),
            _ => Err(format!("expected `nlos` or `los`, got `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DetectorId {
    /// NLoS GLRT with the configured threshold.
    Glrt,
    /// NLoS GLRT with γ = 0 (prior unknown).
    GlrtZero,
    Rao,
    Ed,
    GlrtLos,
}

impl DetectorId {
    pub fn as_str(self) -> &'static str {
        match self {
            DetectorId::Glrt => "glrt",
            DetectorId::GlrtZero => "glrt-zero",
            DetectorId::Rao => "rao",
            DetectorId::Ed => "ed",
            DetectorId::GlrtLos => "glrt-los",
        }
    }
}

impl FromStr for DetectorId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "glrt" => Ok(DetectorId::Glrt),
            "glrt-zero" => Ok(DetectorId::GlrtZero),
            "rao" => Ok(DetectorId::Rao),
            "ed" => Ok(DetectorId::Ed),
            "glrt-los" => Ok(DetectorId::GlrtLos),
            other => Err(Error::UnknownDetector(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EstimatorId {
    /// ML with the searching waveform known.
    MlSearch,
    /// ML with the tracking waveform known.
    MlTrack,
    /// LoS estimate without waveform knowledge.
    Blind,
}

impl EstimatorId {
    pub fn as_str(self) -> &'static str {
        match self {
            EstimatorId::MlSearch => "ml-search",
            EstimatorId::MlTrack => "ml-track",
            EstimatorId::Blind => "blind",
        }
    }
}

impl FromStr for EstimatorId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "ml-search" => Ok(EstimatorId::MlSearch),
            "ml-track" => Ok(EstimatorId::MlTrack),
            "blind" => Ok(EstimatorId::Blind),
            other => Err(Error::UnknownEstimator(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GlrtThreshold {
    Optimal,
    Zero,
    Value(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RaoThreshold {
    /// Theory-optimal when M = N with a fixed NLoS channel, else calibrated.
    Auto,
    Theory,
    Calibrate,
    Value(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdThresholds {
    /// N (P_R/2 + N0) and N (2 P_R + N0).
    Default,
    Calibrate,
    Value(f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepVariable {
    Snr,
    Angle,
    Antennas,
    Threshold,
}

impl SweepVariable {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepVariable::Snr => "snr",
            SweepVariable::Angle => "angle",
            SweepVariable::Antennas => "n",
            SweepVariable::Threshold => "threshold",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
}

impl Sweep {
    pub fn new(variable: SweepVariable, values: Vec<f64>) -> Self {
        Self { variable, values }
    }
}

/// `start:stop:step` (inclusive) or `v1,v2,...`; empty for `none`.
pub fn parse_values(field: &str, text: &str) -> Result<Vec<f64>> {
    let text = text.trim();
    if text.is_empty() || text == "none" {
        return Ok(Vec::new());
    }
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Error::config(field, format!("`{s}` is not a number")))
    };
    let parts: Vec<&str> = text.split(':').collect();
    match parts.len() {
        1 => text.split(',').map(num).collect(),
        3 => {
            let (start, stop, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
            if !(step > 0.0) || stop < start {
                return Err(Error::config(field, "range needs step > 0 and stop >= start"));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            if count > 1_000_000 {
                return Err(Error::config(field, "range has too many points"));
            }
            Ok((0..count).map(|i| start + i as f64 * step).collect())
        }
        _ => Err(Error::config(field, format!("cannot parse `{text}`"))),
    }
}

impl FromStr for Sweep {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (var, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::config("sweep", format!("expected `variable:values`, got `{s}`")))?;
        let variable = match var.trim() {
            "snr" => SweepVariable::Snr,
            "angle" => SweepVariable::Angle,
            "n" => SweepVariable::Antennas,
            "threshold" => SweepVariable::Threshold,
            other => return Err(Error::config("sweep", format!("unknown sweep variable `{other}`"))),
        };
        let values = parse_values("sweep", rest)?;
        if variable == SweepVariable::Antennas && values.iter().any(|v| !(*v >= 1.0) || v.fract() != 0.0) {
            return Err(Error::config("sweep", "antenna counts must be positive integers"));
        }
        Ok(Sweep::new(variable, values))
    }
}

/// Everything needed to simulate one radar/BS scene.
#[derive(Debug, Clone, PartialEq)]
pub struct RadarSceneConfig {
    pub m: usize,
    pub n: usize,
    pub l: usize,
    pub p_r: f64,
    pub snr_db: f64,
    pub p_d: f64,
    pub channel: ChannelModel,
    pub theta_deg: f64,
    pub alpha_abs: f64,
    pub alpha_phase_deg: Option<f64>,
    pub radar_spacing: f64,
    pub bs_spacing: f64,
    pub seed: u64,
    pub trials: u64,
    pub fixed_channel: bool,
    pub channel_hold: u64,
    pub mainlobe_deg: f64,
    pub beam_width_deg: f64,
    pub grid_step_deg: f64,
    pub transition_deg: f64,
    pub tracking_covariance: Option<PathBuf>,
    pub tracking_loading: f64,
    pub glrt_threshold: GlrtThreshold,
    pub rao_threshold: RaoThreshold,
    pub ed_thresholds: EdThresholds,
    pub glrt_los_threshold: f64,
    pub calibration_trials: u64,
    pub angle_step_deg: f64,
    pub execution: Execution,
}

impl Default for RadarSceneConfig {
    fn default() -> Self {
        Self {
            m: 16,
            n: 16,
            l: 20,
            p_r: 1.0,
            snr_db: 0.0,
            p_d: 0.9,
            channel: ChannelModel::Nlos,
            theta_deg: 20.0,
            alpha_abs: 1.0,
            alpha_phase_deg: None,
            radar_spacing: 0.5,
            bs_spacing: 0.5,
            seed: 1,
            trials: 1000,
            fixed_channel: false,
            channel_hold: 1,
            mainlobe_deg: 0.0,
            beam_width_deg: 10.0,
            grid_step_deg: 1.0,
            transition_deg: 5.0,
            tracking_covariance: None,
            tracking_loading: 1e-6,
            glrt_threshold: GlrtThreshold::Optimal,
            rao_threshold: RaoThreshold::Auto,
            ed_thresholds: EdThresholds::Default,
            glrt_los_threshold: 0.0,
            calibration_trials: 2000,
            angle_step_deg: 0.5,
            execution: Execution::Parallel,
        }
    }
}

impl RadarSceneConfig {
    pub fn n0(&self) -> f64 {
        self.p_r * 10f64.powf(-self.snr_db / 10.0)
    }

    pub fn from_map(map: &ConfigMap) -> Result<Self> {
        let d = Self::default();
        let mut cfg = Self {
            m: map.parsed("m", d.m)?,
            n: map.parsed("n", d.n)?,
            l: map.parsed("l", d.l)?,
            p_r: map.parsed("p_r", d.p_r)?,
            snr_db: map.parsed("snr_db", d.snr_db)?,
            p_d: map.parsed("p_d", d.p_d)?,
            channel: map.parsed("channel", d.channel)?,
            theta_deg: map.parsed("theta_deg", d.theta_deg)?,
            alpha_abs: map.parsed("alpha_abs", d.alpha_abs)?,
            alpha_phase_deg: match map.get("alpha_phase_deg") {
                None | Some("random") => None,
                Some(_) => map.optional("alpha_phase_deg")?,
            },
            radar_spacing: map.parsed("radar_spacing", d.radar_spacing)?,
            bs_spacing: map.parsed("bs_spacing", d.bs_spacing)?,
            seed: map.parsed("seed", d.seed)?,
            trials: map.parsed("trials", d.trials)?,
            fixed_channel: map.parsed("fixed_channel", d.fixed_channel)?,
            channel_hold: map.parsed("channel_hold", d.channel_hold)?,
            mainlobe_deg: map.parsed("mainlobe_deg", d.mainlobe_deg)?,
            beam_width_deg: map.parsed("beam_width_deg", d.beam_width_deg)?,
            grid_step_deg: map.parsed("grid_step_deg", d.grid_step_deg)?,
            transition_deg: map.parsed("transition_deg", d.transition_deg)?,
            tracking_covariance: map.get("tracking_covariance").map(PathBuf::from),
            tracking_loading: map.parsed("tracking_loading", d.tracking_loading)?,
            glrt_threshold: match map.get("glrt_threshold") {
                None | Some("optimal") => GlrtThreshold::Optimal,
                Some("zero") => GlrtThreshold::Zero,
                Some(_) => GlrtThreshold::Value(map.parsed("glrt_threshold", 0.0)?),
            },
            rao_threshold: match map.get("rao_threshold") {
                None | Some("auto") => RaoThreshold::Auto,
                Some("theory") => RaoThreshold::Theory,
                Some("calibrate") => RaoThreshold::Calibrate,
                Some(_) => RaoThreshold::Value(map.parsed("rao_threshold", 0.0)?),
            },
            ed_thresholds: match map.get("ed_thresholds") {
                None | Some("default") => EdThresholds::Default,
                Some("calibrate") => EdThresholds::Calibrate,
                Some(v) => {
                    let vals = parse_values("ed_thresholds", v)?;
                    if vals.len() != 2 {
                        return Err(Error::config("ed_thresholds", "expected `gamma,eta`"));
                    }
                    EdThresholds::Value(vals[0], vals[1])
                }
            },
            glrt_los_threshold: map.parsed("glrt_los_threshold", d.glrt_los_threshold)?,
            calibration_trials: map.parsed("calibration_trials", d.calibration_trials)?,
            angle_step_deg: map.parsed("angle_step_deg", d.angle_step_deg)?,
            execution: map.parsed("execution", d.execution)?,
        };
        if let Some(n0) = map.optional::<f64>("n0")? {
            if !(n0 > 0.0) {
                return Err(Error::config("n0", "must be positive"));
            }
            let snr = 10.0 * (cfg.p_r / n0).log10();
            if map.get("snr_db").is_some() && (snr - cfg.snr_db).abs() > 1e-9 {
                return Err(Error::config(
                    "n0",
                    format!("implies SNR {snr} dB but snr_db = {}", cfg.snr_db),
                ));
            }
            cfg.snr_db = snr;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, message: &str| Err(Error::config(field, message));
        if self.m == 0 {
            return bad("m", "must be at least 1");
        }
        if self.n == 0 {
            return bad("n", "must be at least 1");
        }
        if self.l < self.m {
            return bad("l", "must be at least m");
        }
        if !(self.p_r > 0.0 && self.p_r.is_finite()) {
            return bad("p_r", "must be positive");
        }
        if !self.snr_db.is_finite() {
            return bad("snr_db", "must be finite");
        }
        if !(0.0..=1.0).contains(&self.p_d) {
            return bad("p_d", "must be in [0, 1]");
        }
        if !(self.theta_deg > -90.0 && self.theta_deg < 90.0) {
            return bad("theta_deg", "must be in (-90, 90)");
        }
        if !(self.alpha_abs >= 0.0 && self.alpha_abs.is_finite()) {
            return bad("alpha_abs", "must be finite and >= 0");
        }
        if !(self.radar_spacing > 0.0) {
            return bad("radar_spacing", "must be positive");
        }
        if !(self.bs_spacing > 0.0) {
            return bad("bs_spacing", "must be positive");
        }
        if self.trials == 0 {
            return bad("trials", "must be at least 1");
        }
        if self.channel_hold == 0 {
            return bad("channel_hold", "must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.tracking_loading) {
            return bad("tracking_loading", "must be in [0, 1]");
        }
        if !(self.angle_step_deg > 0.0 && self.angle_step_deg <= 10.0) {
            return bad("angle_step_deg", "must be in (0, 10]");
        }
        if let EdThresholds::Value(g, e) = self.ed_thresholds {
            if !(g >= 0.0 && e >= g) {
                return bad("ed_thresholds", "need 0 <= gamma <= eta");
            }
        }
        if !(self.l >= self.n && self.n >= self.m && self.m > 2) {
            log::debug!(
                "dimensions M={}, N={}, L={} fall outside L >= N >= M > 2",
                self.m,
                self.n,
                self.l
            );
        }
        Ok(())
    }
}

pub fn parse_list<T: FromStr<Err = Error>>(text: &str) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        out.push(part.parse()?);
    }
    Ok(out)
}

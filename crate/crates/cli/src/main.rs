//! `coexist`: command-line front end of the coexistence simulator.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use coexist_core::array::{beampattern_many, rad, ArrayGeometry};
use coexist_core::calibration::{calibrate_threshold, default_grid};
use coexist_core::harness::config::{parse_list, parse_values};
use coexist_core::harness::{
    detection, emit_results, estimation, io, scene, series_path, ConfigMap, DetectorId, EstimatorId,
    ExperimentResult, RadarSceneConfig, Scene, Sweep, SweepVariable,
};
use coexist_core::{CMat, Error, Result};

#[derive(Parser)]
#[command(name = "coexist", version, about = "Radar/cellular coexistence simulator")]
struct Cli {
    /// Repeat for more log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Key-value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV path. Runs with several series write `<stem>_<series>.<ext>`.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    /// `var:start:stop:step` or `var:v1,v2,...` with var in snr, angle, n, threshold.
    #[arg(long)]
    sweep: Option<String>,
    /// Override one configuration key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Transmit beampattern of the searching or tracking covariance.
    Beampattern(Common),
    /// Solve the 3 dB beampattern design and write the covariance.
    DesignBeampattern {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long = "p-r")]
        p_r: Option<f64>,
        /// Mainlobe direction in degrees.
        #[arg(long, allow_hyphen_values = true)]
        theta0: Option<f64>,
        /// 3 dB width in degrees.
        #[arg(long)]
        width: Option<f64>,
        #[arg(long = "grid-step")]
        grid_step: Option<f64>,
    },
    /// Empirical error probability over a threshold grid.
    Calibrate(Common),
    /// Monte Carlo mode-detection error curves.
    Detect(Common),
    /// Monte Carlo channel-estimation MSE curves.
    Estimate(Common),
    /// Closed-form curves only.
    Theory {
        #[command(flatten)]
        common: Common,
        /// `detection` or `estimation`.
        #[arg(long, default_value = "detection")]
        kind: String,
    },
}

struct Loaded {
    map: ConfigMap,
    cfg: RadarSceneConfig,
    sweep: Option<Sweep>,
}

fn load(common: &Common, extra: &[(&str, String)]) -> Result<Loaded> {
    let mut map = match &common.config {
        Some(path) => ConfigMap::load(path)?,
        None => ConfigMap::new(),
    };
    for kv in &common.overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Validation(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        map.set(k.trim(), v.trim())?;
    }
    if let Some(seed) = common.seed {
        map.set("seed", &seed.to_string())?;
    }
    if let Some(trials) = common.trials {
        map.set("trials", &trials.to_string())?;
    }
    for (k, v) in extra {
        map.set(k, v)?;
    }
    let cfg = RadarSceneConfig::from_map(&map)?;
    let sweep = match common.sweep.as_deref().or(map.get("sweep")) {
        Some(text) => Some(text.parse::<Sweep>()?),
        None => None,
    };
    Ok(Loaded { map, cfg, sweep })
}

fn no_sweep(sweep: &Option<Sweep>, command: &str) -> Result<()> {
    match sweep {
        Some(_) => Err(Error::Validation(format!("{command} takes no sweep"))),
        None => Ok(()),
    }
}

fn sweep_of(sweep: &Option<Sweep>, variable: SweepVariable, command: &str) -> Result<Option<Vec<f64>>> {
    match sweep {
        None => Ok(None),
        Some(s) if s.variable == variable => Ok(Some(s.values.clone())),
        Some(s) => Err(Error::Validation(format!(
            "{command} sweeps `{}`, not `{}`",
            variable.as_str(),
            s.variable.as_str()
        ))),
    }
}

fn beampattern(common: &Common) -> Result<()> {
    let Loaded { map, cfg, sweep } = load(common, &[])?;
    let step: f64 = map.parsed("beampattern_step_deg", 0.5)?;
    if !step.is_finite() || step <= 0.0 {
        return Err(Error::Validation("beampattern_step_deg must be positive".into()));
    }
    let angles = match sweep_of(&sweep, SweepVariable::Angle, "beampattern")? {
        Some(a) => a,
        None => {
            let count = (180.0 / step + 1e-9).floor() as usize;
            (0..=count).map(|i| -90.0 + step * i as f64).collect()
        }
    };
    let r = match map.get("beampattern_source").unwrap_or("track") {
        "search" => CMat::identity(cfg.m, cfg.m).scale(cfg.p_r / cfg.m as f64),
        "track" => scene::tracking_covariance(&cfg)?,
        path => io::read_covariance(Path::new(path))?,
    };
    let geometry = ArrayGeometry::new(r.nrows(), cfg.radar_spacing)?;
    let radians: Vec<f64> = angles.iter().map(|&a| rad(a)).collect();
    let power = beampattern_many(&r, &geometry, &radians)?;
    io::write_text(&common.out, &io::beampattern_csv(&angles, &power))
}

fn design(common: &Common, m: Option<usize>, p_r: Option<f64>, theta0: Option<f64>, width: Option<f64>, grid_step: Option<f64>) -> Result<()> {
    let mut extra = vec![("tracking_loading", "0".to_string())];
    if let Some(v) = m {
        extra.push(("m", v.to_string()));
    }
    if let Some(v) = p_r {
        extra.push(("p_r", v.to_string()));
    }
    if let Some(v) = theta0 {
        extra.push(("mainlobe_deg", v.to_string()));
    }
    if let Some(v) = width {
        extra.push(("beam_width_deg", v.to_string()));
    }
    if let Some(v) = grid_step {
        extra.push(("grid_step_deg", v.to_string()));
    }
    let Loaded { mut cfg, sweep, .. } = load(common, &extra)?;
    no_sweep(&sweep, "design-beampattern")?;
    cfg.tracking_covariance = None;
    let r = scene::tracking_covariance(&cfg)?;
    io::write_covariance(&common.out, &r)
}

fn calibrate(common: &Common) -> Result<()> {
    let Loaded { map, mut cfg, sweep } = load(common, &[])?;
    let detector: DetectorId = map.parsed("detector", DetectorId::Rao)?;
    if common.trials.is_some() || map.get("trials").is_some() {
        cfg.calibration_trials = cfg.trials;
    }
    let scene = Scene::prepare(&cfg)?;
    let grid = match sweep_of(&sweep, SweepVariable::Threshold, "calibrate")? {
        Some(g) => g,
        None => match map.get("calibration_grid") {
            None | Some("default") => default_grid(detector, &scene),
            Some(text) => parse_values("calibration_grid", text)?,
        },
    };
    let result = calibrate_threshold(
        detector,
        &scene,
        &grid,
        cfg.calibration_trials,
        cfg.seed,
        !cfg.fixed_channel,
        cfg.execution,
    )?;
    log::info!(
        "{}: minimum error {} at threshold {}",
        detector.as_str(),
        result.min_error(),
        result.argmin_threshold
    );
    io::write_text(
        &common.out,
        &io::calibration_csv(&result.grid, &result.error_prob, result.eta.as_deref()),
    )
}

fn detectors(map: &ConfigMap, cfg: &RadarSceneConfig) -> Result<Vec<DetectorId>> {
    match map.get("detectors") {
        Some(text) => parse_list(text),
        None => Ok(detection::default_detectors(cfg.channel)),
    }
}

fn estimators(map: &ConfigMap, cfg: &RadarSceneConfig) -> Result<Vec<EstimatorId>> {
    match map.get("estimators") {
        Some(text) => parse_list(text),
        None => Ok(estimation::default_estimators(cfg.channel)),
    }
}

fn write_all(results: &[ExperimentResult], out: &Path) -> Result<()> {
    for r in results {
        let path = series_path(out, &r.series, results.len());
        emit_results(r, &path)?;
        log::info!("{} -> {} ({:.2?})", r.series, path.display(), r.runtime);
    }
    Ok(())
}

fn detect(common: &Common) -> Result<()> {
    let Loaded { map, cfg, sweep } = load(common, &[])?;
    let ids = detectors(&map, &cfg)?;
    write_all(&detection::run_detection_experiment(&cfg, &ids, sweep.as_ref())?, &common.out)
}

fn estimate(common: &Common) -> Result<()> {
    let Loaded { map, cfg, sweep } = load(common, &[])?;
    let ids = estimators(&map, &cfg)?;
    write_all(&estimation::run_estimation_experiment(&cfg, &ids, sweep.as_ref())?, &common.out)
}

fn theory(common: &Common, kind: &str) -> Result<()> {
    let Loaded { map, cfg, sweep } = load(common, &[])?;
    let results = match kind {
        "detection" => detection::theory_curves(&cfg, &detectors(&map, &cfg)?, sweep.as_ref())?,
        "estimation" => estimation::theory_curves(&cfg, &estimators(&map, &cfg)?, sweep.as_ref())?,
        other => {
            return Err(Error::Validation(format!(
                "--kind must be detection or estimation, got `{other}`"
            )))
        }
    };
    write_all(&results, &common.out)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Beampattern(c) => beampattern(&c),
        Command::DesignBeampattern { common, m, p_r, theta0, width, grid_step } => {
            design(&common, m, p_r, theta0, width, grid_step)
        }
        Command::Calibrate(c) => calibrate(&c),
        Command::Detect(c) => detect(&c),
        Command::Estimate(c) => estimate(&c),
        Command::Theory { common, kind } => theory(&common, &kind),
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } => 1,
        e if e.is_numerical() => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn invoke(dir: &Path, args: &[&str]) -> Result<()> {
        let mut full = vec!["coexist"];
        full.extend_from_slice(args);
        let mut cli = Cli::try_parse_from(full).expect("valid arguments");
        let fix = |c: &mut Common| c.out = dir.join(&c.out);
        match &mut cli.command {
            Command::Beampattern(c) | Command::Calibrate(c) | Command::Detect(c) | Command::Estimate(c) => fix(c),
            Command::DesignBeampattern { common, .. } | Command::Theory { common, .. } => fix(common),
        }
        run(cli)
    }

    fn code(r: Result<()>) -> u8 {
        r.map_or_else(|e| exit_code(&e), |_| 0)
    }

    #[test]
    fn omni_beampattern_is_flat() {
        let dir = tempfile::tempdir().unwrap();
        let args = ["beampattern", "--out", "bp.csv", "--set", "m=3", "--set", "beampattern_source=search"];
        invoke(dir.path(), &args).unwrap();
        let text = std::fs::read_to_string(dir.path().join("bp.csv")).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("angle_deg,power_db"));
        assert_eq!(lines.count(), 361);
        for line in text.lines().skip(1) {
            let db: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
            assert!(db.abs() < 1e-12, "{line}");
        }
    }

    #[test]
    fn validation_errors_exit_with_two() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path();
        assert_eq!(code(invoke(p, &["detect", "--out", "x.csv", "--set", "bogus=1"])), 2);
        assert_eq!(code(invoke(p, &["detect", "--out", "x.csv", "--sweep", "snr:1:0:1"])), 2);
        assert_eq!(code(invoke(p, &["detect", "--out", "x.csv", "--set", "l=2"])), 2);
        assert_eq!(code(invoke(p, &["theory", "--out", "x.csv", "--kind", "other"])), 2);
        assert_eq!(code(invoke(p, &["design-beampattern", "--out", "x.csv", "--sweep", "snr:0"])), 2);
    }

    #[test]
    fn indefinite_covariance_is_a_numerical_failure() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("bad.csv"), "0.5,0,0,0\n0,0,-0.5,0\n").unwrap();
        let bad = format!("tracking_covariance={}", dir.path().join("bad.csv").display());
        let args = ["detect", "--out", "x.csv", "--set", "m=2", "--set", "n=2", "--set", "l=4", "--set", &bad];
        assert_eq!(code(invoke(dir.path(), &args)), 3);
    }

    #[test]
    fn theory_rows_leave_empirical_fields_empty() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("r.csv"), "0.5,0,0.25,0\n0.25,0,0.5,0\n").unwrap();
        let cov = format!("tracking_covariance={}", dir.path().join("r.csv").display());
        let args = [
            "theory", "--out", "t.csv", "--sweep", "snr:-5,5", "--set", "m=2", "--set", "n=2", "--set", "l=4",
            "--set", "fixed_channel=true", "--set", "detectors=rao", "--set", &cov,
        ];
        invoke(dir.path(), &args).unwrap();
        let text = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
        let rows: Vec<&str> = text.lines().collect();
        assert_eq!(rows.len(), 3);
        assert!(rows[1].starts_with("-5.0000000000000000e0,,,"));
        assert!(rows[1].ends_with(",0,1"));
    }
}

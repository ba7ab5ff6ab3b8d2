//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use num_complex::Complex64;

use coexist_core::array::{beampattern, rad, ArrayGeometry};
use coexist_core::channel::PriMode;
use coexist_core::harness::config::{ChannelModel, EdThresholds, GlrtThreshold, RaoThreshold};
use coexist_core::harness::detection::Engine;
use coexist_core::harness::{
    run_detection_experiment, run_estimation_experiment, DetectorId, EstimatorId, ExperimentResult,
    RadarSceneConfig, Scene, Sweep, SweepVariable,
};
use coexist_core::linalg::hermitian_eigen;
use coexist_core::theory::{chi2_cdf, verify_rao_nonexistence};
use coexist_core::waveform::{design_tracking_covariance, BeampatternSpec, SolverOptions};
use coexist_core::{Error, Result};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn nlos_scene() -> RadarSceneConfig {
    RadarSceneConfig {
        m: 16,
        n: 16,
        l: 20,
        p_d: 0.9,
        fixed_channel: true,
        ..RadarSceneConfig::default()
    }
}

fn series<'a>(results: &'a [ExperimentResult], name: &str) -> &'a ExperimentResult {
    results.iter().find(|r| r.series == name).expect("series present")
}

/// Largest |theory - empirical| over the rows whose sweep value is in `points`.
fn worst_gap(result: &ExperimentResult, points: &[f64]) -> (f64, String) {
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for row in result.rows.iter().filter(|r| points.contains(&r.sweep)) {
        let (e, t) = (row.empirical.unwrap_or(f64::NAN), row.theory.unwrap_or(f64::NAN));
        let gap = (e - t).abs();
        worst = if gap.is_nan() { f64::INFINITY } else { worst.max(gap) };
        parts.push(format!("{}dB {:.4}/{:.4}", row.sweep, e, t));
    }
    (worst, parts.join(", "))
}

fn value_at(result: &ExperimentResult, sweep: f64) -> f64 {
    result
        .rows
        .iter()
        .find(|r| r.sweep == sweep)
        .and_then(|r| r.empirical)
        .unwrap_or(f64::NAN)
}

fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// 1. Under the searching hypothesis the M = N Rao statistic is χ²_{2N(L-M)}.
fn rao_chi2_law() -> Result<Outcome> {
    let start = Instant::now();
    let cfg = RadarSceneConfig {
        m: 8,
        n: 8,
        l: 12,
        seed: 11,
        ..RadarSceneConfig::default()
    };
    let scene = Scene::prepare(&cfg)?;
    let engine = Engine::new(&scene, &[DetectorId::Rao])?;
    let trials = 10_000u64;
    let mut stats = Vec::with_capacity(trials as usize);
    for i in 0..trials {
        let trial = scene.draw(i, Some(PriMode::Search))?;
        stats.push(engine.statistic(DetectorId::Rao, &trial.y)?);
    }
    stats.sort_by(f64::total_cmp);
    let dof = (2 * cfg.n * (cfg.l - cfg.m)) as u32;
    let n = stats.len() as f64;
    let mut d = 0.0f64;
    for (i, &s) in stats.iter().enumerate() {
        let f = chi2_cdf(s, dof)?;
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    // Asymptotic Kolmogorov critical value at the 1% level.
    let critical = 1.6276 / n.sqrt();
    let elapsed = start.elapsed();
    outcome(
        d < critical && elapsed < Duration::from_secs(30),
        format!("KS D = {d:.5} vs {critical:.5} (K = {dof}), {elapsed:.1?}"),
    )
}

struct NlosRun {
    results: Vec<ExperimentResult>,
    elapsed: Duration,
}

fn nlos_run() -> Result<NlosRun> {
    let start = Instant::now();
    let cfg = RadarSceneConfig {
        trials: 10_000,
        glrt_threshold: GlrtThreshold::Optimal,
        rao_threshold: RaoThreshold::Theory,
        ..nlos_scene()
    };
    let sweep = Sweep::new(SweepVariable::Snr, vec![-20.0, -10.0, -5.0, 0.0, 5.0, 10.0]);
    let results = run_detection_experiment(
        &cfg,
        &[DetectorId::Rao, DetectorId::Glrt, DetectorId::GlrtZero],
        Some(&sweep),
    )?;
    Ok(NlosRun {
        results,
        elapsed: start.elapsed(),
    })
}

const SNRS: [f64; 5] = [-10.0, -5.0, 0.0, 5.0, 10.0];

/// 2. Rao theory vs simulation.
fn rao_theory(run: &NlosRun) -> Result<Outcome> {
    let (gap, detail) = worst_gap(series(&run.results, "rao"), &SNRS);
    outcome(
        gap <= 0.02 && run.elapsed < Duration::from_secs(300),
        format!("max gap {gap:.4} [{detail}], run {:.1?}", run.elapsed),
    )
}

/// 3. GLRT saddle-point theory at the optimal and zero thresholds.
fn glrt_theory(run: &NlosRun) -> Result<Outcome> {
    let (g1, d1) = worst_gap(series(&run.results, "glrt"), &SNRS);
    let (g2, d2) = worst_gap(series(&run.results, "glrt-zero"), &SNRS);
    outcome(
        g1 <= 0.02 && g2 <= 0.02,
        format!("optimal max gap {g1:.4} [{d1}]; zero max gap {g2:.4} [{d2}]"),
    )
}

/// 4. Error floors at -20 dB.
fn low_snr_floors(run: &NlosRun) -> Result<Outcome> {
    let rao = value_at(series(&run.results, "rao"), -20.0);
    let glrt = value_at(series(&run.results, "glrt-zero"), -20.0);
    outcome(
        (rao - 0.10).abs() <= 0.02 && (glrt - 0.50).abs() <= 0.03,
        format!("rao {rao:.4} (0.10 ± 0.02), glrt γ=0 {glrt:.4} (0.50 ± 0.03)"),
    )
}

/// 5. NLoS MSE of the searching waveform against N0 M² N / (L P_R).
fn nlos_mse() -> Result<Outcome> {
    let cfg = RadarSceneConfig {
        m: 5,
        n: 4,
        l: 20,
        snr_db: 15.0,
        trials: 10_000,
        ..RadarSceneConfig::default()
    };
    let sweep = Sweep::new(SweepVariable::Antennas, vec![4.0, 8.0, 12.0, 16.0, 20.0]);
    let results = run_estimation_experiment(&cfg, &[EstimatorId::MlSearch, EstimatorId::MlTrack], Some(&sweep))?;
    let search = series(&results, "ml-search");
    let track = series(&results, "ml-track");
    let mut worst = 0.0f64;
    let mut ordered = true;
    for (s, t) in search.rows.iter().zip(&track.rows) {
        let n0 = cfg.p_r * 10f64.powf(-cfg.snr_db / 10.0);
        let closed = n0 * (cfg.m * cfg.m) as f64 * s.sweep / (cfg.l as f64 * cfg.p_r);
        worst = worst.max((s.empirical.unwrap() - closed).abs() / closed);
        ordered &= t.empirical.unwrap() >= s.empirical.unwrap();
    }
    outcome(
        worst <= 0.05 && ordered,
        format!("max relative error {:.3}%, tracking >= searching at every N: {ordered}", 100.0 * worst),
    )
}

fn los_scene() -> RadarSceneConfig {
    RadarSceneConfig {
        channel: ChannelModel::Los,
        theta_deg: 20.0,
        ed_thresholds: EdThresholds::Default,
        ..nlos_scene()
    }
}

/// 6. Energy detector theory vs simulation.
fn ed_theory() -> Result<Outcome> {
    let cfg = RadarSceneConfig {
        trials: 10_000,
        ..los_scene()
    };
    let sweep = Sweep::new(SweepVariable::Snr, SNRS.to_vec());
    let results = run_detection_experiment(&cfg, &[DetectorId::Ed], Some(&sweep))?;
    let (gap, detail) = worst_gap(&results[0], &SNRS);
    outcome(gap <= 0.02, format!("max gap {gap:.4} [{detail}]"))
}

/// 7. Energy detection is easier inside the tracking mainlobe.
fn ed_angle() -> Result<Outcome> {
    let cfg = RadarSceneConfig {
        snr_db: -6.0,
        trials: 4000,
        ..los_scene()
    };
    let angles: Vec<f64> = (-16..=16).map(|k| 5.0 * k as f64).collect();
    let sweep = Sweep::new(SweepVariable::Angle, angles);
    let results = run_detection_experiment(&cfg, &[DetectorId::Ed], Some(&sweep))?;
    let mean = |keep: &dyn Fn(f64) -> bool| {
        let v: Vec<f64> = results[0]
            .rows
            .iter()
            .filter(|r| keep(r.sweep))
            .map(|r| r.empirical.unwrap())
            .collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    let main = mean(&|t| t.abs() <= 5.0);
    let side = mean(&|t| t.abs() >= 30.0);
    outcome(
        side - main >= 0.02,
        format!("mainlobe mean {main:.4}, |θ| >= 30° mean {side:.4}"),
    )
}

/// First angle above `from` where the pattern drops to half of P(θ0).
fn half_power_angle(r: &coexist_core::CMat, geometry: &ArrayGeometry, from: f64, dir: f64) -> Result<f64> {
    let p = |t: f64| beampattern(r, geometry, rad(t));
    let half = p(from)? / 2.0;
    let mut lo = from;
    let mut hi = from;
    while p(hi)? > half {
        lo = hi;
        hi += dir * 0.01;
        if hi.abs() > 90.0 {
            return Err(Error::Internal("no half-power crossing".into()));
        }
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if p(mid)? > half {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// 8. Beampattern design for M = 16, 10° beam at broadside.
fn beampattern_design() -> Result<Outcome> {
    let (m, p_r) = (16, 1.0);
    let spec = BeampatternSpec::with_defaults(0.0, 10.0)?;
    let opts = SolverOptions::default();
    let design = match design_tracking_covariance(&spec, m, p_r, &opts) {
        Err(Error::Convergence { .. }) => design_tracking_covariance(
            &spec,
            m,
            p_r,
            &SolverOptions {
                max_iterations: 4 * opts.max_iterations,
                ..opts
            },
        )?,
        other => other?,
    };
    let r = &design.covariance;
    let geometry = ArrayGeometry::half_wavelength(m)?;
    let right = half_power_angle(r, &geometry, 0.0, 1.0)?;
    let left = half_power_angle(r, &geometry, 0.0, -1.0)?;
    let diag = (0..m)
        .map(|i| (r[(i, i)].re - p_r / m as f64).abs())
        .fold(0.0, f64::max);
    let min_eig = hermitian_eigen(r).0.into_iter().fold(f64::INFINITY, f64::min);
    outcome(
        (right - 5.0).abs() <= 0.5
            && (left + 5.0).abs() <= 0.5
            && diag <= 1e-6
            && min_eig >= -1e-7
            && design.margin > 0.0,
        format!(
            "half-power {left:.3}°/{right:.3}°, diag error {diag:.1e}, min eig {min_eig:.1e}, margin {:.4}",
            design.margin
        ),
    )
}

/// 9. The LoS Rao test does not exist on the whole (M, L) grid.
fn rao_nonexistence() -> Result<Outcome> {
    let mut failures = Vec::new();
    let mut checked = 0;
    for m in 3..=8 {
        for l in m..=12 {
            let report = verify_rao_nonexistence(m, m, l, Complex64::new(0.8, 0.3), 20.0, 0.5)?;
            checked += 1;
            if !report.holds {
                failures.push(format!("(M={m}, L={l})"));
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!("{checked} pairs checked, failures: [{}]", failures.join(" ")),
    )
}

/// 10. LoS estimation against the number of BS antennas.
fn los_estimation() -> Result<Outcome> {
    let cfg = RadarSceneConfig {
        m: 4,
        n: 4,
        l: 20,
        snr_db: -6.0,
        channel: ChannelModel::Los,
        trials: 4000,
        ..RadarSceneConfig::default()
    };
    let sweep = Sweep::new(SweepVariable::Antennas, vec![4.0, 8.0, 12.0, 16.0, 20.0]);
    let results = run_estimation_experiment(&cfg, &[EstimatorId::MlSearch, EstimatorId::Blind], Some(&sweep))?;
    let drop = |name: &str| db(value_at(series(&results, name), 4.0) / value_at(series(&results, name), 20.0));
    let theta_drop = drop("ml-search-theta");
    let alpha_drop = drop("ml-search-alpha");
    let gap = db(value_at(series(&results, "blind-theta"), 16.0) / value_at(series(&results, "ml-search-theta"), 16.0));
    outcome(
        theta_drop >= 6.0 && alpha_drop >= 6.0 && (gap - 3.0).abs() <= 1.5,
        format!(
            "ML θ-MSE drop {theta_drop:.2} dB, ML α-MSE drop {alpha_drop:.2} dB, blind θ gap at N=16 {gap:.2} dB (blind |α|² drop {:.2} dB)",
            drop("blind-alpha")
        ),
    )
}

fn coexist(dir: &Path, args: &[&str]) -> Result<()> {
    let status = Command::new(env!("CARGO_BIN_EXE_coexist"))
        .current_dir(dir)
        .args(args)
        .status()
        .map_err(|e| Error::Internal(format!("cannot launch the CLI: {e}")))?;
    if status.success() {
        Ok(())
    } else {
        Err(Error::Internal(format!("`coexist {}` exited with {status}", args.join(" "))))
    }
}

/// 11. Repeated CLI runs produce byte-identical CSV.
fn determinism() -> Result<Outcome> {
    let tmp = tempfile::tempdir().map_err(|e| Error::Internal(e.to_string()))?;
    let dir = tmp.path();
    let small = [
        "--set", "m=6", "--set", "n=6", "--set", "l=8", "--set", "tracking_covariance=cov.csv",
    ];
    let runs: Vec<(&str, Vec<&str>, Vec<&str>)> = vec![
        ("design-beampattern", vec!["--m", "6", "--theta0", "-10", "--width", "20"], vec![""]),
        ("beampattern", vec!["--set", "m=6", "--set", "tracking_covariance=cov.csv"], vec![""]),
        (
            "detect",
            [&small[..], &["--set", "fixed_channel=true", "--trials", "500", "--sweep", "snr:-10:0:5"]].concat(),
            vec!["_glrt", "_glrt-zero", "_rao"],
        ),
        (
            "detect",
            [&small[..], &["--set", "channel=los", "--trials", "500", "--sweep", "angle:-40,0,40"]].concat(),
            vec!["_ed", "_glrt-los"],
        ),
        (
            "estimate",
            [&small[..], &["--set", "channel=los", "--trials", "200", "--sweep", "n:6,8"]].concat(),
            vec!["_ml-search-theta", "_ml-track-alpha", "_blind-theta"],
        ),
        ("calibrate", [&small[..], &["--trials", "300"]].concat(), vec![""]),
        (
            "theory",
            [&small[..], &["--set", "fixed_channel=true", "--sweep", "snr:-5,5"]].concat(),
            vec!["_glrt", "_rao"],
        ),
    ];
    let mut compared = 0;
    let mut mismatches = Vec::new();
    for (k, (command, args, suffixes)) in runs.iter().enumerate() {
        let mut outputs = Vec::new();
        for (rep, exec) in ["parallel", "parallel", "sequential"].iter().enumerate() {
            let out = format!("run{k}_{rep}.csv");
            let exec_set = format!("execution={exec}");
            let mut full: Vec<&str> = vec![command, "--out", &out, "--seed", "7"];
            full.extend(args.iter().copied());
            if *command != "design-beampattern" {
                full.extend(["--set", &exec_set]);
            }
            coexist(dir, &full)?;
            let files: Vec<Vec<u8>> = suffixes
                .iter()
                .map(|s| std::fs::read(dir.join(format!("run{k}_{rep}{s}.csv"))))
                .collect::<std::io::Result<_>>()
                .map_err(|e| Error::Internal(e.to_string()))?;
            outputs.push(files);
            if *command == "design-beampattern" && rep == 0 {
                std::fs::copy(dir.join(&out), dir.join("cov.csv")).map_err(|e| Error::Internal(e.to_string()))?;
            }
        }
        compared += suffixes.len();
        if outputs.windows(2).any(|w| w[0] != w[1]) {
            mismatches.push(format!("{command} #{k}"));
        }
    }
    outcome(
        mismatches.is_empty(),
        format!(
            "{compared} outputs from {} invocations, each run twice in parallel and once sequentially; mismatches: [{}]",
            runs.len(),
            mismatches.join(", ")
        ),
    )
}

fn report(id: usize, name: &str, result: Result<Outcome>) -> bool {
    match result {
        Ok(o) => {
            println!("criterion {id:>2} {} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
            o.pass
        }
        Err(e) => {
            println!("criterion {id:>2} FAIL {name}: error: {e}");
            false
        }
    }
}

fn main() {
    let start = Instant::now();
    let mut passed = Vec::new();
    passed.push(report(1, "Rao chi-squared law", rao_chi2_law()));
    match nlos_run() {
        Ok(run) => {
            passed.push(report(2, "Rao theory vs simulation", rao_theory(&run)));
            passed.push(report(3, "GLRT saddle-point theory", glrt_theory(&run)));
            passed.push(report(4, "low-SNR floors", low_snr_floors(&run)));
        }
        Err(e) => {
            for (id, name) in [(2, "Rao theory vs simulation"), (3, "GLRT saddle-point theory"), (4, "low-SNR floors")] {
                passed.push(report(id, name, Err(Error::Internal(e.to_string()))));
            }
        }
    }
    passed.push(report(5, "NLoS MSE", nlos_mse()));
    passed.push(report(6, "ED theory vs simulation", ed_theory()));
    passed.push(report(7, "ED angle dependence", ed_angle()));
    passed.push(report(8, "beampattern design", beampattern_design()));
    passed.push(report(9, "LoS Rao non-existence", rao_nonexistence()));
    passed.push(report(10, "LoS estimation", los_estimation()));
    passed.push(report(11, "determinism", determinism()));
    let count = passed.iter().filter(|p| **p).count();
    println!("acceptance: {count}/{} criteria passed in {:.1?}", passed.len(), start.elapsed());
    if count != passed.len() {
        std::process::exit(1);
    }
}

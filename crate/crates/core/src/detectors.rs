//! Mode-identification tests run at the BS: GLRT (NLoS and LoS), the Rao
//! score test (general and M = N forms) and the two-threshold energy detector.
//!
//! Every detector decides H1 (tracking) when its statistic is strictly above
//! the threshold; equality resolves to H0. The energy detector decides H0 on
//! the closed interval [gamma, eta].

use crate::array::ArrayGeometry;
use crate::error::{Error, Result};
use crate::linalg::{frobenius_sq, hermitian_eigen, hermitian_inverse, trace_of_product, CMat};
use crate::los_fit::{minimize_angle, AngleGrid, LosCost};

/// Condition number above which X1 X1^H is pseudo-inverted.
pub const MAX_CONDITION: f64 = 1e12;
/// Relative singular-value cutoff of the pseudo-inverse.
pub const PINV_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Decision {
    /// H0: searching waveform.
    Search,
    /// H1: tracking waveform.
    Track,
}

impl Decision {
    pub fn hypothesis(self) -> usize {
        match self {
            Decision::Search => 0,
            Decision::Track => 1,
        }
    }

    pub fn matches(self, mode: crate::channel::PriMode) -> bool {
        self.hypothesis() == mode.hypothesis()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub gamma: f64,
    /// Upper threshold of the energy detector.
    pub eta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult {
    pub statistic: f64,
    pub decision: Decision,
    pub thresholds: Thresholds,
    /// A pseudo-inverse replaced an ill-conditioned inverse.
    pub pinv_fallback: bool,
}

fn above(statistic: f64, gamma: f64) -> Decision {
    if statistic > gamma {
        Decision::Track
    } else {
        Decision::Search
    }
}

/// ln((1 - P_D) / P_D), the minimum-error GLRT threshold for a known prior.
pub fn glrt_optimal_threshold(p_d: f64) -> Result<f64> {
    if !(p_d > 0.0 && p_d < 1.0) {
        return Err(Error::Domain(format!("prior must be in (0, 1), got {p_d}")));
    }
    Ok(((1.0 - p_d) / p_d).ln())
}

/// M / (L P_R) X0^H X0 with the power inferred from ‖X0‖_F² = L P_R.
pub fn searching_projector(x0: &CMat) -> CMat {
    let m = x0.nrows() as f64;
    let scale = m / frobenius_sq(x0);
    (x0.adjoint() * x0).scale(scale)
}

/// X^H (X X^H)^{-1} X with pseudo-inverse fallback.
pub fn row_space_projector(x: &CMat) -> (CMat, bool) {
    let gram = x * x.adjoint();
    let (inv, fallback) = hermitian_inverse(&gram, MAX_CONDITION, PINV_TOL);
    (x.adjoint() * inv * x, fallback)
}

/// (1/N0) tr(Y C Y^H) for a Hermitian L×L core C.
fn quadratic_trace(y: &CMat, core: &CMat) -> f64 {
    trace_of_product(&(y * core), &y.adjoint()).re
}

/// NLoS GLRT with the core A - B precomputed for repeated use.
#[derive(Debug, Clone)]
pub struct GlrtNlos {
    core: CMat,
    n0: f64,
    gamma: f64,
    pinv_fallback: bool,
}

impl GlrtNlos {
    /// `prior_p_d = Some(p)` uses the optimal threshold, `None` the
    /// prior-free threshold 0.
    pub fn new(x0: &CMat, x1: &CMat, n0: f64, prior_p_d: Option<f64>) -> Result<Self> {
        check_same_shape(x0, x1)?;
        check_noise(n0)?;
        let gamma = match prior_p_d {
            Some(p) => glrt_optimal_threshold(p)?,
            None => 0.0,
        };
        Self::with_threshold(x0, x1, n0, gamma)
    }

    pub fn with_threshold(x0: &CMat, x1: &CMat, n0: f64, gamma: f64) -> Result<Self> {
        check_same_shape(x0, x1)?;
        check_noise(n0)?;
        let (a, pinv_fallback) = row_space_projector(x1);
        if pinv_fallback {
            log::warn!("tracking Gram matrix is ill-conditioned; using pseudo-inverse");
        }
        let core = a - searching_projector(x0);
        Ok(Self {
            core,
            n0,
            gamma,
            pinv_fallback,
        })
    }

    /// A - B.
    pub fn core(&self) -> &CMat {
        &self.core
    }

    pub fn statistic(&self, y: &CMat) -> f64 {
        quadratic_trace(y, &self.core) / self.n0
    }

    pub fn detect(&self, y: &CMat) -> DetectionResult {
        let statistic = self.statistic(y);
        DetectionResult {
            statistic,
            decision: above(statistic, self.gamma),
            thresholds: Thresholds {
                gamma: self.gamma,
                eta: None,
            },
            pinv_fallback: self.pinv_fallback,
        }
    }
}

pub fn glrt_nlos(y: &CMat, x0: &CMat, x1: &CMat, n0: f64, prior_p_d: Option<f64>) -> Result<DetectionResult> {
    let det = GlrtNlos::new(x0, x1, n0, prior_p_d)?;
    check_rx(y, x0)?;
    Ok(det.detect(y))
}

/// Rao test statistic in its general form (any N >= M).
pub fn rao_statistic(y: &CMat, x0: &CMat, p_r: f64, n0: f64) -> Result<f64> {
    check_rx(y, x0)?;
    check_noise(n0)?;
    let (m, l) = x0.shape();
    let p = null_projector(x0, p_r, m, l);
    let z = y * x0.adjoint(); // N×M
    let inner = z.adjoint() * &z; // X0 Y^H Y X0^H
    let (values, vectors) = hermitian_eigen(&inner);
    let lmax = values.last().copied().unwrap_or(0.0);
    let lmin = values.first().copied().unwrap_or(0.0);
    if !(lmax > 0.0) || lmin <= lmax / MAX_CONDITION {
        return Err(Error::NumericalRank(format!(
            "X0 Y^H Y X0^H is singular (eigenvalues {lmin:e}..{lmax:e})"
        )));
    }
    let inv: Vec<f64> = values.iter().map(|v| 1.0 / v).collect();
    let inner_inv = crate::linalg::from_eigen(&inv, &vectors);
    let v = y.adjoint() * &z; // Y^H Y X0^H, L×M
    let t = trace_of_product(&(&inner_inv * v.adjoint()), &(&p * &v)).re;
    Ok(2.0 / n0 * t)
}

/// I_L - M/(L P_R) X0^H X0.
pub fn null_projector(x0: &CMat, p_r: f64, m: usize, l: usize) -> CMat {
    CMat::identity(l, l) - (x0.adjoint() * x0).scale(m as f64 / (l as f64 * p_r))
}

pub fn rao_nlos(y: &CMat, x0: &CMat, p_r: f64, n0: f64, gamma: f64) -> Result<DetectionResult> {
    let statistic = rao_statistic(y, x0, p_r, n0)?;
    Ok(DetectionResult {
        statistic,
        decision: above(statistic, gamma),
        thresholds: Thresholds { gamma, eta: None },
        pinv_fallback: false,
    })
}

/// Rao test for M = N: (2/N0) tr(Y P Y^H).
#[derive(Debug, Clone)]
pub struct RaoSpecial {
    projector: CMat,
    n0: f64,
}

impl RaoSpecial {
    pub fn new(x0: &CMat, p_r: f64, n0: f64) -> Result<Self> {
        check_noise(n0)?;
        let (m, l) = x0.shape();
        if l < m {
            return Err(Error::Precondition(format!("need L >= M, got M={m}, L={l}")));
        }
        Ok(Self {
            projector: null_projector(x0, p_r, m, l),
            n0,
        })
    }

    pub fn projector(&self) -> &CMat {
        &self.projector
    }

    pub fn statistic(&self, y: &CMat) -> f64 {
        2.0 / self.n0 * quadratic_trace(y, &self.projector)
    }
}

pub fn rao_special(y: &CMat, x0: &CMat, p_r: f64, n0: f64, gamma: f64) -> Result<DetectionResult> {
    check_rx(y, x0)?;
    if y.nrows() != x0.nrows() {
        return Err(Error::Precondition(format!(
            "special Rao test needs M = N, got M={}, N={}",
            x0.nrows(),
            y.nrows()
        )));
    }
    let statistic = RaoSpecial::new(x0, p_r, n0)?.statistic(y);
    Ok(DetectionResult {
        statistic,
        decision: above(statistic, gamma),
        thresholds: Thresholds { gamma, eta: None },
        pinv_fallback: false,
    })
}

/// LoS GLRT result with the per-hypothesis angle estimates (degrees).
#[derive(Debug, Clone, PartialEq)]
pub struct LosGlrtResult {
    pub detection: DetectionResult,
    pub theta_search: f64,
    pub theta_track: f64,
}

/// (1/N0) (min_θ f(Y;θ,X0) - min_θ f(Y;θ,X1)).
#[allow(clippy::too_many_arguments)]
pub fn glrt_los(
    y: &CMat,
    x0: &CMat,
    x1: &CMat,
    n0: f64,
    gamma: f64,
    grid: &AngleGrid,
    radar: &ArrayGeometry,
    bs: &ArrayGeometry,
) -> Result<LosGlrtResult> {
    check_same_shape(x0, x1)?;
    check_rx(y, x0)?;
    check_noise(n0)?;
    let fit = |x: &CMat| {
        let cost = LosCost::new(y, x, radar, bs);
        minimize_angle(grid, |t| cost.eval(t))
            .ok_or_else(|| Error::EstimationFailure("every grid angle had a degenerate beampattern".into()))
    };
    let (t0, f0) = fit(x0)?;
    let (t1, f1) = fit(x1)?;
    let statistic = (f0 - f1) / n0;
    Ok(LosGlrtResult {
        detection: DetectionResult {
            statistic,
            decision: above(statistic, gamma),
            thresholds: Thresholds { gamma, eta: None },
            pinv_fallback: false,
        },
        theta_search: t0,
        theta_track: t1,
    })
}

/// Mean received power T_E = (1/L) tr(Y Y^H).
pub fn energy_statistic(y: &CMat) -> f64 {
    frobenius_sq(y) / y.ncols() as f64
}

/// Default thresholds N (P_R/2 + N0) and N (2 P_R + N0).
pub fn default_energy_thresholds(n: usize, p_r: f64, n0: f64) -> Thresholds {
    let n = n as f64;
    Thresholds {
        gamma: n * (p_r / 2.0 + n0),
        eta: Some(n * (2.0 * p_r + n0)),
    }
}

pub fn check_energy_thresholds(gamma: f64, eta: f64) -> Result<()> {
    if !(gamma >= 0.0 && eta >= gamma) {
        return Err(Error::InvalidThresholds { gamma, eta });
    }
    Ok(())
}

/// Energy detector: H0 iff T_E ∈ [gamma, eta].
pub fn energy_detector(y: &CMat, gamma: f64, eta: f64) -> Result<DetectionResult> {
    check_energy_thresholds(gamma, eta)?;
    let statistic = energy_statistic(y);
    Ok(DetectionResult {
        statistic,
        decision: energy_decision(statistic, gamma, eta),
        thresholds: Thresholds {
            gamma,
            eta: Some(eta),
        },
        pinv_fallback: false,
    })
}

pub fn energy_decision(statistic: f64, gamma: f64, eta: f64) -> Decision {
    if statistic >= gamma && statistic <= eta {
        Decision::Search
    } else {
        Decision::Track
    }
}

fn check_noise(n0: f64) -> Result<()> {
    if !(n0 > 0.0) || !n0.is_finite() {
        return Err(Error::Validation(format!("noise power must be positive, got {n0}")));
    }
    Ok(())
}

fn check_same_shape(x0: &CMat, x1: &CMat) -> Result<()> {
    if x0.shape() != x1.shape() {
        return Err(Error::InvalidDimensions(format!(
            "waveforms differ in shape: {:?} vs {:?}",
            x0.shape(),
            x1.shape()
        )));
    }
    Ok(())
}

fn check_rx(y: &CMat, x0: &CMat) -> Result<()> {
    if y.ncols() != x0.ncols() {
        return Err(Error::InvalidDimensions(format!(
            "received matrix has {} snapshots, waveform {}",
            y.ncols(),
            x0.ncols()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::rad;
    use crate::channel::{los_channel_matrix, sample_nlos_channel, synthesize_rx_with};
    use crate::linalg::{c, frobenius};
    use crate::rng::{complex_gaussian, rng_from_seed};
    use crate::waveform::{covariance_to_waveform, searching_waveform};

    fn generic_tracking(m: usize, l: usize, seed: u64) -> CMat {
        let f = complex_gaussian(&mut rng_from_seed(seed), m, m, 1.0);
        let r = &f * f.adjoint();
        let r = r.scale(1.0 / r.trace().re);
        covariance_to_waveform(&r, l, seed + 1).unwrap()
    }

    #[test]
    fn glrt_noise_free_decisions() {
        let (m, n, l) = (4, 5, 12);
        let x0 = searching_waveform(m, l, 1.0, 1).unwrap();
        let x1 = generic_tracking(m, l, 2);
        let g = sample_nlos_channel(n, m, 3).unwrap();
        let r0 = glrt_nlos(&(&g * &x0), &x0, &x1, 0.1, None).unwrap();
        assert!(r0.statistic < 0.0);
        assert_eq!(r0.decision, Decision::Search);
        let r1 = glrt_nlos(&(&g * &x1), &x0, &x1, 0.1, None).unwrap();
        assert!(r1.statistic > 0.0);
        assert_eq!(r1.decision, Decision::Track);
    }

    #[test]
    fn glrt_even_prior_has_zero_threshold() {
        assert_eq!(glrt_optimal_threshold(0.5).unwrap(), 0.0);
        assert!((glrt_optimal_threshold(0.9).unwrap() - (1.0f64 / 9.0).ln()).abs() < 1e-15);
        assert!(glrt_optimal_threshold(1.0).is_err());
    }

    #[test]
    fn glrt_scales_with_noise_power() {
        let (m, n, l) = (3, 4, 8);
        let x0 = searching_waveform(m, l, 1.0, 4).unwrap();
        let x1 = generic_tracking(m, l, 5);
        let y = complex_gaussian(&mut rng_from_seed(6), n, l, 1.0);
        let a = glrt_nlos(&y, &x0, &x1, 0.5, None).unwrap();
        let b = glrt_nlos(&y, &x0, &x1, 1.5, None).unwrap();
        assert!((a.statistic / 3.0 - b.statistic).abs() < 1e-12 * a.statistic.abs().max(1.0));
        assert_eq!(a.decision, b.decision);
    }

    #[test]
    fn rao_nonnegative_and_zero_without_noise_under_h0() {
        let (m, n, l, p_r) = (4, 6, 10, 1.0);
        let x0 = searching_waveform(m, l, p_r, 7).unwrap();
        let g = sample_nlos_channel(n, m, 8).unwrap();
        let t = rao_statistic(&(&g * &x0), &x0, p_r, 0.2).unwrap();
        assert!(t.abs() < 1e-9, "{t}");
        let mut rng = rng_from_seed(9);
        for _ in 0..20 {
            let y = synthesize_rx_with(&mut rng, &g, &generic_tracking(m, l, 10), 0.3).unwrap();
            assert!(rao_statistic(&y, &x0, p_r, 0.3).unwrap() >= -1e-9);
        }
    }

    #[test]
    fn rao_general_equals_special_when_square() {
        let (m, l, p_r, n0) = (5, 9, 2.0, 0.4);
        let x0 = searching_waveform(m, l, p_r, 11).unwrap();
        let y = complex_gaussian(&mut rng_from_seed(12), m, l, 1.0);
        let general = rao_statistic(&y, &x0, p_r, n0).unwrap();
        let special = rao_special(&y, &x0, p_r, n0, 0.0).unwrap().statistic;
        assert!((general - special).abs() < 1e-8 * special.abs(), "{general} vs {special}");
    }

    #[test]
    fn rao_projector_is_idempotent() {
        let x0 = searching_waveform(16, 20, 1.0, 13).unwrap();
        let det = RaoSpecial::new(&x0, 1.0, 1.0).unwrap();
        let p = det.projector();
        assert!(frobenius(&(p * p - p)) < 1e-10);
        assert!((p.trace().re - 4.0).abs() < 1e-10);
    }

    #[test]
    fn rao_special_requires_square() {
        let x0 = searching_waveform(3, 6, 1.0, 1).unwrap();
        let y = complex_gaussian(&mut rng_from_seed(1), 4, 6, 1.0);
        assert!(matches!(rao_special(&y, &x0, 1.0, 1.0, 0.0), Err(Error::Precondition(_))));
    }

    #[test]
    fn rao_singular_inner_matrix() {
        let x0 = searching_waveform(3, 6, 1.0, 1).unwrap();
        let y = CMat::zeros(4, 6);
        assert!(matches!(rao_statistic(&y, &x0, 1.0, 1.0), Err(Error::NumericalRank(_))));
    }

    #[test]
    fn rao_special_unitary_invariance() {
        let (m, l) = (4, 9);
        let x0 = searching_waveform(m, l, 1.0, 14).unwrap();
        let y = complex_gaussian(&mut rng_from_seed(15), m, l, 1.0);
        let u = crate::waveform::orthonormal_rows(&mut rng_from_seed(16), m, m).unwrap();
        let a = rao_special(&y, &x0, 1.0, 0.7, 0.0).unwrap().statistic;
        let b = rao_special(&(&u * &y), &x0, 1.0, 0.7, 0.0).unwrap().statistic;
        assert!((a - b).abs() < 1e-8 * a.abs());
    }

    #[test]
    fn glrt_los_noise_free() {
        let (m, n, l) = (4, 6, 16);
        let radar = ArrayGeometry::half_wavelength(m).unwrap();
        let bs = ArrayGeometry::half_wavelength(n).unwrap();
        let x0 = searching_waveform(m, l, 1.0, 17).unwrap();
        let x1 = generic_tracking(m, l, 18);
        let g = los_channel_matrix(c(0.8, 0.6), rad(20.0), &radar, &bs).unwrap();
        let grid = AngleGrid::default();
        let r0 = glrt_los(&(&g * &x0), &x0, &x1, 0.1, 0.0, &grid, &radar, &bs).unwrap();
        assert!(r0.detection.statistic <= 1e-9);
        assert_eq!(r0.detection.decision, Decision::Search);
        assert!((r0.theta_search - 20.0).abs() < 1e-2);
        let r1 = glrt_los(&(&g * &x1), &x0, &x1, 0.1, 0.0, &grid, &radar, &bs).unwrap();
        assert_eq!(r1.detection.decision, Decision::Track);
    }

    #[test]
    fn energy_detector_rules() {
        let (n, l, p_r, n0) = (16, 20, 1.0, 0.1);
        let th = default_energy_thresholds(n, p_r, n0);
        assert!((th.gamma - 16.0 * 0.6).abs() < 1e-12);
        assert!((th.eta.unwrap() - 16.0 * 2.1).abs() < 1e-12);
        let noise = complex_gaussian(&mut rng_from_seed(19), n, l, n0);
        let r = energy_detector(&noise, th.gamma, th.eta.unwrap()).unwrap();
        assert_eq!(r.decision, Decision::Track);
        assert!(matches!(energy_detector(&noise, 2.0, 1.0), Err(Error::InvalidThresholds { .. })));
        // boundary values count as H0
        assert_eq!(energy_decision(1.0, 1.0, 2.0), Decision::Search);
        assert_eq!(energy_decision(2.0, 1.0, 2.0), Decision::Search);
    }

    #[test]
    fn energy_detector_omni_los() {
        let (m, n, l, p_r, n0) = (16, 16, 20, 1.0, 0.1);
        let radar = ArrayGeometry::half_wavelength(m).unwrap();
        let bs = ArrayGeometry::half_wavelength(n).unwrap();
        let x0 = searching_waveform(m, l, p_r, 20).unwrap();
        let g = los_channel_matrix(c(0.0, 1.0), rad(20.0), &radar, &bs).unwrap();
        let y = synthesize_rx_with(&mut rng_from_seed(21), &g, &x0, n0).unwrap();
        let th = default_energy_thresholds(n, p_r, n0);
        let r = energy_detector(&y, th.gamma, th.eta.unwrap()).unwrap();
        assert_eq!(r.decision, Decision::Search);
    }

    #[test]
    fn energy_permutation_invariance() {
        let y = complex_gaussian(&mut rng_from_seed(22), 3, 7, 1.0);
        let mut p = y.clone();
        p.swap_columns(0, 5);
        p.swap_columns(2, 3);
        assert!((energy_statistic(&y) - energy_statistic(&p)).abs() < 1e-12);
    }
}

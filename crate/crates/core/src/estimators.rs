//! Channel estimation after the mode has been identified.

use num_complex::Complex64;

use crate::array::{quad_form, ArrayGeometry};
use crate::detectors::{MAX_CONDITION, PINV_TOL};
use crate::error::{Error, Result};
use crate::linalg::{frobenius_sq, hermitian_inverse, CMat};
use crate::los_fit::{minimize_angle, AngleGrid, LosCost};

#[derive(Debug, Clone, PartialEq)]
pub struct NlosEstimate {
    pub g_hat: CMat,
    /// X X^H was pseudo-inverted.
    pub pinv_fallback: bool,
}

/// Least-squares / ML estimate Ĝ = Y X^H (X X^H)^{-1}.
pub fn mle_nlos(y: &CMat, x: &CMat) -> Result<NlosEstimate> {
    if y.ncols() != x.ncols() {
        return Err(Error::InvalidDimensions(format!(
            "Y has {} snapshots, X has {}",
            y.ncols(),
            x.ncols()
        )));
    }
    let gram = x * x.adjoint();
    let (inv, pinv_fallback) = hermitian_inverse(&gram, MAX_CONDITION, PINV_TOL);
    if pinv_fallback {
        log::debug!("waveform Gram matrix is rank deficient; estimating with pseudo-inverse");
    }
    Ok(NlosEstimate {
        g_hat: y * x.adjoint() * inv,
        pinv_fallback,
    })
}

/// Shortcut M/(L P_R) Y X0^H, valid when X0 X0^H = (L P_R / M) I.
pub fn mle_nlos_orthogonal(y: &CMat, x0: &CMat, p_r: f64) -> CMat {
    let (m, l) = x0.shape();
    (y * x0.adjoint()).scale(m as f64 / (l as f64 * p_r))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PathGain {
    /// Complex gain from the ML fit.
    Complex(Complex64),
    /// Squared magnitude from the blind fit.
    Power(f64),
}

impl PathGain {
    pub fn power(&self) -> f64 {
        match *self {
            PathGain::Complex(a) => a.norm_sqr(),
            PathGain::Power(p) => p,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LosEstimate {
    pub theta_hat: f64,
    pub gain: PathGain,
    pub cost_at_min: f64,
}

/// Joint ML estimate of (α, θ) for the LoS channel with known waveform X.
pub fn mle_los(
    y: &CMat,
    x: &CMat,
    grid: &AngleGrid,
    radar: &ArrayGeometry,
    bs: &ArrayGeometry,
) -> Result<LosEstimate> {
    check_los_dims(y, x, radar, bs)?;
    if frobenius_sq(x) == 0.0 {
        return Err(Error::Validation("waveform is identically zero".into()));
    }
    let cost = LosCost::new(y, x, radar, bs);
    let (theta_hat, cost_at_min) = minimize_angle(grid, |t| cost.eval(t))
        .ok_or_else(|| Error::EstimationFailure("no grid angle had a usable beampattern".into()))?;
    let alpha = cost
        .alpha(theta_hat)
        .ok_or_else(|| Error::EstimationFailure(format!("degenerate beampattern at {theta_hat} deg")))?;
    Ok(LosEstimate {
        theta_hat,
        gain: PathGain::Complex(alpha),
        cost_at_min,
    })
}

/// tr(Y Y^H)/(L N P_R) - N0/P_R without clamping.
pub fn blind_gain_raw(y: &CMat, p_r: f64, n0: f64) -> f64 {
    let (n, l) = y.shape();
    frobenius_sq(y) / (l as f64 * n as f64 * p_r) - n0 / p_r
}

/// LoS estimate that only uses the fact that the searching waveform was sent.
pub fn blind_los_estimate(y: &CMat, p_r: f64, n0: f64, grid: &AngleGrid, bs: &ArrayGeometry) -> Result<LosEstimate> {
    let (n, l) = y.shape();
    if n != bs.num_elements() {
        return Err(Error::InvalidDimensions(format!(
            "Y has {n} rows, BS array has {} elements",
            bs.num_elements()
        )));
    }
    if !(p_r > 0.0) || !(n0 >= 0.0) {
        return Err(Error::Validation(format!("need P_R > 0 and N0 >= 0, got {p_r}, {n0}")));
    }
    let s = (y * y.adjoint()).scale(1.0 / (l as f64 * p_r));
    let gain = blind_gain_raw(y, p_r, n0).max(0.0);
    // ‖S - c bb^H‖² = ‖S‖² - 2c b^H S b + c² N², so for c > 0 the fit is the
    // peak of b^H S b. With c = 0 every angle fits equally; the peak is kept.
    let (theta_hat, _) = minimize_angle(grid, |t| {
        let b = bs.steering_unchecked(crate::array::rad(t));
        Some(-quad_form(&s, &b))
    })
    .ok_or_else(|| Error::EstimationFailure("empty angle grid".into()))?;
    let b = bs.steering_unchecked(crate::array::rad(theta_hat));
    let peak = quad_form(&s, &b);
    let nf = n as f64;
    let cost = (frobenius_sq(&s) - 2.0 * gain * peak + gain * gain * nf * nf).max(0.0);
    Ok(LosEstimate {
        theta_hat,
        gain: PathGain::Power(gain),
        cost_at_min: cost,
    })
}

/// ‖Â - A‖_F².
pub fn squared_error(estimate: &CMat, truth: &CMat) -> Result<f64> {
    if estimate.shape() != truth.shape() {
        return Err(Error::InvalidDimensions(format!(
            "estimate {:?} vs truth {:?}",
            estimate.shape(),
            truth.shape()
        )));
    }
    Ok(frobenius_sq(&(estimate - truth)))
}

pub fn squared_error_scalar(estimate: f64, truth: f64) -> f64 {
    (estimate - truth).powi(2)
}

fn check_los_dims(y: &CMat, x: &CMat, radar: &ArrayGeometry, bs: &ArrayGeometry) -> Result<()> {
    if y.ncols() != x.ncols() || x.nrows() != radar.num_elements() || y.nrows() != bs.num_elements() {
        return Err(Error::InvalidDimensions(format!(
            "Y {:?}, X {:?}, arrays M={} N={}",
            y.shape(),
            x.shape(),
            radar.num_elements(),
            bs.num_elements()
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
    use crate::waveform::searching_waveform;

    #[test]
    fn nlos_noise_free_recovery() {
        let x = searching_waveform(5, 20, 1.0, 1).unwrap();
        let g = sample_nlos_channel(4, 5, 2).unwrap();
        let est = mle_nlos(&(&g * &x), &x).unwrap();
        assert!(frobenius(&(&est.g_hat - &g)) < 1e-8);
        assert!(!est.pinv_fallback);
    }

    #[test]
    fn orthogonal_shortcut_matches() {
        let x = searching_waveform(5, 20, 2.0, 3).unwrap();
        let y = complex_gaussian(&mut rng_from_seed(4), 4, 20, 1.0);
        let a = mle_nlos(&y, &x).unwrap().g_hat;
        let b = mle_nlos_orthogonal(&y, &x, 2.0);
        assert!(frobenius(&(a - b)) < 1e-10);
    }

    #[test]
    fn nlos_residual_orthogonal_to_rowspace() {
        let x = complex_gaussian(&mut rng_from_seed(5), 3, 11, 1.0);
        let y = complex_gaussian(&mut rng_from_seed(6), 4, 11, 1.0);
        let g = mle_nlos(&y, &x).unwrap().g_hat;
        let r = (&y - &g * &x) * x.adjoint();
        assert!(frobenius(&r) < 1e-8 * frobenius(&y));
    }

    #[test]
    fn los_noise_free_recovery() {
        let radar = ArrayGeometry::half_wavelength(4).unwrap();
        let bs = ArrayGeometry::half_wavelength(4).unwrap();
        let x = searching_waveform(4, 20, 1.0, 7).unwrap();
        let g = los_channel_matrix(c(1.0, 0.0), rad(20.0), &radar, &bs).unwrap();
        let y = &g * &x;
        let est = mle_los(&y, &x, &AngleGrid::default(), &radar, &bs).unwrap();
        assert!((est.theta_hat - 20.0).abs() < 1e-2, "{}", est.theta_hat);
        match est.gain {
            PathGain::Complex(a) => assert!((a - c(1.0, 0.0)).norm() < 1e-3, "{a}"),
            _ => unreachable!(),
        }
        assert!(est.cost_at_min <= 1e-10 * frobenius_sq(&y));
    }

    #[test]
    fn los_rejects_zero_waveform() {
        let radar = ArrayGeometry::half_wavelength(3).unwrap();
        let x = CMat::zeros(3, 5);
        let y = CMat::zeros(3, 5);
        assert!(mle_los(&y, &x, &AngleGrid::default(), &radar, &radar).is_err());
    }

    #[test]
    fn blind_noise_free() {
        let (m, n, l) = (4, 6, 20);
        let radar = ArrayGeometry::half_wavelength(m).unwrap();
        let bs = ArrayGeometry::half_wavelength(n).unwrap();
        let x = searching_waveform(m, l, 1.0, 8).unwrap();
        let g = los_channel_matrix(c(0.6, 0.8), rad(-35.0), &radar, &bs).unwrap();
        let est = blind_los_estimate(&(&g * &x), 1.0, 0.0, &AngleGrid::default(), &bs).unwrap();
        assert!((est.gain.power() - 1.0).abs() < 1e-10);
        assert!((est.theta_hat + 35.0).abs() < 0.5);
    }

    #[test]
    fn blind_gain_unbiased_under_pure_noise() {
        let (n, l, n0) = (4, 20, 0.3);
        let mut rng = rng_from_seed(9);
        let g = CMat::zeros(n, 4);
        let x = searching_waveform(4, l, 1.0, 10).unwrap();
        let trials = 4000;
        let vals: Vec<f64> = (0..trials)
            .map(|_| blind_gain_raw(&synthesize_rx_with(&mut rng, &g, &x, n0).unwrap(), 1.0, n0))
            .collect();
        let mean = vals.iter().sum::<f64>() / trials as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
        assert!(mean.abs() < 3.0 * (var / trials as f64).sqrt(), "{mean}");
    }

    #[test]
    fn squared_error_basics() {
        let a = complex_gaussian(&mut rng_from_seed(11), 3, 4, 1.0);
        let e = complex_gaussian(&mut rng_from_seed(12), 3, 4, 1.0);
        assert_eq!(squared_error(&a, &a).unwrap(), 0.0);
        assert!((squared_error(&(&a + &e), &a).unwrap() - frobenius_sq(&e)).abs() < 1e-12);
        assert!(squared_error(&a, &CMat::zeros(4, 3)).is_err());
        assert_eq!(squared_error_scalar(3.0, 1.0), 4.0);
    }
}

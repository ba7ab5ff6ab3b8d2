//! Channel estimators: linearity, invariances and the closed-form MSE.

mod common;

use num_complex::Complex64;
use proptest::prelude::*;

use coexist_core::array::ArrayGeometry;
use coexist_core::channel::{los_channel_matrix, sample_nlos_channel_with, synthesize_rx_with};
use coexist_core::estimators::{mle_los, mle_nlos, squared_error};
use coexist_core::los_fit::AngleGrid;
use coexist_core::rng::{complex_gaussian, rng_for, rng_from_seed, Stream};
use coexist_core::theory::{mse_theory, mse_theory_orthogonal, mse_theory_waveform};
use coexist_core::waveform::{
    covariance_to_waveform, design_tracking_covariance, diagonal_loading, searching_waveform, BeampatternSpec,
    SolverOptions,
};
use coexist_core::CMat;

use common::{n0_of, toeplitz_covariance};

fn max_abs(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn nlos_estimate_is_linear_in_y(seed in 0u64..10_000, re in -3.0f64..3.0, im in -3.0f64..3.0) {
        let mut rng = rng_from_seed(seed);
        let x = complex_gaussian(&mut rng, 4, 9, 1.0);
        let y1 = complex_gaussian(&mut rng, 5, 9, 1.0);
        let y2 = complex_gaussian(&mut rng, 5, 9, 1.0);
        let c = Complex64::new(re, im);
        let lhs = mle_nlos(&(&y1 + &y2 * c), &x).unwrap().g_hat;
        let rhs = mle_nlos(&y1, &x).unwrap().g_hat + mle_nlos(&y2, &x).unwrap().g_hat * c;
        prop_assert!(max_abs(&(lhs - &rhs)) <= 1e-9 * (1.0 + max_abs(&rhs)));
    }

    // tr(R^{-1}) >= M² / tr(R): no full-rank tracking covariance beats the
    // orthogonal searching waveform.
    #[test]
    fn searching_waveform_minimises_mse(seed in 0u64..10_000, m in 2usize..8) {
        let mut rng = rng_from_seed(seed);
        let b = complex_gaussian(&mut rng, m, m + 2, 1.0);
        let r = &b * b.adjoint();
        let d = CMat::from_diagonal(&r.diagonal().map(|v| Complex64::new(1.0 / (m as f64 * v.re).sqrt(), 0.0)));
        let r = &d * r * &d;
        let track = mse_theory(&r, 0.1, 6, 20).unwrap().mse;
        prop_assert!(track >= mse_theory_orthogonal(0.1, m, 6, 20, 1.0) * (1.0 - 1e-12));
    }
}

#[test]
fn los_angle_is_invariant_to_complex_scaling() {
    let radar = ArrayGeometry::half_wavelength(4).unwrap();
    let bs = ArrayGeometry::half_wavelength(8).unwrap();
    let grid = AngleGrid::default();
    for k in 0..10u64 {
        let mut rng = rng_from_seed(100 + k);
        let x = searching_waveform(4, 12, 1.0, k).unwrap();
        let theta = -60.0 + 12.0 * k as f64;
        let g = los_channel_matrix(Complex64::new(0.7, 0.4), theta.to_radians(), &radar, &bs).unwrap();
        let y = synthesize_rx_with(&mut rng, &g, &x, 0.5).unwrap();
        let base = mle_los(&y, &x, &grid, &radar, &bs).unwrap().theta_hat;
        for c in [Complex64::new(-2.5, 0.0), Complex64::new(0.0, 0.3), Complex64::new(1e3, -7e2)] {
            let scaled = mle_los(&(&y * c), &x, &grid, &radar, &bs).unwrap().theta_hat;
            assert!((scaled - base).abs() < 1e-6, "instance {k}: {scaled} vs {base}");
        }
    }
}

#[test]
fn nlos_mse_matches_closed_form() {
    let (m, n, l, p_r) = (5, 6, 20, 1.0);
    let n0 = n0_of(5.0, p_r);
    for x in [
        searching_waveform(m, l, p_r, 3).unwrap(),
        covariance_to_waveform(&toeplitz_covariance(m, p_r, 0.6, -20.0), l, 4).unwrap(),
    ] {
        let trials = 5000u64;
        let total: f64 = (0..trials)
            .map(|i| {
                let g = sample_nlos_channel_with(&mut rng_for(8, i, Stream::Channel), n, m).unwrap();
                let y = synthesize_rx_with(&mut rng_for(8, i, Stream::Noise), &g, &x, n0).unwrap();
                squared_error(&mle_nlos(&y, &x).unwrap().g_hat, &g).unwrap()
            })
            .sum();
        let empirical = total / trials as f64;
        let theory = mse_theory_waveform(&x, n0, n).unwrap().mse;
        assert!((empirical - theory).abs() <= 0.05 * theory, "{empirical} vs {theory}");
    }
}

#[test]
fn designed_tracking_waveform_is_worse_than_searching() {
    let spec = BeampatternSpec::with_defaults(0.0, 30.0).unwrap();
    let design = design_tracking_covariance(&spec, 4, 1.0, &SolverOptions::default()).unwrap();
    let r = diagonal_loading(&design.covariance, 1e-6, 1.0).unwrap();
    let track = mse_theory(&r, 0.1, 8, 20).unwrap();
    assert!(!track.pinv_fallback);
    assert!(track.mse > mse_theory_orthogonal(0.1, 4, 8, 20, 1.0));
}

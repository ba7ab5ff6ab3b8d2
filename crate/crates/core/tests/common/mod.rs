#![allow(dead_code)]

use num_complex::Complex64;

use coexist_core::channel::sample_nlos_channel;
use coexist_core::waveform::{covariance_to_waveform, searching_waveform};
use coexist_core::CMat;

/// Full-rank tracking-like covariance: (P_R/M) ρ^|i-j| with a phase ramp
/// steering it towards `theta_deg`.
pub fn toeplitz_covariance(m: usize, p_r: f64, rho: f64, theta_deg: f64) -> CMat {
    let phase = std::f64::consts::PI * theta_deg.to_radians().sin();
    CMat::from_fn(m, m, |i, j| {
        let d = i as f64 - j as f64;
        Complex64::from_polar(p_r / m as f64 * rho.powf(d.abs()), phase * d)
    })
}

pub struct NlosSetup {
    pub x0: CMat,
    pub x1: CMat,
    pub g: CMat,
}

pub fn nlos_setup(m: usize, n: usize, l: usize, p_r: f64, seed: u64) -> NlosSetup {
    NlosSetup {
        x0: searching_waveform(m, l, p_r, seed).unwrap(),
        x1: covariance_to_waveform(&toeplitz_covariance(m, p_r, 0.9, 10.0), l, seed + 1).unwrap(),
        g: sample_nlos_channel(n, m, seed + 2).unwrap(),
    }
}

pub fn n0_of(snr_db: f64, p_r: f64) -> f64 {
    p_r * 10f64.powf(-snr_db / 10.0)
}

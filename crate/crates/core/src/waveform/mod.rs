//! Radar probing waveforms: the orthogonal searching waveform, the tracking
//! covariance design and the covariance-to-waveform factorisation.

mod sdp;

pub use sdp::{design_tracking_covariance, BeampatternSpec, SolverOptions, TrackingDesign};

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{frobenius, hermitian_defect, hermitian_eigen, CMat};
use crate::rng::complex_gaussian;

/// Search/track waveform pair sharing a pulse length and power budget.
#[derive(Debug, Clone)]
pub struct WaveformSet {
    /// Searching waveform, X0 X0^H = (L P_R / M) I.
    pub x0: CMat,
    /// Tracking waveform with (1/L) X1 X1^H = `r_track`.
    pub x1: CMat,
    pub r_track: CMat,
    pub pulse_length: usize,
    pub total_power: f64,
}

impl WaveformSet {
    pub fn num_antennas(&self) -> usize {
        self.x0.nrows()
    }

    /// Build both waveforms from a tracking covariance.
    pub fn generate<R: Rng + ?Sized>(rng: &mut R, r_track: CMat, pulse_length: usize, total_power: f64) -> Result<Self> {
        let m = r_track.nrows();
        let x0 = searching_waveform_with(rng, m, pulse_length, total_power)?;
        let x1 = covariance_to_waveform_with(rng, &r_track, pulse_length)?;
        Ok(Self {
            x0,
            x1,
            r_track,
            pulse_length,
            total_power,
        })
    }

    /// Check the Gram identities of both waveforms.
    pub fn validate(&self) -> Result<()> {
        let m = self.num_antennas();
        let l = self.pulse_length as f64;
        let target = CMat::identity(m, m).scale(l * self.total_power / m as f64);
        let gram0 = &self.x0 * self.x0.adjoint();
        if frobenius(&(gram0 - target)) > 1e-8 * l * self.total_power {
            return Err(Error::Validation("searching waveform is not orthogonal".into()));
        }
        let gram1 = (&self.x1 * self.x1.adjoint()).scale(1.0 / l);
        if frobenius(&(gram1 - &self.r_track)) > 1e-6 * self.total_power.max(1.0) {
            return Err(Error::Validation("tracking waveform does not match its covariance".into()));
        }
        Ok(())
    }
}

/// (1 - ε) R + ε (P_R / M) I: keeps the diagonal and trace of a feasible
/// design while lifting its null space, so that X1 X1^H is invertible.
pub fn diagonal_loading(r: &CMat, epsilon: f64, total_power: f64) -> Result<CMat> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::Domain(format!("loading must be in [0, 1], got {epsilon}")));
    }
    let m = r.nrows();
    Ok(r.scale(1.0 - epsilon) + CMat::identity(m, m).scale(epsilon * total_power / m as f64))
}

/// M×L matrix with orthonormal rows, from QR of an i.i.d. complex Gaussian matrix.
pub fn orthonormal_rows<R: Rng + ?Sized>(rng: &mut R, m: usize, l: usize) -> Result<CMat> {
    if m == 0 || l < m {
        return Err(Error::InvalidDimensions(format!(
            "need L >= M >= 1, got M={m}, L={l}"
        )));
    }
    let g = complex_gaussian(rng, l, m, 1.0);
    let q: DMatrix<_> = g.qr().q();
    Ok(q.adjoint())
}

/// Orthogonal searching waveform sqrt(L P_R / M) U with U U^H = I.
pub fn searching_waveform(m: usize, l: usize, p_r: f64, seed: u64) -> Result<CMat> {
    searching_waveform_with(&mut crate::rng::rng_from_seed(seed), m, l, p_r)
}

pub fn searching_waveform_with<R: Rng + ?Sized>(rng: &mut R, m: usize, l: usize, p_r: f64) -> Result<CMat> {
    if !(p_r > 0.0) {
        return Err(Error::Validation(format!("transmit power must be positive, got {p_r}")));
    }
    let u = orthonormal_rows(rng, m, l)?;
    Ok(u.scale((l as f64 * p_r / m as f64).sqrt()))
}

/// Waveform X = sqrt(L) F U with F F^H = R (eigen square root).
pub fn covariance_to_waveform(r: &CMat, l: usize, seed: u64) -> Result<CMat> {
    covariance_to_waveform_with(&mut crate::rng::rng_from_seed(seed), r, l)
}

pub fn covariance_to_waveform_with<R: Rng + ?Sized>(rng: &mut R, r: &CMat, l: usize) -> Result<CMat> {
    let f = covariance_sqrt(r)?;
    let u = orthonormal_rows(rng, r.nrows(), l)?;
    Ok((f * u).scale((l as f64).sqrt()))
}

/// Hermitian square root F = V Λ^{1/2} with tiny negative eigenvalues clamped.
pub fn covariance_sqrt(r: &CMat) -> Result<CMat> {
    crate::linalg::check_square(r, "covariance")?;
    if hermitian_defect(r) > 1e-8 {
        return Err(Error::Validation("covariance is not Hermitian".into()));
    }
    let (values, vectors) = hermitian_eigen(r);
    let lmax = values.iter().cloned().fold(0.0_f64, |a, b| a.max(b.abs()));
    let lmin = values.first().copied().unwrap_or(0.0);
    if lmin < -1e-8 * lmax {
        return Err(Error::NotPsd {
            min_eig: lmin,
            max_eig: lmax,
        });
    }
    let mut f = vectors;
    for (j, &v) in values.iter().enumerate() {
        f.column_mut(j).scale_mut(v.max(0.0).sqrt());
    }
    Ok(f)
}

//! Uniform linear array geometry: steering vectors and transmit beampatterns.
//!
//! Angles are radians here. Conversion from the degree-valued external
//! interfaces happens at the call sites that parse user input.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{frobenius, hermitian_defect, CMat, CVec};

/// Relative Hermitian tolerance accepted by [`beampattern`].
pub const HERMITIAN_TOL: f64 = 1e-8;

/// Uniform linear array with element spacing in wavelengths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayGeometry {
    num_elements: usize,
    normalized_spacing: f64,
}

impl ArrayGeometry {
    pub fn new(num_elements: usize, normalized_spacing: f64) -> Result<Self> {
        if num_elements == 0 {
            return Err(Error::Validation("array needs at least one element".into()));
        }
        if !(normalized_spacing > 0.0) || !normalized_spacing.is_finite() {
            return Err(Error::Validation(format!(
                "element spacing must be positive, got {normalized_spacing}"
            )));
        }
        Ok(Self {
            num_elements,
            normalized_spacing,
        })
    }

    /// Half-wavelength ULA.
    pub fn half_wavelength(num_elements: usize) -> Result<Self> {
        Self::new(num_elements, 0.5)
    }

    pub fn num_elements(&self) -> usize {
        self.num_elements
    }

    pub fn spacing(&self) -> f64 {
        self.normalized_spacing
    }

    /// Steering vector with element k equal to exp(j 2π k d sin θ).
    pub fn steering_vector(&self, angle: f64) -> Result<CVec> {
        check_angle(angle)?;
        Ok(self.steering_unchecked(angle))
    }

    pub(crate) fn steering_unchecked(&self, angle: f64) -> CVec {
        let phase = 2.0 * PI * self.normalized_spacing * angle.sin();
        CVec::from_fn(self.num_elements, |k, _| Complex64::from_polar(1.0, phase * k as f64))
    }
}

/// Free-function form of [`ArrayGeometry::steering_vector`].
pub fn steering_vector(geometry: &ArrayGeometry, angle: f64) -> Result<CVec> {
    geometry.steering_vector(angle)
}

fn check_angle(angle: f64) -> Result<()> {
    // Allow a hair of slack so that degree grids ending at ±90° are accepted.
    if !angle.is_finite() || angle.abs() > FRAC_PI_2 * (1.0 + 1e-12) {
        return Err(Error::Domain(format!(
            "angle {angle} rad outside [-pi/2, pi/2]"
        )));
    }
    Ok(())
}

/// Transmit power a^H(θ) R a(θ) radiated towards `angle`.
pub fn beampattern(covariance: &CMat, geometry: &ArrayGeometry, angle: f64) -> Result<f64> {
    let m = geometry.num_elements();
    if covariance.nrows() != m || covariance.ncols() != m {
        return Err(Error::InvalidDimensions(format!(
            "covariance is {}x{}, array has {m} elements",
            covariance.nrows(),
            covariance.ncols()
        )));
    }
    if hermitian_defect(covariance) > HERMITIAN_TOL {
        return Err(Error::Validation("covariance is not Hermitian".into()));
    }
    let a = geometry.steering_vector(angle)?;
    Ok(clamp_power(quad_form(covariance, &a), frobenius(covariance)))
}

/// Beampattern over a set of angles, skipping the per-call validation.
pub fn beampattern_many(covariance: &CMat, geometry: &ArrayGeometry, angles: &[f64]) -> Result<Vec<f64>> {
    if hermitian_defect(covariance) > HERMITIAN_TOL {
        return Err(Error::Validation("covariance is not Hermitian".into()));
    }
    let norm = frobenius(covariance);
    angles
        .iter()
        .map(|&t| {
            check_angle(t)?;
            Ok(clamp_power(quad_form(covariance, &geometry.steering_unchecked(t)), norm))
        })
        .collect()
}

/// Re(v^H R v).
pub(crate) fn quad_form(r: &CMat, v: &CVec) -> f64 {
    let rv = r * v;
    v.iter().zip(rv.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

fn clamp_power(p: f64, norm: f64) -> f64 {
    // Round-off below -1e-10‖R‖ is left visible rather than hidden.
    if p < 0.0 && p >= -1e-10 * norm {
        0.0
    } else {
        p
    }
}

pub fn deg(rad: f64) -> f64 {
    rad.to_degrees()
}

pub fn rad(deg: f64) -> f64 {
    deg.to_radians()
}

/// Inclusive angle grid in degrees from `start` to `end`.
pub fn degree_grid(start: f64, end: f64, step: f64) -> Vec<f64> {
    let n = ((end - start) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| start + step * i as f64).collect()
}

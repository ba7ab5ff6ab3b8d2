//! Radar operating modes, interfering channel realisations and the BS
//! received-signal model Y = G X + W.

use rand::Rng;

use crate::array::{rad, ArrayGeometry};
use crate::error::{Error, Result};
use crate::linalg::{CMat, ZERO};
use crate::rng::{complex_gaussian, rng_from_seed};

/// Radar mode during one PRI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PriMode {
    Search,
    Track,
}

impl PriMode {
    /// Hypothesis index: 0 for search, 1 for track.
    pub fn hypothesis(self) -> usize {
        match self {
            PriMode::Search => 0,
            PriMode::Track => 1,
        }
    }
}

fn check_probability(p_d: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p_d) {
        return Err(Error::Domain(format!("probability {p_d} outside [0, 1]")));
    }
    Ok(())
}

/// Track with probability `p_d`, search otherwise.
pub fn sample_pri_mode(p_d: f64, seed: u64) -> Result<PriMode> {
    sample_pri_mode_with(&mut rng_from_seed(seed), p_d)
}

pub fn sample_pri_mode_with<R: Rng + ?Sized>(rng: &mut R, p_d: f64) -> Result<PriMode> {
    check_probability(p_d)?;
    // random::<f64>() is in [0, 1), so p_d = 0 never tracks and p_d = 1 always does.
    Ok(if rng.random::<f64>() < p_d {
        PriMode::Track
    } else {
        PriMode::Search
    })
}

/// Rayleigh NLoS channel: i.i.d. CN(0, 1) entries.
pub fn sample_nlos_channel(n: usize, m: usize, seed: u64) -> Result<CMat> {
    sample_nlos_channel_with(&mut rng_from_seed(seed), n, m)
}

pub fn sample_nlos_channel_with<R: Rng + ?Sized>(rng: &mut R, n: usize, m: usize) -> Result<CMat> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidDimensions(format!("channel must be non-empty, got {n}x{m}")));
    }
    Ok(complex_gaussian(rng, n, m, 1.0))
}

/// Rank-one LoS channel α b(θ) a^H(θ), θ in radians.
pub fn los_channel_matrix(
    alpha: num_complex::Complex64,
    theta: f64,
    radar: &ArrayGeometry,
    bs: &ArrayGeometry,
) -> Result<CMat> {
    let a = radar.steering_vector(theta)?;
    let b = bs.steering_vector(theta)?;
    Ok((b * a.adjoint()) * alpha)
}

/// Interfering channel between radar and BS.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelRealization {
    Nlos { g: CMat },
    /// LoS path with gain `alpha` and angle `theta_deg` (degrees).
    Los {
        alpha: num_complex::Complex64,
        theta_deg: f64,
        radar: ArrayGeometry,
        bs: ArrayGeometry,
    },
}

impl ChannelRealization {
    /// Channel matrix G (N×M).
    pub fn matrix(&self) -> Result<CMat> {
        match self {
            ChannelRealization::Nlos { g } => Ok(g.clone()),
            ChannelRealization::Los {
                alpha,
                theta_deg,
                radar,
                bs,
            } => los_channel_matrix(*alpha, rad(*theta_deg), radar, bs),
        }
    }
}

/// Y = G X + W with W i.i.d. CN(0, N0).
pub fn synthesize_rx(channel: &ChannelRealization, x: &CMat, n0: f64, seed: u64) -> Result<CMat> {
    synthesize_rx_with(&mut rng_from_seed(seed), &channel.matrix()?, x, n0)
}

pub fn synthesize_rx_with<R: Rng + ?Sized>(rng: &mut R, g: &CMat, x: &CMat, n0: f64) -> Result<CMat> {
    if g.ncols() != x.nrows() {
        return Err(Error::InvalidDimensions(format!(
            "channel is {}x{} but waveform has {} rows",
            g.nrows(),
            g.ncols(),
            x.nrows()
        )));
    }
    if !(n0 >= 0.0) {
        return Err(Error::Validation(format!("noise power must be >= 0, got {n0}")));
    }
    let mut y = g * x;
    if n0 > 0.0 {
        y += complex_gaussian(rng, g.nrows(), x.ncols(), n0);
    }
    Ok(y)
}

/// Zero channel helper for noise-only experiments.
pub fn zero_channel(n: usize, m: usize) -> CMat {
    CMat::from_element(n, m, ZERO)
}

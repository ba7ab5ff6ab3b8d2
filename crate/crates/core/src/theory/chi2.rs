//! Central and noncentral chi-squared distribution functions.

use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

use crate::error::{Error, Result};

/// Poisson mass left out of the noncentral mixture.
pub const MIXTURE_RESIDUAL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Chi2Law {
    pub dof: u32,
    pub noncentrality: f64,
}

impl Chi2Law {
    pub fn central(dof: u32) -> Self {
        Self { dof, noncentrality: 0.0 }
    }

    pub fn noncentral(dof: u32, noncentrality: f64) -> Self {
        Self { dof, noncentrality }
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        noncentral_chi2_cdf(x, self.dof, self.noncentrality)
    }

    pub fn sf(&self, x: f64) -> Result<f64> {
        noncentral_chi2_sf(x, self.dof, self.noncentrality)
    }

    pub fn mean(&self) -> f64 {
        self.dof as f64 + self.noncentrality
    }
}

fn check(x: f64, dof: u32, lambda: f64) -> Result<()> {
    if dof == 0 {
        return Err(Error::Domain("chi-squared needs at least one degree of freedom".into()));
    }
    if x.is_nan() {
        return Err(Error::Domain("chi-squared argument is NaN".into()));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::Domain(format!("noncentrality must be finite and >= 0, got {lambda}")));
    }
    Ok(())
}

pub fn chi2_cdf(x: f64, dof: u32) -> Result<f64> {
    check(x, dof, 0.0)?;
    Ok(central(x, dof as f64, false))
}

pub fn chi2_sf(x: f64, dof: u32) -> Result<f64> {
    check(x, dof, 0.0)?;
    Ok(central(x, dof as f64, true))
}

fn central(x: f64, dof: f64, upper: bool) -> f64 {
    if x <= 0.0 {
        return if upper { 1.0 } else { 0.0 };
    }
    if x == f64::INFINITY {
        return if upper { 0.0 } else { 1.0 };
    }
    if upper {
        gamma_ur(dof / 2.0, x / 2.0)
    } else {
        gamma_lr(dof / 2.0, x / 2.0)
    }
}

pub fn noncentral_chi2_cdf(x: f64, dof: u32, lambda: f64) -> Result<f64> {
    check(x, dof, lambda)?;
    mixture(x, dof, lambda, false)
}

pub fn noncentral_chi2_sf(x: f64, dof: u32, lambda: f64) -> Result<f64> {
    check(x, dof, lambda)?;
    mixture(x, dof, lambda, true)
}

/// Poisson(λ/2) mixture of central laws with dof + 2j, summed outwards
/// from the modal index so that large λ never underflows.
fn mixture(x: f64, dof: u32, lambda: f64, upper: bool) -> Result<f64> {
    if lambda == 0.0 {
        return Ok(central(x, dof as f64, upper));
    }
    if x <= 0.0 || x == f64::INFINITY {
        return Ok(central(x, dof as f64, upper));
    }
    let mu = lambda / 2.0;
    let k = dof as f64;
    let mode = mu.floor();
    // Weights relative to the mode follow the ratio recurrences
    // w(j+1) = w(j) μ/(j+1) and w(j-1) = w(j) j/μ; the sum is normalised at
    // the end, so the modal weight only needs to be of the right order.
    let w_mode = (mode * mu.ln() - mu - ln_gamma(mode + 1.0)).exp();
    let mut mass = 0.0;
    let mut sum = 0.0;
    let mut w = w_mode;
    let mut j = mode;
    let mut tail_down = 0.0;
    loop {
        mass += w;
        sum += w * central(x, k + 2.0 * j, upper);
        if j == 0.0 {
            break;
        }
        let next = w * j / mu;
        j -= 1.0;
        if next < 1e-18 * w_mode {
            // Remaining terms shrink at least geometrically with ratio j/μ.
            let r = j / mu;
            tail_down = next / (1.0 - r);
            break;
        }
        w = next;
    }
    let mut w = w_mode;
    let mut j = mode;
    let tail_up;
    loop {
        w *= mu / (j + 1.0);
        j += 1.0;
        mass += w;
        sum += w * central(x, k + 2.0 * j, upper);
        if w < 1e-18 * w_mode && j > mu {
            let r = mu / (j + 1.0);
            tail_up = w * r / (1.0 - r);
            break;
        }
    }
    let residual = (tail_down + tail_up) / mass;
    if residual > MIXTURE_RESIDUAL {
        return Err(Error::Internal(format!(
            "noncentral chi-squared mixture left {residual:e} of the Poisson mass"
        )));
    }
    let sum = sum / mass;
    Ok(sum.clamp(0.0, 1.0))
}

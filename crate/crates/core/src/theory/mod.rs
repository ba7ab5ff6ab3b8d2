//! Analytical performance predictions for the detectors and estimators.

pub mod chi2;
pub mod saddle;

use num_complex::Complex64;

pub use chi2::{chi2_cdf, chi2_sf, noncentral_chi2_cdf, noncentral_chi2_sf, Chi2Law};
pub use saddle::{saddlepoint_cdf, SaddleMethod, SaddlePointProblem};

use crate::array::{quad_form, rad, ArrayGeometry};
use crate::detectors::{check_energy_thresholds, null_projector, GlrtNlos, PINV_TOL};
use crate::error::{Error, Result};
use crate::linalg::{frobenius_sq, hermitian_eigen, kron, numerical_rank, pseudo_inverse, CMat};

fn check_prior(p_d: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p_d) {
        return Err(Error::Domain(format!("prior must be in [0, 1], got {p_d}")));
    }
    Ok(())
}

fn check_n0(n0: f64) -> Result<()> {
    if !(n0 > 0.0) || !n0.is_finite() {
        return Err(Error::Validation(format!("noise power must be positive, got {n0}")));
    }
    Ok(())
}

/// (1 - F0(γ))(1 - P_D) + F1(γ) P_D.
fn mix(p_d: f64, cdf_h0: f64, cdf_h1: f64) -> f64 {
    ((1.0 - cdf_h0) * (1.0 - p_d) + cdf_h1 * p_d).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlrtErrorProb {
    pub p_error: f64,
    pub cdf_h0: f64,
    pub cdf_h1: f64,
}

/// NLoS GLRT statistic law for a fixed channel. The spectrum of the L×L core
/// A - B does not depend on the noise level and is computed once.
#[derive(Debug, Clone)]
pub struct GlrtTheory {
    values: Vec<f64>,
    vectors: CMat,
    x0: CMat,
    x1: CMat,
    pub method: SaddleMethod,
}

impl GlrtTheory {
    pub fn new(x0: &CMat, x1: &CMat) -> Result<Self> {
        let det = GlrtNlos::with_threshold(x0, x1, 1.0, 0.0)?;
        let (values, vectors) = hermitian_eigen(det.core());
        Ok(Self {
            values,
            vectors,
            x0: x0.clone(),
            x1: x1.clone(),
            method: SaddleMethod::default(),
        })
    }

    pub fn with_method(mut self, method: SaddleMethod) -> Self {
        self.method = method;
        self
    }

    /// Saddle-point problem of the statistic under H0 (`track = false`) or H1.
    pub fn problem(&self, g: &CMat, track: bool, n0: f64, gamma: f64) -> Result<SaddlePointProblem> {
        check_n0(n0)?;
        let x = if track { &self.x1 } else { &self.x0 };
        if g.ncols() != x.nrows() {
            return Err(Error::InvalidDimensions(format!(
                "channel {:?} against waveform {:?}",
                g.shape(),
                x.shape()
            )));
        }
        // Row n of Y, conjugated and whitened, has mean (g_n X)^H / sqrt(N0).
        let means = (g * x).adjoint().scale(1.0 / n0.sqrt());
        SaddlePointProblem::from_kronecker(&self.values, &self.vectors, &means, gamma)
    }

    pub fn cdf(&self, g: &CMat, track: bool, n0: f64, gamma: f64) -> Result<f64> {
        saddlepoint_cdf(&self.problem(g, track, n0, gamma)?, self.method)
    }

    pub fn error_prob(&self, g: &CMat, n0: f64, p_d: f64, gamma: f64) -> Result<GlrtErrorProb> {
        check_prior(p_d)?;
        let cdf_h0 = if p_d < 1.0 { self.cdf(g, false, n0, gamma)? } else { 0.0 };
        let cdf_h1 = if p_d > 0.0 { self.cdf(g, true, n0, gamma)? } else { 0.0 };
        Ok(GlrtErrorProb {
            p_error: mix(p_d, cdf_h0, cdf_h1),
            cdf_h0,
            cdf_h1,
        })
    }
}

pub fn glrt_error_prob(g: &CMat, x0: &CMat, x1: &CMat, n0: f64, p_d: f64, gamma: f64) -> Result<GlrtErrorProb> {
    GlrtTheory::new(x0, x1)?.error_prob(g, n0, p_d, gamma)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RaoErrorProb {
    pub p_error: f64,
    pub dof: u32,
    pub noncentrality: f64,
}

/// Chi-squared laws of the M = N Rao statistic: central with K = 2N(L-M)
/// under H0, noncentral with μ = (2/N0) tr(G X1 P X1^H G^H) under H1.
pub fn rao_special_laws(g: &CMat, x0: &CMat, x1: &CMat, n0: f64, p_r: f64) -> Result<(Chi2Law, Chi2Law)> {
    check_n0(n0)?;
    let (m, l) = x0.shape();
    let n = g.nrows();
    if g.ncols() != m || x1.shape() != x0.shape() {
        return Err(Error::InvalidDimensions(format!(
            "G {:?}, X0 {:?}, X1 {:?}",
            g.shape(),
            x0.shape(),
            x1.shape()
        )));
    }
    if n != m || l <= m {
        return Err(Error::Precondition(format!("need M = N < L, got M={m}, N={n}, L={l}")));
    }
    let p = null_projector(x0, p_r, m, l);
    let s = g * x1;
    let raw = 2.0 / n0 * crate::linalg::trace_of_product(&(&s * &p), &s.adjoint()).re;
    let scale = 2.0 / n0 * frobenius_sq(&s);
    if raw < -1e-9 * scale.max(1.0) {
        return Err(Error::Internal(format!("negative noncentrality {raw:e}")));
    }
    let dof = 2 * n * (l - m);
    let dof = u32::try_from(dof).map_err(|_| Error::Domain(format!("{dof} degrees of freedom")))?;
    Ok((Chi2Law::central(dof), Chi2Law::noncentral(dof, raw.max(0.0))))
}

pub fn rao_special_error_prob(
    g: &CMat,
    x0: &CMat,
    x1: &CMat,
    n0: f64,
    p_r: f64,
    p_d: f64,
    gamma: f64,
) -> Result<RaoErrorProb> {
    check_prior(p_d)?;
    let (h0, h1) = rao_special_laws(g, x0, x1, n0, p_r)?;
    Ok(RaoErrorProb {
        p_error: mix(p_d, h0.cdf(gamma)?, h1.cdf(gamma)?),
        dof: h0.dof,
        noncentrality: h1.noncentrality,
    })
}

/// Energy detector under the LoS model. The scaled statistic
/// (2/N0) tr(Y Y^H) is χ²_κ(ε_i) with κ = 2NL.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdTheory {
    pub eps0: f64,
    pub eps1: f64,
    pub kappa: u32,
    pub pulse_length: usize,
    pub n0: f64,
}

impl EdTheory {
    pub fn new(
        alpha: Complex64,
        theta_deg: f64,
        x1: &CMat,
        n0: f64,
        p_r: f64,
        radar: &ArrayGeometry,
        bs: &ArrayGeometry,
    ) -> Result<Self> {
        check_n0(n0)?;
        let (m, l) = x1.shape();
        if m != radar.num_elements() {
            return Err(Error::InvalidDimensions(format!(
                "waveform has {m} rows, radar array {}",
                radar.num_elements()
            )));
        }
        let n = bs.num_elements();
        let a = radar.steering_vector(rad(theta_deg))?;
        let gain = alpha.norm_sqr();
        let eps0 = 2.0 * gain * (n * l) as f64 * p_r / n0;
        let eps1 = 2.0 * gain / n0 * n as f64 * quad_form(&(x1 * x1.adjoint()), &a);
        let kappa = u32::try_from(2 * n * l).map_err(|_| Error::Domain("degrees of freedom overflow".into()))?;
        Ok(Self {
            eps0,
            eps1,
            kappa,
            pulse_length: l,
            n0,
        })
    }

    /// Maps the power thresholds to the chi-squared scale: 2Lγ̃/N0.
    pub fn scaled(&self, threshold: f64) -> f64 {
        2.0 * self.pulse_length as f64 * threshold / self.n0
    }

    /// Probability that the statistic falls inside [γ̃, η̃] under each hypothesis.
    pub fn inside(&self, gamma_t: f64, eta_t: f64) -> Result<(f64, f64)> {
        check_energy_thresholds(gamma_t, eta_t)?;
        let (g, e) = (self.scaled(gamma_t), self.scaled(eta_t));
        let band = |eps: f64| -> Result<f64> {
            let lo = noncentral_chi2_cdf(g, self.kappa, eps)?;
            // Upper tail directly, to keep precision when both CDFs are near 1.
            let hi_tail = noncentral_chi2_sf(e, self.kappa, eps)?;
            Ok((1.0 - hi_tail - lo).max(0.0))
        };
        Ok((band(self.eps0)?, band(self.eps1)?))
    }

    /// (1 - P_D) P(outside | H0) + P_D P(inside | H1).
    pub fn error_prob(&self, p_d: f64, gamma_t: f64, eta_t: f64) -> Result<f64> {
        check_prior(p_d)?;
        let (in0, in1) = self.inside(gamma_t, eta_t)?;
        Ok(((1.0 - in0) * (1.0 - p_d) + in1 * p_d).clamp(0.0, 1.0))
    }

    /// Variant that treats {T >= γ} and {T <= η} as independent events,
    /// P(inside) ≈ (1 - F(γ)) F(η). Kept for comparison only; it
    /// overestimates the in-band probability whenever F(γ) > 0.
    pub fn error_prob_product_form(&self, p_d: f64, gamma_t: f64, eta_t: f64) -> Result<f64> {
        check_prior(p_d)?;
        check_energy_thresholds(gamma_t, eta_t)?;
        let (g, e) = (self.scaled(gamma_t), self.scaled(eta_t));
        let inside = |eps: f64| -> Result<f64> {
            Ok((1.0 - noncentral_chi2_cdf(g, self.kappa, eps)?) * noncentral_chi2_cdf(e, self.kappa, eps)?)
        };
        Ok(((1.0 - inside(self.eps0)?) * (1.0 - p_d) + inside(self.eps1)? * p_d).clamp(0.0, 1.0))
    }
}

#[allow(clippy::too_many_arguments)]
pub fn ed_error_prob(
    alpha: Complex64,
    theta_deg: f64,
    x1: &CMat,
    n0: f64,
    p_r: f64,
    radar: &ArrayGeometry,
    bs: &ArrayGeometry,
    p_d: f64,
    gamma_t: f64,
    eta_t: f64,
) -> Result<f64> {
    EdTheory::new(alpha, theta_deg, x1, n0, p_r, radar, bs)?.error_prob(p_d, gamma_t, eta_t)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MseTheory {
    pub mse: f64,
    /// R_X was singular and its pseudo-inverse was used.
    pub pinv_fallback: bool,
}

/// N0 N / L tr(R_X^{-1}).
pub fn mse_theory(r_x: &CMat, n0: f64, n: usize, l: usize) -> Result<MseTheory> {
    crate::linalg::check_square(r_x, "R_X")?;
    check_n0(n0)?;
    let (inv, pinv_fallback) = crate::linalg::hermitian_inverse(r_x, crate::detectors::MAX_CONDITION, PINV_TOL);
    Ok(MseTheory {
        mse: n0 * n as f64 / l as f64 * inv.trace().re,
        pinv_fallback,
    })
}

/// Theory MSE of a given waveform, with R_X = X X^H / L.
pub fn mse_theory_waveform(x: &CMat, n0: f64, n: usize) -> Result<MseTheory> {
    let l = x.ncols();
    mse_theory(&(x * x.adjoint()).scale(1.0 / l as f64), n0, n, l)
}

/// N0 M² N / (L P_R) for the orthogonal searching waveform.
pub fn mse_theory_orthogonal(n0: f64, m: usize, n: usize, l: usize, p_r: f64) -> f64 {
    n0 * (m * m * n) as f64 / (l as f64 * p_r)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RaoNonexistenceReport {
    pub rank_jrr: usize,
    pub pulse_length: usize,
    /// L + 2: the rank the score block would need.
    pub bound: usize,
    /// M L: size of the block.
    pub size: usize,
    pub holds: bool,
    /// α = 0 makes the block vanish; this is not a counterexample.
    pub degenerate: bool,
}

/// Rank check of the LoS Fisher block J_rr = (4N|α|²/N0) I_L ⊗ a* a^T.
pub fn verify_rao_nonexistence(
    m: usize,
    n: usize,
    l: usize,
    alpha: Complex64,
    theta_deg: f64,
    n0: f64,
) -> Result<RaoNonexistenceReport> {
    if m <= 2 {
        return Err(Error::Precondition(format!("needs M > 2, got M = {m}")));
    }
    if l < m {
        return Err(Error::Precondition(format!("needs L >= M, got L={l}, M={m}")));
    }
    check_n0(n0)?;
    let radar = ArrayGeometry::half_wavelength(m)?;
    let a = radar.steering_vector(rad(theta_deg))?;
    let outer = a.conjugate() * a.transpose();
    let block = kron(&CMat::identity(l, l), &outer).scale(4.0 * n as f64 * alpha.norm_sqr() / n0);
    let degenerate = frobenius_sq(&block) == 0.0;
    let rank_jrr = if degenerate { 0 } else { numerical_rank(&block, 1e-10) };
    let bound = l + 2;
    let size = m * l;
    Ok(RaoNonexistenceReport {
        rank_jrr,
        pulse_length: l,
        bound,
        size,
        holds: rank_jrr == l && bound < size,
        degenerate,
    })
}

/// tr(A^+), used when a covariance is known to be singular.
pub fn pinv_trace(a: &CMat) -> f64 {
    pseudo_inverse(a, PINV_TOL).0.trace().re
}

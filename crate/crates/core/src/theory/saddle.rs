//! Saddle-point approximation of P(v^H D v <= γ) for v ~ CN(m, I) and
//! Hermitian, possibly indefinite, D.
//!
//! With eigenpairs (λ_i, q_i) of D and b̄ = Q^H m, the Laplace transform
//! E[exp(-z v^H D v)] = Π (1 + zλ_i)^{-1} exp(-Σ |b̄_i|² zλ_i / (1 + zλ_i))
//! is finite on the strip z_lo < z < z_hi where every 1 + zλ_i > 0.

use num_complex::Complex64;
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, CMat, CVec};

/// Eigenvalues below this (relative to the largest) count as zero.
const ZERO_EIG: f64 = 1e-13;
const FD_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SaddleMethod {
    /// e^{s(z0)} / sqrt(2π s''(z0)) with s(z) = γz + ln E[e^{-zQ}] - ln z,
    /// z0 the root of s' on (0, z_hi). Accurate in the lower tail only.
    Contour,
    /// Lugannani–Rice tail formula around the root of the cumulant
    /// equation K'(t) = γ.
    #[default]
    LugannaniRice,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaddlePointProblem {
    pub eigenvalues: Vec<f64>,
    pub transformed_mean: Vec<Complex64>,
    pub threshold: f64,
}

impl SaddlePointProblem {
    pub fn new(eigenvalues: Vec<f64>, transformed_mean: Vec<Complex64>, threshold: f64) -> Result<Self> {
        if eigenvalues.len() != transformed_mean.len() {
            return Err(Error::InvalidDimensions(format!(
                "{} eigenvalues but {} mean entries",
                eigenvalues.len(),
                transformed_mean.len()
            )));
        }
        Ok(Self {
            eigenvalues,
            transformed_mean,
            threshold,
        })
    }

    /// Quadratic form v^H D v with D dense.
    pub fn from_dense(d: &CMat, mean: &CVec, threshold: f64) -> Result<Self> {
        if d.nrows() != d.ncols() || d.nrows() != mean.len() {
            return Err(Error::InvalidDimensions(format!(
                "form {:?} and mean of length {}",
                d.shape(),
                mean.len()
            )));
        }
        let (values, q) = hermitian_eigen(d);
        let bbar = q.adjoint() * mean;
        Self::new(values, bbar.iter().copied().collect(), threshold)
    }

    /// Block form D = I_N ⊗ C: the L×L core is decomposed once and its
    /// spectrum repeated for each of the N columns of `means` (L×N).
    pub fn from_kronecker(core_values: &[f64], core_vectors: &CMat, means: &CMat, threshold: f64) -> Result<Self> {
        let l = core_values.len();
        if core_vectors.shape() != (l, l) || means.nrows() != l {
            return Err(Error::InvalidDimensions(format!(
                "core of size {l} and means {:?}",
                means.shape()
            )));
        }
        let bbar = core_vectors.adjoint() * means;
        let n = means.ncols();
        let mut eigenvalues = Vec::with_capacity(n * l);
        let mut transformed = Vec::with_capacity(n * l);
        for col in 0..n {
            eigenvalues.extend_from_slice(core_values);
            transformed.extend(bbar.column(col).iter().copied());
        }
        Self::new(eigenvalues, transformed, threshold)
    }

    fn terms(&self) -> Vec<(f64, f64)> {
        self.eigenvalues
            .iter()
            .zip(&self.transformed_mean)
            .map(|(&l, b)| (l, b.norm_sqr()))
            .collect()
    }
}

/// ln E[exp(-zQ)] and its first two derivatives in z.
struct Transform {
    terms: Vec<(f64, f64)>,
    z_lo: f64,
    z_hi: f64,
}

impl Transform {
    fn new(problem: &SaddlePointProblem) -> Result<Self> {
        let scale = problem.eigenvalues.iter().fold(0.0f64, |a, l| a.max(l.abs()));
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::SaddleFailure("quadratic form is identically zero".into()));
        }
        let terms: Vec<(f64, f64)> = problem
            .terms()
            .into_iter()
            .filter(|(l, _)| l.abs() > ZERO_EIG * scale)
            .collect();
        let max_pos = terms.iter().map(|t| t.0).fold(0.0f64, f64::max);
        let max_neg = terms.iter().map(|t| -t.0).fold(0.0f64, f64::max);
        Ok(Self {
            terms,
            z_lo: if max_pos > 0.0 { -1.0 / max_pos } else { f64::NEG_INFINITY },
            z_hi: if max_neg > 0.0 { 1.0 / max_neg } else { f64::INFINITY },
        })
    }

    fn value(&self, z: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(l, b2)| {
                let d = 1.0 + z * l;
                -d.ln() - b2 * z * l / d
            })
            .sum()
    }

    fn d1(&self, z: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(l, b2)| {
                let d = 1.0 + z * l;
                -l / d - b2 * l / (d * d)
            })
            .sum()
    }

    fn d2(&self, z: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(l, b2)| {
                let d = 1.0 + z * l;
                l * l / (d * d) + 2.0 * b2 * l * l / (d * d * d)
            })
            .sum()
    }

    fn d3(&self, z: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(l, b2)| {
                let d = 1.0 + z * l;
                let l3 = l * l * l;
                -2.0 * l3 / (d * d * d) - 6.0 * b2 * l3 / (d * d * d * d)
            })
            .sum()
    }
}

/// Root of an increasing function on (lo, hi); infinite ends are expanded.
fn increasing_root<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> Option<f64> {
    // Step just inside finite ends, where the transform has its poles.
    let inside = |bound: f64, other: f64| {
        if !bound.is_finite() {
            bound
        } else if other.is_finite() {
            bound + (other - bound) * 1e-14
        } else {
            bound + (other - bound).signum() * (bound.abs() * 1e-14).max(1e-300)
        }
    };
    let mut a = inside(lo, hi);
    let mut b = inside(hi, lo);
    if !a.is_finite() {
        let mut step = 1.0f64.max(b.abs());
        a = b - step;
        while f(a) > 0.0 {
            step *= 2.0;
            a = b - step;
            if step > 1e300 {
                return None;
            }
        }
    }
    if !b.is_finite() {
        let mut step = 1.0f64.max(a.abs());
        b = a + step;
        while f(b) < 0.0 {
            step *= 2.0;
            b = a + step;
            if step > 1e300 {
                return None;
            }
        }
    }
    if f(a) > 0.0 || f(b) < 0.0 {
        return None;
    }
    for _ in 0..400 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if f(mid) < 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    Some(0.5 * (a + b))
}

fn normal_cdf(w: f64) -> f64 {
    0.5 * erfc(-w / std::f64::consts::SQRT_2)
}

fn normal_pdf(w: f64) -> f64 {
    (-0.5 * w * w).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Approximate P(v^H D v <= γ), clamped to [0, 1].
pub fn saddlepoint_cdf(problem: &SaddlePointProblem, method: SaddleMethod) -> Result<f64> {
    let tr = Transform::new(problem)?;
    let gamma = problem.threshold;
    if !gamma.is_finite() {
        return Err(Error::Domain(format!("threshold must be finite, got {gamma}")));
    }
    match method {
        SaddleMethod::Contour => contour(&tr, gamma),
        SaddleMethod::LugannaniRice => lugannani_rice(&tr, gamma),
    }
}

fn contour(tr: &Transform, gamma: f64) -> Result<f64> {
    let s1 = |z: f64| gamma + tr.d1(z) - 1.0 / z;
    let z0 = increasing_root(s1, 0.0, tr.z_hi)
        .ok_or_else(|| Error::SaddleFailure(format!("no saddle point in (0, {})", tr.z_hi)))?;
    let s = gamma * z0 + tr.value(z0) - z0.ln();
    let s2 = tr.d2(z0) + 1.0 / (z0 * z0);
    cross_check(&s1, z0, s2, tr.z_hi);
    if !(s2 > 0.0) || !s.is_finite() {
        return Err(Error::SaddleFailure(format!("degenerate curvature {s2} at z = {z0}")));
    }
    Ok((s.exp() / (2.0 * std::f64::consts::PI * s2).sqrt()).clamp(0.0, 1.0))
}

fn lugannani_rice(tr: &Transform, gamma: f64) -> Result<f64> {
    // With t = -z the cumulant generating function is K(t) = value(-t) and the
    // saddle equation K'(t) = γ reads γ + d1(z) = 0, increasing in z.
    let eq = |z: f64| gamma + tr.d1(z);
    let z = match increasing_root(eq, tr.z_lo, tr.z_hi) {
        Some(z) => z,
        // Outside the support of a semidefinite form.
        None if !tr.z_hi.is_finite() && gamma <= 0.0 => return Ok(0.0),
        None if !tr.z_lo.is_finite() && gamma >= 0.0 => return Ok(1.0),
        None => return Err(Error::SaddleFailure(format!("no saddle point for threshold {gamma}"))),
    };
    let t = -z;
    let k2 = tr.d2(z);
    cross_check(&eq, z, k2, if z > 0.0 { tr.z_hi } else { -tr.z_lo });
    if !(k2 > 0.0) {
        return Err(Error::SaddleFailure(format!("degenerate curvature {k2}")));
    }
    let w2 = 2.0 * (t * gamma - tr.value(z));
    let w = t.signum() * w2.max(0.0).sqrt();
    let u = t * k2.sqrt();
    let p = if w.abs() < 1e-3 {
        // Limit at the mean: 1/2 + κ3 / (6 sqrt(2π) κ2^{3/2}).
        let k2_0 = tr.d2(0.0);
        let k3_0 = -tr.d3(0.0);
        0.5 + k3_0 / (6.0 * (2.0 * std::f64::consts::PI).sqrt() * k2_0.powf(1.5))
    } else {
        normal_cdf(w) + normal_pdf(w) * (1.0 / w - 1.0 / u)
    };
    if !p.is_finite() {
        return Err(Error::SaddleFailure(format!("non-finite tail estimate at t = {t}")));
    }
    Ok(p.clamp(0.0, 1.0))
}

/// Compare an analytic second derivative with a central difference of the
/// first; a mismatch is logged since it points at a strip-boundary problem.
fn cross_check<F: Fn(f64) -> f64>(first: &F, z: f64, analytic: f64, bound: f64) -> bool {
    let room = (bound - z).abs();
    let h = (1e-4 * z.abs()).max(1e-9).min(0.25 * room);
    if !(h > 0.0) || !h.is_finite() {
        return true;
    }
    let fd = (first(z + h) - first(z - h)) / (2.0 * h);
    let ok = (fd - analytic).abs() <= FD_TOL * analytic.abs().max(1e-300);
    if !ok {
        log::warn!("saddle curvature check failed: analytic {analytic:e}, finite difference {fd:e}");
    }
    ok
}

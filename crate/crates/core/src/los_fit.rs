//! One-dimensional angle search shared by the LoS detector and estimators:
//! a coarse grid followed by golden-section refinement inside the best cell.

use num_complex::Complex64;

use crate::array::{rad, ArrayGeometry};
use crate::linalg::{CMat, CVec};

/// Coarse angle grid over the open interval (-90°, 90°), degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleGrid {
    pub step_deg: f64,
    /// Golden-section stopping width, degrees.
    pub refine_tol_deg: f64,
}

impl Default for AngleGrid {
    fn default() -> Self {
        Self {
            step_deg: 0.5,
            refine_tol_deg: 1e-3,
        }
    }
}

impl AngleGrid {
    /// Grid points strictly inside (-90°, 90°); the endpoints alias each
    /// other for half-wavelength spacing.
    pub fn points(&self) -> Vec<f64> {
        let n = (180.0 / self.step_deg).round() as i64;
        (1..n).map(|i| -90.0 + self.step_deg * i as f64).collect()
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Minimise `cost` (degrees → value, `None` to skip) over the grid, then
/// refine with golden-section search within one step of the best point.
/// Returns (angle, value) or `None` when every grid point was skipped.
pub fn minimize_angle<F>(grid: &AngleGrid, mut cost: F) -> Option<(f64, f64)>
where
    F: FnMut(f64) -> Option<f64>,
{
    let mut best: Option<(f64, f64)> = None;
    for t in grid.points() {
        if let Some(v) = cost(t) {
            if best.is_none_or(|(_, bv)| v < bv) {
                best = Some((t, v));
            }
        }
    }
    let (t_best, v_best) = best?;
    let edge = 90.0 - 1e-9;
    let mut lo = (t_best - grid.step_deg).max(-edge);
    let mut hi = (t_best + grid.step_deg).min(edge);
    let mut eval = |t: f64| cost(t).unwrap_or(f64::INFINITY);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = eval(x1);
    let mut f2 = eval(x2);
    while hi - lo > grid.refine_tol_deg {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = eval(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = eval(x2);
        }
    }
    let (t_ref, v_ref) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    Some(if v_ref <= v_best { (t_ref, v_ref) } else { (t_best, v_best) })
}

/// Concentrated LoS least-squares cost
/// f(θ) = ‖Y‖² - |b^H Y X^H a|² / (N L a^H R_X a),
/// with the waveform-dependent parts precomputed.
pub struct LosCost<'a> {
    radar: &'a ArrayGeometry,
    bs: &'a ArrayGeometry,
    /// Y X^H, N×M.
    cross: CMat,
    /// X X^H, M×M.
    gram: CMat,
    y_energy: f64,
    pulse_length: usize,
    /// Denominators below this are skipped.
    floor: f64,
}

impl<'a> LosCost<'a> {
    pub fn new(y: &CMat, x: &CMat, radar: &'a ArrayGeometry, bs: &'a ArrayGeometry) -> Self {
        let l = x.ncols();
        let gram = x * x.adjoint();
        let p_r = gram.trace().re / l as f64;
        Self {
            radar,
            bs,
            cross: y * x.adjoint(),
            gram,
            y_energy: crate::linalg::frobenius_sq(y),
            pulse_length: l,
            floor: 1e-12 * p_r,
        }
    }

    fn parts(&self, theta_deg: f64) -> Option<(Complex64, f64, usize)> {
        let t = rad(theta_deg);
        let a: CVec = self.radar.steering_unchecked(t);
        let b: CVec = self.bs.steering_unchecked(t);
        let l = self.pulse_length as f64;
        // a^H R_X a
        let power = crate::array::quad_form(&self.gram, &a) / l;
        if !(power > self.floor) {
            return None;
        }
        let proj = b.dotc(&(&self.cross * &a));
        Some((proj, power, b.len()))
    }

    pub fn eval(&self, theta_deg: f64) -> Option<f64> {
        let (proj, power, n) = self.parts(theta_deg)?;
        let l = self.pulse_length as f64;
        Some((self.y_energy - proj.norm_sqr() / (n as f64 * l * power)).max(0.0))
    }

    /// ML path gain at a fixed angle.
    pub fn alpha(&self, theta_deg: f64) -> Option<Complex64> {
        let (proj, power, n) = self.parts(theta_deg)?;
        Some(proj / (n as f64 * self.pulse_length as f64 * power))
    }

    pub fn y_energy(&self) -> f64 {
        self.y_energy
    }
}

//! Tracking-covariance design: maximise the mainlobe-to-sidelobe margin
//! subject to half-power points, PSD and per-antenna power constraints.
//!
//! The margin is found by bisection. Feasibility at each candidate margin is
//! decided by Dykstra's alternating projections between the PSD cone, the
//! per-antenna power affine set and one halfspace per linear beampattern
//! constraint.

use num_complex::Complex64;

use crate::array::{rad, ArrayGeometry};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, project_psd, CMat, CVec};

/// Three-dB beampattern specification, all angles in degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct BeampatternSpec {
    pub mainlobe: f64,
    pub half_power_low: f64,
    pub half_power_high: f64,
    /// Closed angle intervals making up the sidelobe region.
    pub sidelobe_region: Vec<(f64, f64)>,
    pub grid_step: f64,
}

impl BeampatternSpec {
    /// Mainlobe at `mainlobe` with 3 dB width `width`, sidelobe region
    /// starting `transition` degrees beyond each half-power angle.
    pub fn three_db(mainlobe: f64, width: f64, grid_step: f64, transition: f64) -> Result<Self> {
        let lo = mainlobe - width / 2.0;
        let hi = mainlobe + width / 2.0;
        let mut region = Vec::new();
        if lo - transition > -90.0 {
            region.push((-90.0, lo - transition));
        }
        if hi + transition < 90.0 {
            region.push((hi + transition, 90.0));
        }
        let spec = Self {
            mainlobe,
            half_power_low: lo,
            half_power_high: hi,
            sidelobe_region: region,
            grid_step,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Default design: 5° transition bands on a 1° grid.
    pub fn with_defaults(mainlobe: f64, width: f64) -> Result<Self> {
        Self::three_db(mainlobe, width, 1.0, 5.0)
    }

    pub fn validate(&self) -> Result<()> {
        let in_range = |t: f64| (-90.0..=90.0).contains(&t);
        if !(self.half_power_low < self.mainlobe && self.mainlobe < self.half_power_high) {
            return Err(Error::Validation(format!(
                "need half-power angles around the mainlobe, got {} < {} < {}",
                self.half_power_low, self.mainlobe, self.half_power_high
            )));
        }
        if !in_range(self.half_power_low) || !in_range(self.half_power_high) {
            return Err(Error::Domain("half-power angles outside [-90, 90] degrees".into()));
        }
        if !(self.grid_step > 0.0) {
            return Err(Error::Validation("grid step must be positive".into()));
        }
        for &(a, b) in &self.sidelobe_region {
            if a > b || !in_range(a) || !in_range(b) {
                return Err(Error::Validation(format!("bad sidelobe interval [{a}, {b}]")));
            }
            if b >= self.half_power_low && a <= self.half_power_high {
                return Err(Error::Validation(format!(
                    "sidelobe interval [{a}, {b}] overlaps the mainlobe"
                )));
            }
        }
        Ok(())
    }

    /// Sidelobe angles (degrees) on the global grid anchored at -90°.
    pub fn sidelobe_angles(&self) -> Vec<f64> {
        let n = (180.0 / self.grid_step + 1e-9).floor() as usize;
        (0..=n)
            .map(|i| -90.0 + self.grid_step * i as f64)
            .filter(|&t| {
                self.sidelobe_region
                    .iter()
                    .any(|&(a, b)| t >= a - 1e-9 && t <= b + 1e-9)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Dykstra sweeps per feasibility problem.
    pub max_iterations: usize,
    /// Constraint residual (relative to P_R) accepted as feasible.
    pub tolerance: f64,
    /// Half-power equalities are relaxed to |P(θ_i) - P(θ0)/2| <= band · P(θ0).
    pub half_power_band: f64,
    pub max_bisections: usize,
    /// Stop bisecting when the bracket is this small relative to M·P_R.
    pub bisection_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iterations: 5000,
            tolerance: 1e-7,
            half_power_band: 0.02,
            max_bisections: 40,
            bisection_tol: 5e-4,
        }
    }
}

/// Output of [`design_tracking_covariance`].
#[derive(Debug, Clone)]
pub struct TrackingDesign {
    pub covariance: CMat,
    /// Achieved min over the sidelobe grid of P(θ0) - P(θm).
    pub margin: f64,
    /// Smallest margin the bisection proved infeasible (upper bracket).
    pub margin_upper_bound: f64,
    pub bisections: usize,
    pub total_sweeps: usize,
}

/// Halfspace {R : Σ w_j a_j^H R a_j >= offset}.
struct Halfspace {
    terms: Vec<(f64, usize)>,
    norm_sq: f64,
    is_sidelobe: bool,
}

struct Problem {
    m: usize,
    diag_value: f64,
    steering: Vec<CVec>,
    halfspaces: Vec<Halfspace>,
    p_r: f64,
}

/// Row-major Hermitian working matrix.
#[derive(Clone)]
struct Work {
    m: usize,
    data: Vec<Complex64>,
}

impl Work {
    fn from_cmat(r: &CMat) -> Self {
        let m = r.nrows();
        let mut data = Vec::with_capacity(m * m);
        for i in 0..m {
            for j in 0..m {
                data.push(r[(i, j)]);
            }
        }
        Self { m, data }
    }

    fn to_cmat(&self) -> CMat {
        CMat::from_row_slice(self.m, self.m, &self.data)
    }

    fn quad(&self, a: &CVec) -> f64 {
        let m = self.m;
        let mut acc = 0.0;
        for i in 0..m {
            let row = &self.data[i * m..(i + 1) * m];
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..m {
                s += row[j] * a[j];
            }
            acc += (a[i].conj() * s).re;
        }
        acc
    }

    fn add_outer(&mut self, scale: f64, a: &CVec) {
        let m = self.m;
        for i in 0..m {
            let ai = a[i] * scale;
            for j in 0..m {
                self.data[i * m + j] += ai * a[j].conj();
            }
        }
    }
}

impl Problem {
    fn new(spec: &BeampatternSpec, m: usize, p_r: f64, band: f64) -> Result<Self> {
        let geometry = ArrayGeometry::half_wavelength(m)?;
        let mut steering = vec![
            geometry.steering_vector(rad(spec.mainlobe))?,
            geometry.steering_vector(rad(spec.half_power_low))?,
            geometry.steering_vector(rad(spec.half_power_high))?,
        ];
        let mut halfspaces = Vec::new();
        for idx in [1usize, 2] {
            // P(θi) <= (1/2 + band) P(θ0)  and  P(θi) >= (1/2 - band) P(θ0)
            halfspaces.push(Halfspace {
                terms: vec![(0.5 + band, 0), (-1.0, idx)],
                norm_sq: 0.0,
                is_sidelobe: false,
            });
            halfspaces.push(Halfspace {
                terms: vec![(1.0, idx), (-(0.5 - band), 0)],
                norm_sq: 0.0,
                is_sidelobe: false,
            });
        }
        for theta in spec.sidelobe_angles() {
            steering.push(geometry.steering_vector(rad(theta))?);
            halfspaces.push(Halfspace {
                terms: vec![(1.0, 0), (-1.0, steering.len() - 1)],
                norm_sq: 0.0,
                is_sidelobe: true,
            });
        }
        for h in &mut halfspaces {
            let mut n2 = 0.0;
            for &(wj, j) in &h.terms {
                for &(wk, k) in &h.terms {
                    n2 += wj * wk * steering[j].dotc(&steering[k]).norm_sqr();
                }
            }
            h.norm_sq = n2;
        }
        Ok(Self {
            m,
            diag_value: p_r / m as f64,
            steering,
            halfspaces,
            p_r,
        })
    }

    fn value(&self, h: &Halfspace, x: &Work) -> f64 {
        h.terms.iter().map(|&(w, j)| w * x.quad(&self.steering[j])).sum()
    }

    fn offset(h: &Halfspace, margin: Option<f64>) -> Option<f64> {
        if h.is_sidelobe {
            margin
        } else {
            Some(0.0)
        }
    }

    /// Worst constraint violation of `x`, in units of P_R.
    fn residual(&self, x: &Work, margin: Option<f64>) -> f64 {
        let m = self.m;
        let mut worst: f64 = 0.0;
        for i in 0..m {
            worst = worst.max((x.data[i * m + i].re - self.diag_value).abs());
        }
        let powers: Vec<f64> = self.steering.iter().map(|a| x.quad(a)).collect();
        for h in &self.halfspaces {
            if let Some(d) = Self::offset(h, margin) {
                let value: f64 = h.terms.iter().map(|&(w, j)| w * powers[j]).sum();
                worst = worst.max(d - value);
            }
        }
        worst / self.p_r
    }

    fn margin_of(&self, x: &Work) -> f64 {
        let p0 = x.quad(&self.steering[0]);
        self.steering[3..]
            .iter()
            .map(|a| p0 - x.quad(a))
            .fold(f64::INFINITY, f64::min)
    }

    /// Dykstra's algorithm for the feasibility problem at a given margin
    /// (`None` drops the sidelobe constraints). Returns the final PSD iterate,
    /// its residual and the sweeps used.
    fn dykstra(&self, start: &CMat, margin: Option<f64>, opts: &SolverOptions) -> (CMat, f64, usize, bool) {
        let m = self.m;
        let mut x = Work::from_cmat(start);
        let mut hs_inc = vec![0.0_f64; self.halfspaces.len()];
        let mut psd_inc = CMat::zeros(m, m);
        let mut best = (start.clone(), f64::INFINITY);
        for sweep in 1..=opts.max_iterations {
            // affine per-antenna power set
            for i in 0..m {
                x.data[i * m + i] = Complex64::new(self.diag_value, 0.0);
            }
            for (h, inc) in self.halfspaces.iter().zip(hs_inc.iter_mut()) {
                let Some(d) = Self::offset(h, margin) else {
                    continue;
                };
                let current = self.value(h, &x);
                let with_inc = current + *inc * h.norm_sq;
                let delta = ((d - with_inc) / h.norm_sq).max(0.0);
                let step = *inc + delta;
                if step != 0.0 {
                    for &(w, j) in &h.terms {
                        x.add_outer(step * w, &self.steering[j]);
                    }
                }
                *inc = -delta;
            }
            let y = x.to_cmat() + &psd_inc;
            let projected = project_psd(&y);
            psd_inc = y - &projected;
            x = Work::from_cmat(&projected);
            let res = self.residual(&x, margin);
            if res < best.1 {
                best = (projected, res);
            }
            if res <= opts.tolerance {
                return (best.0, res, sweep, true);
            }
        }
        (best.0, best.1, opts.max_iterations, false)
    }

    /// Congruence D R D that puts the diagonal exactly on P_R/M; keeps PSD.
    fn fix_diagonal(&self, r: &CMat) -> CMat {
        let m = self.m;
        let scale: Vec<f64> = (0..m)
            .map(|i| {
                let d = r[(i, i)].re;
                if d > 0.0 {
                    (self.diag_value / d).sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        let mut out = CMat::from_fn(m, m, |i, j| r[(i, j)] * scale[i] * scale[j]);
        for i in 0..m {
            if r[(i, i)].re <= 0.0 {
                out[(i, i)] = Complex64::new(self.diag_value, 0.0);
            }
        }
        crate::linalg::hermitize(&out)
    }
}

/// Solve the 3 dB beampattern design for an M-element half-wavelength ULA.
pub fn design_tracking_covariance(
    spec: &BeampatternSpec,
    m: usize,
    p_r: f64,
    opts: &SolverOptions,
) -> Result<TrackingDesign> {
    spec.validate()?;
    if m < 2 {
        return Err(Error::Precondition(format!("beampattern design needs M >= 2, got {m}")));
    }
    if !(p_r > 0.0) {
        return Err(Error::Validation("transmit power must be positive".into()));
    }
    let problem = Problem::new(spec, m, p_r, opts.half_power_band)?;
    let omni = CMat::identity(m, m).scale(p_r / m as f64);

    let (r0, res0, sweeps0, ok) = problem.dykstra(&omni, None, opts);
    let mut total_sweeps = sweeps0;
    if !ok {
        return Err(Error::Convergence {
            iterations: sweeps0,
            residual: res0,
            best: Some(r0),
        });
    }
    let mut best = problem.fix_diagonal(&r0);
    let mut lo = problem.margin_of(&Work::from_cmat(&best));
    let mut hi = m as f64 * p_r;
    let mut bisections = 0;
    while bisections < opts.max_bisections && hi - lo > opts.bisection_tol * hi.abs().max(p_r) {
        bisections += 1;
        let mid = 0.5 * (lo + hi);
        let (r, _res, sweeps, ok) = problem.dykstra(&best, Some(mid), opts);
        total_sweeps += sweeps;
        if ok {
            let fixed = problem.fix_diagonal(&r);
            let achieved = problem.margin_of(&Work::from_cmat(&fixed));
            lo = achieved.max(lo);
            best = fixed;
        } else {
            hi = mid;
        }
        log::debug!("bisection {bisections}: margin bracket [{lo:.6}, {hi:.6}]");
    }
    let (values, _) = hermitian_eigen(&best);
    log::debug!("design done: min eigenvalue {:e}, {total_sweeps} sweeps", values[0]);
    Ok(TrackingDesign {
        margin: problem.margin_of(&Work::from_cmat(&best)),
        covariance: best,
        margin_upper_bound: hi,
        bisections,
        total_sweeps,
    })
}

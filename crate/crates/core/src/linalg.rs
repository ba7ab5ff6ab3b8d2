//! Small dense complex linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn frobenius_sq(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

pub fn frobenius(m: &CMat) -> f64 {
    frobenius_sq(m).sqrt()
}

/// Real part of tr(A B) for square-compatible matrices, without forming the product.
pub fn trace_of_product(a: &CMat, b: &CMat) -> Complex64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut acc = ZERO;
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// Frobenius inner product Re tr(A^H B).
pub fn inner(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

/// Largest absolute deviation from Hermitian symmetry, relative to the Frobenius norm.
pub fn hermitian_defect(m: &CMat) -> f64 {
    let scale = frobenius(m).max(f64::MIN_POSITIVE);
    (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max) / scale
}

pub fn hermitize(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// Eigen-decomposition of a Hermitian matrix; eigenvalues ascending.
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let eig = hermitize(m).symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMat::zeros(m.nrows(), n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Reassemble V diag(values) V^H.
pub fn from_eigen(values: &[f64], vectors: &CMat) -> CMat {
    let mut scaled = vectors.clone();
    for (j, &v) in values.iter().enumerate() {
        scaled.column_mut(j).scale_mut(v);
    }
    &scaled * vectors.adjoint()
}

/// Projection of a Hermitian matrix onto the PSD cone in Frobenius norm.
pub fn project_psd(m: &CMat) -> CMat {
    let (values, vectors) = hermitian_eigen(m);
    let clipped: Vec<f64> = values.iter().map(|&v| v.max(0.0)).collect();
    hermitize(&from_eigen(&clipped, &vectors))
}

/// Moore-Penrose pseudo-inverse. Singular values below `rel_tol * sigma_max`
/// are treated as zero. Returns the inverse and whether any were dropped.
pub fn pseudo_inverse(m: &CMat, rel_tol: f64) -> (CMat, bool) {
    let svd = m.clone().svd(true, true);
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cutoff = rel_tol * sigma_max;
    let dropped = svd.singular_values.iter().any(|&s| s <= cutoff);
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let mut out = CMat::zeros(m.ncols(), m.nrows());
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff && s > 0.0 {
            let vk = v_t.row(k).adjoint();
            let uk = u.column(k).adjoint();
            out += (vk * uk).scale(1.0 / s);
        }
    }
    (out, dropped)
}

/// Inverse of a Hermitian positive-definite matrix, falling back to the
/// pseudo-inverse when the condition number exceeds `max_cond`.
/// The flag is true when the fallback was taken.
pub fn hermitian_inverse(m: &CMat, max_cond: f64, pinv_tol: f64) -> (CMat, bool) {
    let (values, vectors) = hermitian_eigen(m);
    let lmax = values.iter().cloned().fold(0.0_f64, |a, b| a.max(b.abs()));
    let lmin = values.first().copied().unwrap_or(0.0);
    if lmax > 0.0 && lmin > 0.0 && lmax / lmin < max_cond {
        let inv: Vec<f64> = values.iter().map(|v| 1.0 / v).collect();
        return (hermitize(&from_eigen(&inv, &vectors)), false);
    }
    let inv: Vec<f64> = values
        .iter()
        .map(|&v| if v > pinv_tol * lmax && v > 0.0 { 1.0 / v } else { 0.0 })
        .collect();
    (hermitize(&from_eigen(&inv, &vectors)), true)
}

/// Singular values, descending.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().cloned().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Numerical rank with singular values above `rel_tol * sigma_max`.
pub fn numerical_rank(m: &CMat, rel_tol: f64) -> usize {
    let s = singular_values(m);
    let smax = s.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return 0;
    }
    s.iter().filter(|&&v| v > rel_tol * smax).count()
}

/// Kronecker product A ⊗ B.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Column-stacking vectorisation.
pub fn vec_cols(m: &CMat) -> CVec {
    CVec::from_iterator(m.len(), m.iter().cloned())
}

pub(crate) fn check_square(m: &CMat, what: &str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::InvalidDimensions(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

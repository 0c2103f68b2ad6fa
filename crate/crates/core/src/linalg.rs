//! Small dense linear-algebra helpers on top of `nalgebra`.

use alloc::format;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

pub(crate) fn all_finite(m: &Matrix) -> bool {
    m.iter().all(|v| v.is_finite())
}

pub(crate) fn max_asymmetry(m: &Matrix) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// `(m + mᵀ) / 2`.
pub fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &Matrix) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Numerical rank from the singular values, relative tolerance `tol`.
pub fn rank(m: &Matrix, tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let top = sv.iter().copied().fold(0.0_f64, f64::max);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol * top.max(1.0)).count()
}

/// Cholesky factor of a symmetric positive-definite matrix.
pub fn cholesky(m: &Matrix, what: &str) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    if m.nrows() != m.ncols() {
        return Err(Error::input(format!("{what} must be square, got {}x{}", m.nrows(), m.ncols())));
    }
    if !all_finite(m) {
        return Err(Error::input(format!("{what} has non-finite entries")));
    }
    m.clone()
        .cholesky()
        .ok_or_else(|| Error::degenerate(format!("{what} is not positive definite")))
}

/// Inverse of a symmetric positive-definite matrix, symmetrized.
pub fn spd_inverse(m: &Matrix, what: &str) -> Result<Matrix> {
    let inv = cholesky(m, what)?.inverse();
    Ok(symmetrize(&inv))
}

/// Checks that `m` is symmetric (to `1e-10`, relative) with smallest eigenvalue above `floor`.
pub fn require_pd(m: &Matrix, floor: f64, what: &str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::input(format!("{what} must be square")));
    }
    if !all_finite(m) {
        return Err(Error::input(format!("{what} has non-finite entries")));
    }
    let scale = m.iter().fold(1.0_f64, |a, v| a.max(v.abs()));
    if max_asymmetry(m) > 1e-10 * scale {
        return Err(Error::input(format!("{what} is not symmetric")));
    }
    let lo = min_eigenvalue(m);
    if !(lo > floor) {
        return Err(Error::degenerate(format!(
            "{what} is not positive definite (min eigenvalue {lo:.3e})"
        )));
    }
    Ok(())
}

/// `xᵀ A x`.
pub fn quad_form(x: &Vector, a: &Matrix) -> f64 {
    x.dot(&(a * x))
}

/// Rows of `m` listed in `rows`, all columns.
pub(crate) fn select_rows(m: &Matrix, rows: &[usize]) -> Matrix {
    Matrix::from_fn(rows.len(), m.ncols(), |i, j| m[(rows[i], j)])
}

/// Submatrix with the given row and column index sets.
pub(crate) fn submatrix(m: &Matrix, rows: &[usize], cols: &[usize]) -> Matrix {
    Matrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

pub(crate) fn select(v: &Vector, idx: &[usize]) -> Vector {
    Vector::from_fn(idx.len(), |i, _| v[idx[i]])
}

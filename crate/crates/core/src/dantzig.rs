//! Column-wise Dantzig selector for the decorrelation weights.
//!
//! For each interest coordinate `j`, `ŵ_j` minimizes `‖w‖₁` subject to
//! `‖H_{α_jθ} − wᵀH_{θθ}‖_∞ ≤ λ′`. Splitting `w = w⁺ − w⁻` turns this into an
//! LP with `2(p−d)` nonnegative variables and `2(p−d)` inequality rows, which
//! is handed to the dense simplex in [`crate::lp`].

use alloc::format;

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::lp;
use crate::model::HessianBlocks;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DantzigConfig {
    pub lambda_prime: f64,
    /// LP optimality tolerance; also the slack allowed on the sup-norm
    /// constraint when certifying feasibility.
    pub tol: f64,
}

impl DantzigConfig {
    pub fn new(lambda_prime: f64) -> Result<Self> {
        let cfg = Self {
            lambda_prime,
            tol: 1e-9,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_prime.is_finite() && self.lambda_prime > 0.0) {
            return Err(Error::input(format!(
                "lambda_prime must be positive, got {}",
                self.lambda_prime
            )));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::input("Dantzig tolerance must be positive"));
        }
        Ok(())
    }
}

/// `scale · √(log p / n)`; the simulations use `scale = ½`.
pub fn default_lambda_prime(n: usize, p: usize, scale: f64) -> f64 {
    scale * libm::sqrt(libm::log(p as f64) / n as f64)
}

/// `‖target − Httᵀ w‖_∞`.
pub fn constraint_residual(htt: &Matrix, target: &Vector, w: &Vector) -> f64 {
    (target - htt.tr_mul(w)).amax()
}

/// Solve the Dantzig program for an arbitrary target row.
pub fn dantzig_solve(htt: &Matrix, target: &Vector, config: &DantzigConfig) -> Result<Vector> {
    config.validate()?;
    let q = htt.nrows();
    if htt.ncols() != q || target.len() != q {
        return Err(Error::input(format!(
            "Dantzig shapes disagree: Htt is {}x{}, target has length {}",
            htt.nrows(),
            htt.ncols(),
            target.len()
        )));
    }
    let lam = config.lambda_prime;
    if target.amax() <= lam {
        return Ok(Vector::zeros(q));
    }
    // Rows:  Httᵀw ≤ v + λ′  and  −Httᵀw ≤ λ′ − v, with w = u⁺ − u⁻.
    let ht = htt.transpose();
    let mut a = Matrix::zeros(2 * q, 2 * q);
    let mut b = alloc::vec![0.0; 2 * q];
    for i in 0..q {
        for k in 0..q {
            let h = ht[(i, k)];
            a[(i, k)] = h;
            a[(i, q + k)] = -h;
            a[(q + i, k)] = -h;
            a[(q + i, q + k)] = h;
        }
        b[i] = target[i] + lam;
        b[q + i] = lam - target[i];
    }
    let cost = alloc::vec![1.0; 2 * q];
    let sol = lp::solve(&cost, &a, &b, config.tol).map_err(|e| match e {
        Error::Infeasible(msg) => Error::Degenerate(format!(
            "Dantzig constraint set is empty ({msg}); target sup-norm {:.3e}, lambda' {lam:.3e}",
            target.amax()
        )),
        other => other,
    })?;
    let w = Vector::from_fn(q, |k, _| sol.x[k] - sol.x[q + k]);
    let resid = constraint_residual(htt, target, &w);
    let slack = config.tol.max(1e-9) * (1.0 + htt.amax() * w.lp_norm(1));
    if resid > lam + slack {
        return Err(Error::Internal(format!(
            "Dantzig solution violates the sup-norm constraint: residual {resid:.6e} > {lam:.6e}"
        )));
    }
    Ok(w)
}

/// `ŵ_j` for interest coordinate `j` (0-based).
pub fn dantzig_column(hess: &HessianBlocks, j: usize, config: &DantzigConfig) -> Result<Vector> {
    if j >= hess.d() {
        return Err(Error::input(format!("column {j} out of range for d = {}", hess.d())));
    }
    let target = hess.hat.row(j).transpose();
    dantzig_solve(&hess.htt, &target, config)
}

/// `Ŵ = (ŵ_1, …, ŵ_d)`, a `(p−d)×d` matrix.
pub fn dantzig_matrix(hess: &HessianBlocks, config: &DantzigConfig) -> Result<Matrix> {
    let mut w = Matrix::zeros(hess.q(), hess.d());
    for j in 0..hess.d() {
        let col = dantzig_column(hess, j, config).map_err(|e| Error::Column {
            column: j,
            source: alloc::boxed::Box::new(e),
        })?;
        w.set_column(j, &col);
    }
    Ok(w)
}

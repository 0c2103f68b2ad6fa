//! Dense two-phase primal simplex for `min cᵀx  s.t.  Ax ≤ b, x ≥ 0`.
//!
//! Entering columns follow the most-negative reduced cost until a run of
//! degenerate pivots is seen, after which the solver switches permanently to
//! Bland's smallest-index rule so it cannot cycle.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};

const PIVOT_TOL: f64 = 1e-11;
const DEGENERATE_RUN: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vector,
    pub objective: f64,
    pub pivots: usize,
}

struct Tableau {
    rows: usize,
    width: usize,
    data: Vec<f64>,
    cost: Vec<f64>,
    basis: Vec<usize>,
    n_structural: usize,
    first_artificial: usize,
}

impl Tableau {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.width + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.width - 1)
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let w = self.width;
        let inv = 1.0 / self.at(row, col);
        for v in &mut self.data[row * w..(row + 1) * w] {
            *v *= inv;
        }
        let (before, rest) = self.data.split_at_mut(row * w);
        let (pivot_row, after) = rest.split_at_mut(w);
        for other in before.chunks_exact_mut(w).chain(after.chunks_exact_mut(w)) {
            let f = other[col];
            if f != 0.0 {
                for (o, &p) in other.iter_mut().zip(pivot_row.iter()) {
                    *o -= f * p;
                }
                other[col] = 0.0;
            }
        }
        let f = self.cost[col];
        if f != 0.0 {
            for (o, &p) in self.cost.iter_mut().zip(pivot_row.iter()) {
                *o -= f * p;
            }
            self.cost[col] = 0.0;
        }
        self.basis[row] = col;
    }

    /// Reduced costs for objective `c` (indexed by column) under the current basis.
    fn price(&mut self, c: &[f64]) {
        let w = self.width;
        self.cost = vec![0.0; w];
        self.cost[..c.len()].copy_from_slice(c);
        for i in 0..self.rows {
            let cb = c.get(self.basis[i]).copied().unwrap_or(0.0);
            if cb != 0.0 {
                for j in 0..w {
                    self.cost[j] -= cb * self.data[i * w + j];
                }
            }
        }
    }

    /// Run simplex iterations over columns `< allowed`.
    fn optimize(&mut self, allowed: usize, tol: f64, max_pivots: usize, pivots: &mut usize) -> Result<()> {
        let mut bland = false;
        let mut degenerate = 0usize;
        loop {
            let entering = if bland {
                (0..allowed).find(|&j| self.cost[j] < -tol)
            } else {
                let mut best = None;
                let mut most = -tol;
                for j in 0..allowed {
                    if self.cost[j] < most {
                        most = self.cost[j];
                        best = Some(j);
                    }
                }
                best
            };
            let Some(col) = entering else {
                return Ok(());
            };

            let mut leave: Option<usize> = None;
            let mut best_ratio = f64::INFINITY;
            for i in 0..self.rows {
                let a = self.at(i, col);
                if a > PIVOT_TOL {
                    let ratio = self.rhs(i).max(0.0) / a;
                    let better = match leave {
                        None => true,
                        Some(l) => {
                            if ratio < best_ratio - 1e-12 {
                                true
                            } else if ratio <= best_ratio + 1e-12 {
                                if bland {
                                    self.basis[i] < self.basis[l]
                                } else {
                                    a > self.at(l, col)
                                }
                            } else {
                                false
                            }
                        }
                    };
                    if better {
                        best_ratio = ratio;
                        leave = Some(i);
                    }
                }
            }
            let Some(row) = leave else {
                return Err(Error::Internal(format!("linear program unbounded along column {col}")));
            };
            if best_ratio <= 1e-12 {
                degenerate += 1;
                if degenerate > DEGENERATE_RUN {
                    bland = true;
                }
            } else {
                degenerate = 0;
            }
            self.pivot(row, col);
            *pivots += 1;
            if *pivots > max_pivots {
                return Err(Error::Convergence {
                    solver: "simplex",
                    iterations: *pivots,
                    residual: self.cost[..allowed].iter().copied().fold(0.0, f64::min).abs(),
                    last_iterate: Vec::new(),
                });
            }
        }
    }
}

/// Solve `min cᵀx` subject to `a·x ≤ b`, `x ≥ 0`.
///
/// `tol` is the reduced-cost optimality tolerance; phase one declares the
/// problem infeasible when the artificial objective stays above `1e-9`
/// relative to `‖b‖_∞`.
pub fn solve(c: &[f64], a: &Matrix, b: &[f64], tol: f64) -> Result<LpSolution> {
    let (m, n) = (a.nrows(), a.ncols());
    if c.len() != n || b.len() != m {
        return Err(Error::input(format!(
            "LP shape mismatch: c has {}, A is {m}x{n}, b has {}",
            c.len(),
            b.len()
        )));
    }
    if c.iter().chain(b.iter()).any(|v| !v.is_finite()) || a.iter().any(|v| !v.is_finite()) {
        return Err(Error::input("LP data must be finite"));
    }
    let negative: Vec<usize> = (0..m).filter(|&i| b[i] < 0.0).collect();
    let n_art = negative.len();
    let width = n + m + n_art + 1;
    let mut data = vec![0.0; m * width];
    let mut basis = vec![0usize; m];
    let mut art = 0;
    for i in 0..m {
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        let row = &mut data[i * width..(i + 1) * width];
        for j in 0..n {
            row[j] = sign * a[(i, j)];
        }
        row[n + i] = sign;
        row[width - 1] = sign * b[i];
        if sign < 0.0 {
            row[n + m + art] = 1.0;
            basis[i] = n + m + art;
            art += 1;
        } else {
            basis[i] = n + i;
        }
    }
    let mut t = Tableau {
        rows: m,
        width,
        data,
        cost: Vec::new(),
        basis,
        n_structural: n,
        first_artificial: n + m,
    };
    let max_pivots = 50 * (m + n + 10);
    let mut pivots = 0;

    if n_art > 0 {
        let mut phase1 = vec![0.0; width - 1];
        for v in &mut phase1[n + m..] {
            *v = 1.0;
        }
        t.price(&phase1);
        t.optimize(width - 1, tol, max_pivots, &mut pivots)?;
        let infeasibility: f64 = (0..m)
            .filter(|&i| t.basis[i] >= t.first_artificial)
            .map(|i| t.rhs(i))
            .sum();
        let scale = b.iter().fold(1.0_f64, |s, v| s.max(v.abs()));
        if infeasibility > 1e-9 * scale {
            return Err(Error::Infeasible(format!(
                "phase one ended with artificial mass {infeasibility:.3e}"
            )));
        }
        // Drive zero-level artificials out of the basis where possible.
        for i in 0..m {
            if t.basis[i] >= t.first_artificial {
                if let Some(j) = (0..t.first_artificial).find(|&j| t.at(i, j).abs() > 1e-9) {
                    t.pivot(i, j);
                }
            }
        }
    }

    let mut phase2 = vec![0.0; t.first_artificial];
    phase2[..n].copy_from_slice(c);
    t.price(&phase2);
    t.optimize(t.first_artificial, tol, max_pivots, &mut pivots)?;

    let mut x = Vector::zeros(t.n_structural);
    for i in 0..m {
        if t.basis[i] < n {
            x[t.basis[i]] = t.rhs(i).max(0.0);
        }
    }
    let objective = c.iter().zip(x.iter()).map(|(ci, xi)| ci * xi).sum();
    Ok(LpSolution { x, objective, pivots })
}

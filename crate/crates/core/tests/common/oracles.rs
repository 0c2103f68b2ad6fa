//! Independent reference solvers used as test oracles.

use conetest_core::cones::{ConeKind, ConeSpec, Projection};
use conetest_core::lasso;
use conetest_core::model::{self, Dataset};
use conetest_core::rng::Rng;
use conetest_core::{linalg, Matrix, Vector};

use super::{gaussian_matrix, gaussian_vector};

/// Proximal gradient with a fixed step `1/L`, run to a tight tolerance.
pub fn ista(data: &Dataset, lambda: f64) -> Vector {
    let h = model::hessian(&Vector::zeros(data.p()), data).unwrap();
    let step = 1.0 / h.symmetric_eigenvalues().max().max(1e-12);
    let mut b = Vector::zeros(data.p());
    for _ in 0..200_000 {
        let g = model::gradient(&b, data).unwrap();
        let next = (&b - g * step).map(|z| lasso::soft_threshold(z, step * lambda));
        let moved = (&next - &b).amax();
        b = next;
        if moved < 1e-14 {
            break;
        }
    }
    b
}

/// Minimal ℓ₁ norm subject to `|Htt w − v|∞ ≤ λ`, by enumerating every
/// vertex of the arrangement `{wᵢ = 0} ∪ {(Htt w − v)ⱼ = ±λ}`.
pub fn dantzig_oracle(htt: &Matrix, v: &Vector, lambda: f64) -> f64 {
    let q = htt.nrows();
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    for i in 0..q {
        let mut a = vec![0.0; q];
        a[i] = 1.0;
        planes.push((a, 0.0));
    }
    for j in 0..q {
        let row: Vec<f64> = htt.row(j).iter().copied().collect();
        planes.push((row.clone(), v[j] + lambda));
        planes.push((row, v[j] - lambda));
    }
    let mut best = f64::INFINITY;
    let m = planes.len();
    let mut idx: Vec<usize> = (0..q).collect();
    loop {
        let a = Matrix::from_fn(q, q, |r, c| planes[idx[r]].0[c]);
        let b = Vector::from_fn(q, |r, _| planes[idx[r]].1);
        if let Some(w) = a.clone().lu().solve(&b) {
            if (&a * &w - &b).amax() < 1e-9 && (htt * &w - v).amax() <= lambda + 1e-9 {
                best = best.min(w.lp_norm(1));
            }
        }
        // Next combination.
        let mut k = q;
        while k > 0 && idx[k - 1] == m - q + k - 1 {
            k -= 1;
        }
        if k == 0 {
            break;
        }
        idx[k - 1] += 1;
        for t in k..q {
            idx[t] = idx[t - 1] + 1;
        }
    }
    best
}

/// KKT residual of a projection: primal feasibility, dual feasibility,
/// complementary slackness and stationarity `V⁻¹(y − η) = R_Sᵀ μ`.
pub fn kkt_residual(y: &Vector, v: &Matrix, cone: &ConeSpec, p: &Projection) -> f64 {
    let r = cone.r_mat();
    let slack = r * &p.point - cone.offset();
    let primal = slack.iter().map(|s| (-s).max(0.0)).fold(0.0, f64::max);
    let grad = linalg::spd_inverse(v, "V").unwrap() * (y - &p.point);
    let (mu, stationarity) = if p.active_set.is_empty() {
        (Vector::zeros(0), grad.amax())
    } else {
        let rs = Matrix::from_fn(p.active_set.len(), r.ncols(), |i, j| r[(p.active_set[i], j)]);
        // Least-squares multipliers for −Rₛᵀμ = V⁻¹(y − η) (μ ≤ 0 for Rα ≥ r).
        let rt = rs.transpose();
        let mu = (rt.transpose() * &rt).lu().solve(&(rt.transpose() * &grad)).unwrap();
        (mu.clone(), (&rt * mu - &grad).amax())
    };
    let dual = mu.iter().map(|m| m.max(0.0)).fold(0.0, f64::max);
    let comp = p.active_set.iter().map(|&i| slack[i].abs()).fold(0.0, f64::max);
    primal.max(dual).max(comp).max(stationarity)
}

pub fn random_cone(rng: &mut Rng, d: usize, k: usize, centered: bool) -> ConeSpec {
    loop {
        let r = gaussian_matrix(rng, k, d);
        let off = if centered { Vector::zeros(k) } else { gaussian_vector(rng, k) };
        if let Ok(c) = ConeSpec::new(r, off, ConeKind::Custom) {
            return c;
        }
    }
}

/// Projected gradient on the dual: maximise over μ ≥ 0, an iterative
/// oracle independent of the active-set enumeration.
pub fn dual_oracle(y: &Vector, v: &Matrix, cone: &ConeSpec) -> Vector {
    let r = cone.r_mat();
    let a = r * v * r.transpose();
    let step = 1.0 / a.symmetric_eigenvalues().max();
    let mut mu = Vector::zeros(r.nrows());
    for _ in 0..200_000 {
        // η(μ) = y + V Rᵀ μ; gradient of the dual is r − Rη.
        let eta = y + v * r.transpose() * &mu;
        let g = cone.offset() - r * &eta;
        let next = (&mu + g * step).map(|m| m.max(0.0));
        let moved = (&next - &mu).amax();
        mu = next;
        if moved < 1e-15 {
            break;
        }
    }
    y + v * r.transpose() * mu
}


//! Chi-bar-squared distributions: mixture weights, tail probabilities,
//! critical values and a sampling oracle.
//!
//! `χ̄²(V, C)` is the law of `T₀ = yᵀV⁻¹y − min_{η∈C}(y−η)ᵀV⁻¹(y−η)` for
//! `y ~ N(0, V)`, and equals the mixture `Σᵢ wᵢ χ²ᵢ` with `χ²₀` the point
//! mass at zero. For the nonnegative orthant the weights are
//!
//! ```text
//! w_i = Σ_{|A| = i}  p{(V_{AᶜAᶜ})⁻¹} · p{V_{A;Aᶜ}}
//! ```
//!
//! where `p{Λ} = Pr{z ≥ 0}` for `z ~ N(0, Λ)` and `V_{A;Aᶜ}` is the
//! covariance of `y_A` given `y_{Aᶜ} = 0`. An orthant probability over an
//! empty index set is 1. Orthant probabilities are exact in one and two
//! dimensions and estimated by antithetic Monte Carlo otherwise, so general
//! weight vectors carry Monte Carlo error and are renormalized to sum to one.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::cones::{Projector, Region};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::rng;
use crate::special;

/// Largest dimension accepted by the subset enumeration.
pub const MAX_WEIGHT_DIM: usize = 12;
/// Draws per Monte Carlo batch; batch `b` uses sub-stream `(seed, b)`.
pub const MC_BATCH: usize = 10_000;

/// Monte Carlo sample size and seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    pub samples: usize,
    pub seed: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            samples: 100_000,
            seed: rng::DEFAULT_SEED,
        }
    }
}

impl McConfig {
    pub fn new(samples: usize, seed: u64) -> Self {
        Self { samples, seed }
    }

    fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::input("Monte Carlo sample size must be positive"));
        }
        Ok(())
    }

    fn sub(&self, index: u64) -> Self {
        Self {
            samples: self.samples,
            seed: rng::derive_seed(self.seed, index),
        }
    }
}

/// Provenance of a weight vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DistMeta {
    pub m: usize,
    pub description: String,
    /// Set when any weight was estimated by Monte Carlo.
    pub mc: Option<McConfig>,
}

/// Mixture weights `(w_0, …, w_m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiBarDist {
    weights: Vec<f64>,
    pub meta: DistMeta,
}

impl ChiBarDist {
    pub fn new(weights: Vec<f64>, description: impl Into<String>) -> Result<Self> {
        Self::with_meta(weights, description.into(), None)
    }

    fn with_meta(weights: Vec<f64>, description: String, mc: Option<McConfig>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::input("weight vector is empty"));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::input(format!("weights must be finite and nonnegative: {weights:?}")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-6 {
            return Err(Error::input(format!("weights sum to {total}, expected 1")));
        }
        Ok(Self {
            meta: DistMeta {
                m: weights.len() - 1,
                description,
                mc,
            },
            weights,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Largest mixture index `m`.
    pub fn m(&self) -> usize {
        self.weights.len() - 1
    }

    /// Mass of the point mass at zero.
    pub fn w0(&self) -> f64 {
        self.weights[0]
    }
}

/// Orthant probability with its Monte Carlo standard error (zero when exact).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrthantEstimate {
    pub probability: f64,
    pub std_error: f64,
}

impl OrthantEstimate {
    fn exact(probability: f64) -> Self {
        Self {
            probability,
            std_error: 0.0,
        }
    }
}

/// `Pr{z ≥ 0}` for `z ~ N(0, Λ)`.
pub fn orthant_probability(lambda: &Matrix, mc: &McConfig) -> Result<OrthantEstimate> {
    let m = lambda.nrows();
    if lambda.ncols() != m {
        return Err(Error::input("covariance must be square"));
    }
    if m == 0 {
        return Ok(OrthantEstimate::exact(1.0));
    }
    linalg::require_pd(lambda, 0.0, "orthant covariance").map_err(|e| match e {
        Error::Degenerate(msg) => Error::Input(msg),
        other => other,
    })?;
    match m {
        1 => Ok(OrthantEstimate::exact(0.5)),
        2 => {
            let rho = lambda[(0, 1)] / libm::sqrt(lambda[(0, 0)] * lambda[(1, 1)]);
            Ok(OrthantEstimate::exact(0.25 + libm::asin(rho.clamp(-1.0, 1.0)) / (2.0 * PI)))
        }
        _ => orthant_monte_carlo(lambda, mc),
    }
}

fn orthant_monte_carlo(lambda: &Matrix, mc: &McConfig) -> Result<OrthantEstimate> {
    mc.validate()?;
    let m = lambda.nrows();
    let l = linalg::cholesky(lambda, "orthant covariance")?.l();
    // Row-major lower triangle for the inner loop.
    let mut tri = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..=i {
            tri[i * m + j] = l[(i, j)];
        }
    }
    let mut g = vec![0.0; m];
    let (mut sum, mut sum_sq) = (0.0_f64, 0.0_f64);
    let batches = mc.samples.div_ceil(MC_BATCH);
    for b in 0..batches {
        let mut stream = rng::stream_at(mc.seed, b as u64);
        let count = MC_BATCH.min(mc.samples - b * MC_BATCH);
        for _ in 0..count {
            for v in g.iter_mut() {
                *v = rng::std_normal(&mut stream);
            }
            let (mut pos, mut neg) = (true, true);
            for i in 0..m {
                let z: f64 = tri[i * m..i * m + i + 1].iter().zip(&g).map(|(a, b)| a * b).sum();
                pos &= z >= 0.0;
                neg &= z <= 0.0;
                if !pos && !neg {
                    break;
                }
            }
            // Antithetic pair (z, −z).
            let pair = 0.5 * (pos as u8 as f64 + neg as u8 as f64);
            sum += pair;
            sum_sq += pair * pair;
        }
    }
    let n = mc.samples as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0);
    Ok(OrthantEstimate {
        probability: mean,
        std_error: libm::sqrt(var / n),
    })
}

fn binomial(m: usize, i: usize) -> f64 {
    let i = i.min(m - i);
    let mut c = 1.0_f64;
    for t in 0..i {
        c = c * (m - t) as f64 / (t + 1) as f64;
    }
    libm::round(c)
}

/// `w_i = 2^{−m} C(m, i)`: the weights for a diagonal `V` and the orthant.
pub fn binomial_weights(m: usize) -> Vec<f64> {
    let scale = libm::ldexp(1.0, -(m as i32));
    (0..=m).map(|i| binomial(m, i) * scale).collect()
}

fn is_diagonal(v: &Matrix) -> bool {
    let scale = v.amax().max(f64::MIN_POSITIVE);
    (0..v.nrows()).all(|i| (0..v.ncols()).all(|j| i == j || v[(i, j)].abs() <= 1e-15 * scale))
}

fn check_weight_cov(v: &Matrix) -> Result<usize> {
    let m = v.nrows();
    if m == 0 || v.ncols() != m {
        return Err(Error::input("V must be a nonempty square matrix"));
    }
    linalg::require_pd(v, 0.0, "V")?;
    Ok(m)
}

/// Weights of `χ̄²(V, ℝ^m_+)`; a diagonal `V` short-circuits to binomial weights.
pub fn weights_orthant(v: &Matrix, mc: &McConfig) -> Result<ChiBarDist> {
    let m = check_weight_cov(v)?;
    if is_diagonal(v) {
        return ChiBarDist::with_meta(
            binomial_weights(m),
            format!("orthant m={m}, diagonal V (binomial weights)"),
            None,
        );
    }
    weights_orthant_general(v, mc)
}

/// Subset-formula weights for `χ̄²(V, ℝ^m_+)`, never short-circuiting.
pub fn weights_orthant_general(v: &Matrix, mc: &McConfig) -> Result<ChiBarDist> {
    let m = check_weight_cov(v)?;
    if m > MAX_WEIGHT_DIM {
        return Err(Error::Capability(format!(
            "weight enumeration supports m <= {MAX_WEIGHT_DIM}, got {m}"
        )));
    }
    mc.validate()?;
    let mut raw = vec![0.0; m + 1];
    let mut used_mc = false;
    for mask in 0u32..(1 << m) {
        let inside: Vec<usize> = (0..m).filter(|&i| mask & (1 << i) != 0).collect();
        let outside: Vec<usize> = (0..m).filter(|&i| mask & (1 << i) == 0).collect();
        // p{(V_{AᶜAᶜ})⁻¹}
        let first = if outside.is_empty() {
            1.0
        } else {
            let block = linalg::submatrix(v, &outside, &outside);
            let prec = linalg::spd_inverse(&block, "V_{AᶜAᶜ}")?;
            used_mc |= outside.len() >= 3;
            orthant_probability(&prec, &mc.sub(2 * mask as u64))?.probability
        };
        // p{V_{A;Aᶜ}}
        let second = if inside.is_empty() {
            1.0
        } else {
            let vaa = linalg::submatrix(v, &inside, &inside);
            let cond = if outside.is_empty() {
                vaa
            } else {
                let vac = linalg::submatrix(v, &inside, &outside);
                let vcc = linalg::submatrix(v, &outside, &outside);
                let chol = linalg::cholesky(&vcc, "V_{AᶜAᶜ}")?;
                linalg::symmetrize(&(vaa - &vac * chol.solve(&vac.transpose())))
            };
            used_mc |= inside.len() >= 3;
            orthant_probability(&cond, &mc.sub(2 * mask as u64 + 1))?.probability
        };
        raw[inside.len()] += first * second;
    }
    let total: f64 = raw.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Internal("weight estimates sum to zero".into()));
    }
    let weights = raw.iter().map(|w| w / total).collect();
    ChiBarDist::with_meta(
        weights,
        format!("orthant m={m}, general V (subset formula)"),
        used_mc.then_some(*mc),
    )
}

fn reduced_orthant(r_mat: &Matrix, v: &Matrix, mc: &McConfig) -> Result<(usize, usize, ChiBarDist)> {
    let (k, d) = r_mat.shape();
    if v.shape() != (d, d) {
        return Err(Error::input(format!("R is {k}x{d} but V is {:?}", v.shape())));
    }
    if k == 0 || k > d || linalg::rank(r_mat, 1e-10) != k {
        return Err(Error::input(format!("R ({k}x{d}) must have full row rank")));
    }
    let lam = linalg::symmetrize(&(r_mat * v * r_mat.transpose()));
    Ok((k, d, weights_orthant(&lam, mc)?))
}

/// Null weights for the pair `C = {Rα ≥ r}`, `M = {Rα = r}`:
/// `w_j(k, RVRᵀ, ℝ^k_+)` placed at indices `0..=k` of an `(d+1)`-vector.
pub fn weights_linear_constraint(r_mat: &Matrix, v: &Matrix, mc: &McConfig) -> Result<ChiBarDist> {
    let (k, d, inner) = reduced_orthant(r_mat, v, mc)?;
    let mut w = vec![0.0; d + 1];
    w[..=k].copy_from_slice(inner.weights());
    ChiBarDist::with_meta(
        w,
        format!("linear constraint pair, k={k}, d={d}; {}", inner.meta.description),
        inner.meta.mc,
    )
}

/// Weights of `χ̄²(V, C_R)` for the cone `C_R = {Rα ≥ 0}` itself:
/// `w_{d−k+j}(d, V, C_R) = w_j(k, RVRᵀ, ℝ^k_+)`, all other weights zero.
pub fn weights_cone(r_mat: &Matrix, v: &Matrix, mc: &McConfig) -> Result<ChiBarDist> {
    let (k, d, inner) = reduced_orthant(r_mat, v, mc)?;
    let mut w = vec![0.0; d + 1];
    w[d - k..].copy_from_slice(inner.weights());
    ChiBarDist::with_meta(
        w,
        format!("polyhedral cone, k={k}, d={d}; {}", inner.meta.description),
        inner.meta.mc,
    )
}

/// `Pr{χ̄² ≥ c} = Σ wᵢ Pr{χ²ᵢ ≥ c}`; any `c ≤ 0` gives 1.
pub fn chibar_tail(dist: &ChiBarDist, c: f64) -> f64 {
    if c <= 0.0 {
        return 1.0;
    }
    dist.weights
        .iter()
        .enumerate()
        .map(|(i, &w)| if w == 0.0 { 0.0 } else { w * special::chi2_sf(i, c) })
        .sum::<f64>()
        .clamp(0.0, 1.0)
}

/// `Pr{χ̄² > t}`: equal to [`chibar_tail`] for `t > 0`, and `1 − w₀` at
/// `t = 0` where the atom sits. Used as the p-value of an observed statistic.
pub fn p_value(dist: &ChiBarDist, t: f64) -> f64 {
    if t > 0.0 {
        chibar_tail(dist, t)
    } else if t == 0.0 {
        (1.0 - dist.w0()).clamp(0.0, 1.0)
    } else {
        1.0
    }
}

/// Mixture CDF `Pr{χ̄² ≤ t}`.
pub fn chibar_cdf(dist: &ChiBarDist, t: f64) -> f64 {
    1.0 - p_value(dist, t)
}

/// `c ≥ 0` with `Pr{χ̄² ≥ c} = γ`, by bisection.
///
/// `γ = 1 − w₀` returns 0; larger `γ` cannot be attained by any threshold.
pub fn critical_value(dist: &ChiBarDist, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::input(format!("gamma must lie in (0, 1), got {gamma}")));
    }
    let max_level = 1.0 - dist.w0();
    if (gamma - max_level).abs() <= 1e-12 {
        return Ok(0.0);
    }
    if gamma > max_level {
        return Err(Error::LevelUnachievable { gamma, max_level });
    }
    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    while chibar_tail(dist, hi) >= gamma {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::Internal("critical value bracket diverged".into()));
        }
    }
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..400 {
        mid = 0.5 * (lo + hi);
        let tail = chibar_tail(dist, mid);
        if (tail - gamma).abs() <= 1e-13 || hi - lo <= 1e-15 * hi {
            break;
        }
        if tail > gamma {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(mid)
}

/// Sorted draws of `T₀` for `y ~ N(0, V)` against a region through the origin.
pub fn chibar_sample(v: &Matrix, region: &Region, n: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::input("sample size must be positive"));
    }
    let offset_free = match region {
        Region::Cone(c) => c.offset().amax() == 0.0,
        Region::Space(m) => m.offset().amax() == 0.0,
        Region::Whole(_) => true,
    };
    if !offset_free {
        return Err(Error::input("sampling oracle needs a region through the origin (r = 0)"));
    }
    let projector = Projector::new(v, region)?;
    let l = linalg::cholesky(v, "V")?.l();
    let d = v.nrows();
    let mut out = Vec::with_capacity(n);
    let batches = n.div_ceil(MC_BATCH);
    for b in 0..batches {
        let mut stream = rng::stream_at(seed, b as u64);
        let count = MC_BATCH.min(n - b * MC_BATCH);
        for _ in 0..count {
            let g = Vector::from_fn(d, |_, _| rng::std_normal(&mut stream));
            let y = &l * &g;
            // yᵀV⁻¹y = gᵀg when y = Lg.
            let full = g.norm_squared();
            let proj = projector.project(&y)?;
            let t = full - proj.value;
            out.push(if t <= 1e-10 * (1.0 + full) { 0.0 } else { t });
        }
    }
    out.sort_by(f64::total_cmp);
    Ok(out)
}

/// Kolmogorov–Smirnov distance between a sorted sample and the mixture CDF,
/// accounting for the atom at zero.
pub fn ks_distance(sorted: &[f64], dist: &ChiBarDist) -> f64 {
    let n = sorted.len() as f64;
    let mut worst = 0.0_f64;
    let mut i = 0;
    while i < sorted.len() {
        let x = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == x {
            j += 1;
        }
        // Continuous away from the atom, so the left limit equals the CDF for x > 0.
        let below = if x > 0.0 { chibar_cdf(dist, x) } else { 0.0 };
        let at = chibar_cdf(dist, x);
        worst = worst.max((i as f64 / n - below).abs()).max((j as f64 / n - at).abs());
        i = j;
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_orthant_cases() {
        let mc = McConfig::default();
        let one = Matrix::from_element(1, 1, 3.0);
        assert_eq!(orthant_probability(&one, &mc).unwrap().probability, 0.5);
        let two = Matrix::identity(2, 2);
        assert_eq!(orthant_probability(&two, &mc).unwrap().probability, 0.25);
        let corr = Matrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
        // asin(0.5) = π/6 → 1/4 + 1/12 = 1/3.
        let p = orthant_probability(&corr, &mc).unwrap().probability;
        assert!((p - 1.0 / 3.0).abs() < 1e-15);
        let bad = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(orthant_probability(&bad, &mc), Err(Error::Input(_))));
    }

    #[test]
    fn identity_three_dim_orthant() {
        let est = orthant_probability(&Matrix::identity(3, 3), &McConfig::new(100_000, 9)).unwrap();
        assert!((est.probability - 0.125).abs() <= 3.0 * est.std_error);
        assert!(est.std_error > 0.0);
    }

    #[test]
    fn binomial_examples() {
        assert_eq!(binomial_weights(1), vec![0.5, 0.5]);
        assert_eq!(binomial_weights(2), vec![0.25, 0.5, 0.25]);
        let d = weights_orthant(&Matrix::identity(2, 2), &McConfig::default()).unwrap();
        assert_eq!(d.weights(), &[0.25, 0.5, 0.25]);
        assert!(d.meta.mc.is_none());
    }

    #[test]
    fn tail_examples() {
        let half = ChiBarDist::new(vec![0.5, 0.5], "test").unwrap();
        assert_eq!(chibar_tail(&half, 0.0), 1.0);
        assert_eq!(chibar_tail(&half, -3.0), 1.0);
        assert!((chibar_tail(&half, 2.7055) - 0.05).abs() < 1e-4);
        let point = ChiBarDist::new(vec![0.0, 1.0, 0.0], "test").unwrap();
        assert!((chibar_tail(&point, 1.7) - special::chi2_sf(1, 1.7)).abs() < 1e-16);
    }

    #[test]
    fn critical_value_examples() {
        let half = ChiBarDist::new(vec![0.5, 0.5], "test").unwrap();
        let c = critical_value(&half, 0.05).unwrap();
        let z = special::norm_quantile(0.95);
        assert!((c - z * z).abs() < 1e-9);
        assert!((chibar_tail(&half, c) - 0.05).abs() < 1e-10);
        assert_eq!(critical_value(&half, 0.5).unwrap(), 0.0);
        assert!(matches!(
            critical_value(&half, 0.6),
            Err(Error::LevelUnachievable { .. })
        ));
        assert!(critical_value(&half, 0.0).is_err());
    }

    #[test]
    fn p_value_at_the_atom() {
        let d = ChiBarDist::new(vec![0.25, 0.5, 0.25], "test").unwrap();
        assert_eq!(p_value(&d, 0.0), 0.75);
        assert_eq!(p_value(&d, 2.0), chibar_tail(&d, 2.0));
    }

    #[test]
    fn rejects_bad_weights() {
        assert!(ChiBarDist::new(vec![0.5, 0.4], "x").is_err());
        assert!(ChiBarDist::new(vec![1.5, -0.5], "x").is_err());
        assert!(ChiBarDist::new(vec![], "x").is_err());
    }

    #[test]
    fn capability_bound() {
        let v = Matrix::from_fn(13, 13, |i, j| if i == j { 1.0 } else { 0.1 });
        assert!(matches!(
            weights_orthant(&v, &McConfig::new(10, 1)),
            Err(Error::Capability(_))
        ));
    }
}

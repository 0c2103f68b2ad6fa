//! One-sided Wald, likelihood-ratio and score statistics for
//! `H₀: α* ∈ M` against `H₁: α* ∈ C \ M`, and the full test pipeline.
//!
//! All three statistics carry an explicit factor `n`, so their common null
//! law is the pivotal `χ̄²(Ĥ_{α|θ}⁻¹, C)`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::chibar::{self, ChiBarDist, McConfig};
use crate::cones::{ConeSpec, LinearSpace, Projection, Projector, Region};
use crate::dantzig::{self, DantzigConfig};
use crate::decorrelate::{self, DecorrelatedQuadratic, DecorrelationState};
use crate::error::{Error, Result};
use crate::lasso::{self, LassoConfig};
use crate::linalg::{self, Matrix, Vector};
use crate::model::{Dataset, GaussianLinear, LikelihoodModel, ParamPartition};

/// Relative size of negative round-off that is clipped to zero.
pub const CLIP_TOL: f64 = 1e-12;

/// Tuning of the first step and of the null-weight Monte Carlo.
#[derive(Debug, Clone, PartialEq)]
pub struct TestConfig {
    /// Explicit LASSO penalty; otherwise `lambda_scale · √(log p / n)`.
    pub lambda: Option<f64>,
    pub lambda_scale: f64,
    /// Explicit Dantzig bound; otherwise `lambda_prime_scale · √(log p / n)`.
    pub lambda_prime: Option<f64>,
    pub lambda_prime_scale: f64,
    pub lasso_max_iters: usize,
    pub lasso_tol: f64,
    pub dantzig_tol: f64,
    pub mc: McConfig,
}

impl Default for TestConfig {
    fn default() -> Self {
        Self {
            lambda: None,
            lambda_scale: 1.0,
            lambda_prime: None,
            lambda_prime_scale: 0.5,
            lasso_max_iters: 10_000,
            lasso_tol: 1e-8,
            dantzig_tol: 1e-9,
            mc: McConfig::default(),
        }
    }
}

impl TestConfig {
    pub fn lambda_for(&self, n: usize, p: usize) -> f64 {
        self.lambda
            .unwrap_or_else(|| lasso::default_lambda(n, p, self.lambda_scale))
    }

    pub fn lambda_prime_for(&self, n: usize, p: usize) -> f64 {
        self.lambda_prime
            .unwrap_or_else(|| dantzig::default_lambda_prime(n, p, self.lambda_prime_scale))
    }
}

/// The hypothesis pair: alternative region `C` and null region `M ⊆ C`.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    pub alternative: Region,
    pub null: LinearSpace,
}

impl Hypothesis {
    /// `C = {Rα ≥ r}` against its face `M = {Rα = r}`.
    pub fn one_sided(cone: ConeSpec) -> Self {
        let null = cone.face();
        Self {
            alternative: Region::Cone(cone),
            null,
        }
    }

    /// Unrestricted alternative `C = ℝ^d` against `M`.
    pub fn two_sided(null: LinearSpace) -> Self {
        Self {
            alternative: Region::Whole(null.dim()),
            null,
        }
    }

    pub fn dim(&self) -> usize {
        self.null.dim()
    }

    pub fn is_one_sided(&self) -> bool {
        !matches!(self.alternative, Region::Whole(_))
    }

    /// Null distribution for weight matrix `V = Ĥ⁻¹`: the orthant reduction
    /// for a one-sided pair, `χ²_k` for a two-sided one.
    pub fn null_distribution(&self, v: &Matrix, mc: &McConfig) -> Result<ChiBarDist> {
        match &self.alternative {
            Region::Cone(c) => chibar::weights_linear_constraint(c.r_mat(), v, mc),
            _ => {
                let k = self.null.k();
                let mut w = vec![0.0; self.dim() + 1];
                w[k] = 1.0;
                ChiBarDist::new(w, format!("chi-squared with {k} degrees of freedom"))
            }
        }
    }

    fn check(&self, d: usize) -> Result<()> {
        if self.dim() != d || self.alternative.dim() != d {
            return Err(Error::input(format!(
                "constraint dimension {} does not match the {d} tested parameters",
                self.dim()
            )));
        }
        Ok(())
    }
}

/// Step-one output: pilot estimate, decorrelation and `α̃`.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstStep {
    pub state: DecorrelationState,
    pub alpha_tilde: Vector,
    pub quadratic: DecorrelatedQuadratic,
    pub lambda: f64,
    pub lambda_prime: f64,
    pub lasso_sweeps: usize,
}

/// LASSO → Dantzig weights → `Ĥ_{α|θ}` → one-step estimator.
pub fn first_step(data: &Dataset, partition: &ParamPartition, config: &TestConfig) -> Result<FirstStep> {
    if partition.p() != data.p() {
        return Err(Error::input(format!(
            "partition is over {} coefficients but the design has {}",
            partition.p(),
            data.p()
        )));
    }
    let (n, p) = (data.n(), data.p());
    let lambda = config.lambda_for(n, p);
    let lambda_prime = config.lambda_prime_for(n, p);
    let model = GaussianLinear::new(data);

    let lasso_cfg = LassoConfig {
        lambda,
        max_iters: config.lasso_max_iters,
        tol: config.lasso_tol,
    };
    let fit = lasso::lasso_solve(data, &lasso_cfg, None).map_err(|e| e.in_stage("lasso"))?;
    let dz = DantzigConfig {
        lambda_prime,
        tol: config.dantzig_tol,
    };
    let state = decorrelate::decorrelate(&model, partition, &fit.beta, &dz)
        .map_err(|e| e.in_stage("decorrelation"))?;
    let alpha_tilde = decorrelate::one_step_estimator(&state, &model, partition)
        .map_err(|e| e.in_stage("one-step estimator"))?;
    let quadratic = decorrelate::decorrelated_quadratic(&state, &model, partition)
        .map_err(|e| e.in_stage("decorrelated likelihood"))?;
    Ok(FirstStep {
        state,
        alpha_tilde,
        quadratic,
        lambda,
        lambda_prime,
        lasso_sweeps: fit.sweeps,
    })
}

fn clip(t: f64, reference: f64, what: &str) -> Result<f64> {
    if t >= 0.0 {
        Ok(t)
    } else if t >= -CLIP_TOL * (1.0 + reference.abs()) {
        Ok(0.0)
    } else {
        Err(Error::Internal(format!("{what} statistic is negative ({t:e})")))
    }
}

/// `n · [min_M − min_C]` of `(y − b)ᵀ V⁻¹ (y − b)`, with both projections.
fn projection_gap(
    y: &Vector,
    v: &Matrix,
    hyp: &Hypothesis,
    n: usize,
    what: &str,
) -> Result<(f64, Projection, Projection)> {
    let on_m = Projector::new(v, &Region::Space(hyp.null.clone()))?.project(y)?;
    let on_c = Projector::new(v, &hyp.alternative)?.project(y)?;
    let nf = n as f64;
    let t = clip(nf * (on_m.value - on_c.value), nf * on_m.value, what)?;
    Ok((t, on_m, on_c))
}

/// One-sided Wald statistic `n·[inf_M − inf_C] (α̃ − b)ᵀĤ(α̃ − b)`.
pub fn wald_statistic(alpha_tilde: &Vector, h_partial: &Matrix, hyp: &Hypothesis, n: usize) -> Result<f64> {
    hyp.check(alpha_tilde.len())?;
    let v = linalg::spd_inverse(h_partial, "partial information matrix")?;
    Ok(projection_gap(alpha_tilde, &v, hyp, n, "Wald")?.0)
}

/// Likelihood-ratio statistic with the decorrelated-likelihood minimizers.
#[derive(Debug, Clone, PartialEq)]
pub struct LrOutcome {
    pub statistic: f64,
    pub b_m: Vector,
    pub b_c: Vector,
}

/// `2n[inf_M ℓ_de − inf_C ℓ_de]`, exact for a quadratic `ℓ_de`.
pub fn lr_statistic(quadratic: &DecorrelatedQuadratic, hyp: &Hypothesis, n: usize) -> Result<LrOutcome> {
    hyp.check(quadratic.minimizer.len())?;
    let v = linalg::spd_inverse(&quadratic.hessian, "decorrelated likelihood Hessian")?;
    let (statistic, on_m, on_c) = projection_gap(&quadratic.minimizer, &v, hyp, n, "likelihood ratio")?;
    Ok(LrOutcome {
        statistic,
        b_m: on_m.point,
        b_c: on_c.point,
    })
}

/// `n·(Û(b_M) − Û(b_C))ᵀ Ĥ⁻¹ (Û(b_M) − Û(b_C))`.
pub fn score_statistic<M: LikelihoodModel + ?Sized>(
    state: &DecorrelationState,
    model: &M,
    partition: &ParamPartition,
    b_m: &Vector,
    b_c: &Vector,
    n: usize,
) -> Result<f64> {
    let um = decorrelate::decorrelated_score(b_m, state, model, partition)?;
    let uc = decorrelate::decorrelated_score(b_c, state, model, partition)?;
    let delta = um - uc;
    let chol = linalg::cholesky(&state.h_partial, "partial information matrix")?;
    let t = n as f64 * delta.dot(&chol.solve(&delta));
    clip(t, t, "score")
}

/// Statistics order in [`TestReport`] arrays.
pub const STATISTICS: [&str; 3] = ["wald", "lr", "score"];

/// Intermediate quantities behind a [`TestReport`].
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub alpha_hat: Vector,
    pub alpha_tilde: Vector,
    pub h_partial: Matrix,
    /// Unconstrained minimizer of `ℓ_de`.
    pub b_star: Vector,
    pub b_m: Vector,
    pub b_c: Vector,
    pub lambda: f64,
    pub lambda_prime: f64,
    pub lasso_sweeps: usize,
    pub mc: Option<McConfig>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestReport {
    pub t_wald: f64,
    pub t_lr: f64,
    pub t_score: f64,
    pub dist: ChiBarDist,
    pub gamma: f64,
    pub critical: f64,
    /// Wald, LR, score.
    pub p_values: [f64; 3],
    pub reject: [bool; 3],
    pub one_sided: bool,
    pub diagnostics: Diagnostics,
}

impl TestReport {
    pub fn statistics(&self) -> [f64; 3] {
        [self.t_wald, self.t_lr, self.t_score]
    }
}

/// Step two on a completed first step.
pub fn test_from_first_step(
    data: &Dataset,
    partition: &ParamPartition,
    first: &FirstStep,
    hyp: &Hypothesis,
    gamma: f64,
    mc: &McConfig,
) -> Result<TestReport> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::input(format!("gamma must lie in (0, 1), got {gamma}")));
    }
    hyp.check(partition.d())?;
    let n = data.n();
    let model = GaussianLinear::new(data);
    let h = &first.state.h_partial;

    let t_wald = wald_statistic(&first.alpha_tilde, h, hyp, n).map_err(|e| e.in_stage("wald"))?;
    let lr = lr_statistic(&first.quadratic, hyp, n).map_err(|e| e.in_stage("likelihood ratio"))?;
    let t_score = score_statistic(&first.state, &model, partition, &lr.b_m, &lr.b_c, n)
        .map_err(|e| e.in_stage("score"))?;

    let v = linalg::spd_inverse(h, "partial information matrix").map_err(|e| e.in_stage("weights"))?;
    let dist = hyp.null_distribution(&v, mc).map_err(|e| e.in_stage("weights"))?;
    let critical = chibar::critical_value(&dist, gamma).map_err(|e| e.in_stage("critical value"))?;

    let stats = [t_wald, lr.statistic, t_score];
    let p_values = stats.map(|t| chibar::p_value(&dist, t));
    let reject = stats.map(|t| t >= critical);
    Ok(TestReport {
        t_wald,
        t_lr: lr.statistic,
        t_score,
        one_sided: hyp.is_one_sided(),
        diagnostics: Diagnostics {
            alpha_hat: first.state.alpha_hat.clone(),
            alpha_tilde: first.alpha_tilde.clone(),
            h_partial: h.clone(),
            b_star: first.quadratic.minimizer.clone(),
            b_m: lr.b_m,
            b_c: lr.b_c,
            lambda: first.lambda,
            lambda_prime: first.lambda_prime,
            lasso_sweeps: first.lasso_sweeps,
            mc: dist.meta.mc,
        },
        dist,
        gamma,
        critical,
        p_values,
        reject,
    })
}

/// Full pipeline: first step, the three statistics, null weights,
/// critical value and p-values.
pub fn run_test(
    data: &Dataset,
    partition: &ParamPartition,
    hyp: &Hypothesis,
    gamma: f64,
    config: &TestConfig,
) -> Result<TestReport> {
    hyp.check(partition.d())?;
    let first = first_step(data, partition, config)?;
    test_from_first_step(data, partition, &first, hyp, gamma, &config.mc)
}

/// Rows of `R` as a list, for reporting.
pub fn constraint_rows(hyp: &Hypothesis) -> Vec<Vec<f64>> {
    let r = hyp.null.r_mat();
    (0..r.nrows()).map(|i| r.row(i).iter().copied().collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cones::{builtin_cone, BuiltinCone};

    fn monotone() -> Hypothesis {
        Hypothesis::one_sided(builtin_cone(BuiltinCone::Monotone, 2).unwrap().0)
    }

    #[test]
    fn wald_monotone_examples() {
        let h = Matrix::identity(2, 2);
        let a = Vector::from_vec(vec![2.0, 1.0]);
        assert!(wald_statistic(&a, &h, &monotone(), 1).unwrap().abs() < 1e-14);
        let b = Vector::from_vec(vec![1.0, 2.0]);
        assert!((wald_statistic(&b, &h, &monotone(), 1).unwrap() - 0.5).abs() < 1e-14);
        let on_m = Vector::from_vec(vec![0.3, 0.3]);
        assert_eq!(wald_statistic(&on_m, &h, &monotone(), 7).unwrap(), 0.0);
    }

    #[test]
    fn wald_scalar_nonnegative() {
        let hyp = Hypothesis::one_sided(builtin_cone(BuiltinCone::Nonnegative, 1).unwrap().0);
        let h = Matrix::from_element(1, 1, 2.5);
        for (a, want) in [(0.4, 50.0 * 2.5 * 0.16), (-0.7, 0.0)] {
            let t = wald_statistic(&Vector::from_element(1, a), &h, &hyp, 50).unwrap();
            assert!((t - want).abs() < 1e-12, "{t} vs {want}");
        }
    }

    #[test]
    fn two_sided_null_is_chi_squared() {
        let (_, face) = builtin_cone(BuiltinCone::Monotone, 3).unwrap();
        let hyp = Hypothesis::two_sided(face);
        let dist = hyp.null_distribution(&Matrix::identity(3, 3), &McConfig::default()).unwrap();
        assert_eq!(dist.weights(), &[0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn dimension_mismatch() {
        let h = Matrix::identity(3, 3);
        let a = Vector::zeros(3);
        assert!(matches!(wald_statistic(&a, &h, &monotone(), 1), Err(Error::Input(_))));
    }
}

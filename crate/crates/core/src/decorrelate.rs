//! Decorrelated score, one-step estimator, decorrelated likelihood and the
//! sample partial information matrix.

use alloc::format;

use crate::dantzig::{self, DantzigConfig};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::model::{HessianBlocks, LikelihoodModel, ParamPartition};

/// Smallest eigenvalue accepted for `Ĥ_{α|θ}` and the decorrelated-likelihood Hessian.
pub const PD_FLOOR: f64 = 1e-10;

/// Outputs of the first step shared by all three statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct DecorrelationState {
    pub beta_hat: Vector,
    pub alpha_hat: Vector,
    pub theta_hat: Vector,
    /// `(p−d)×d` decorrelation weights `Ŵ`.
    pub w_hat: Matrix,
    /// Symmetrized `Ĥ_{α|θ}`.
    pub h_partial: Matrix,
}

impl DecorrelationState {
    pub fn new(
        beta_hat: Vector,
        w_hat: Matrix,
        h_partial: Matrix,
        partition: &ParamPartition,
    ) -> Result<Self> {
        let (d, q) = (partition.d(), partition.nuisance().len());
        if beta_hat.len() != partition.p() {
            return Err(Error::input("beta_hat does not match the partition"));
        }
        if w_hat.shape() != (q, d) || h_partial.shape() != (d, d) {
            return Err(Error::input(format!(
                "W_hat is {:?} and H_partial is {:?}; expected ({q}, {d}) and ({d}, {d})",
                w_hat.shape(),
                h_partial.shape()
            )));
        }
        let h_partial = linalg::symmetrize(&h_partial);
        linalg::require_pd(&h_partial, PD_FLOOR, "partial information matrix").map_err(|e| match e {
            Error::Degenerate(msg) => Error::Degenerate(format!(
                "{msg}; increase the sample size or reduce the number of tested parameters"
            )),
            other => other,
        })?;
        Ok(Self {
            alpha_hat: partition.alpha(&beta_hat),
            theta_hat: partition.theta(&beta_hat),
            beta_hat,
            w_hat,
            h_partial,
        })
    }

    pub fn d(&self) -> usize {
        self.alpha_hat.len()
    }
}

/// Run Dantzig selection and form `Ĥ_{α|θ}` at the pilot estimate `β̂`.
pub fn decorrelate<M: LikelihoodModel + ?Sized>(
    model: &M,
    partition: &ParamPartition,
    beta_hat: &Vector,
    config: &DantzigConfig,
) -> Result<DecorrelationState> {
    let hess = model.hessian(beta_hat)?;
    let blocks = HessianBlocks::new(&hess, partition)?;
    let w_hat = dantzig::dantzig_matrix(&blocks, config)?;
    let h_partial = partial_information(&blocks, &w_hat)?;
    DecorrelationState::new(beta_hat.clone(), w_hat, h_partial, partition)
}

/// `sym(∇²_{αα}ℓ − Ŵᵀ∇²_{θα}ℓ)`; errors when not positive definite.
pub fn partial_information(blocks: &HessianBlocks, w_hat: &Matrix) -> Result<Matrix> {
    if w_hat.shape() != (blocks.q(), blocks.d()) {
        return Err(Error::input(format!(
            "W_hat is {:?}, expected ({}, {})",
            w_hat.shape(),
            blocks.q(),
            blocks.d()
        )));
    }
    let raw = &blocks.haa - w_hat.tr_mul(&blocks.hta);
    if !linalg::all_finite(&raw) {
        return Err(Error::input("partial information has non-finite entries"));
    }
    let sym = linalg::symmetrize(&raw);
    let lo = linalg::min_eigenvalue(&sym);
    if !(lo > PD_FLOOR) {
        return Err(Error::Degenerate(format!(
            "partial information matrix is not positive definite (min eigenvalue {lo:.3e}); \
             increase the sample size or reduce the number of tested parameters"
        )));
    }
    Ok(sym)
}

fn check_alpha(alpha: &Vector, d: usize) -> Result<()> {
    if alpha.len() != d {
        return Err(Error::input(format!("alpha has length {}, expected {d}", alpha.len())));
    }
    if alpha.iter().any(|v| !v.is_finite()) {
        return Err(Error::input("alpha contains non-finite values"));
    }
    Ok(())
}

/// `Û(α) = ∇_αℓ(α, θ̂) − Ŵᵀ∇_θℓ(α, θ̂)`.
pub fn decorrelated_score<M: LikelihoodModel + ?Sized>(
    alpha: &Vector,
    state: &DecorrelationState,
    model: &M,
    partition: &ParamPartition,
) -> Result<Vector> {
    check_alpha(alpha, partition.d())?;
    let beta = partition.assemble(alpha, &state.theta_hat)?;
    let grad = model.gradient(&beta)?;
    let ga = partition.alpha(&grad);
    let gt = partition.theta(&grad);
    Ok(ga - state.w_hat.tr_mul(&gt))
}

/// One Newton step `α̃ = α̂ − Ĥ_{α|θ}⁻¹ Û(α̂)`.
pub fn one_step_estimator<M: LikelihoodModel + ?Sized>(
    state: &DecorrelationState,
    model: &M,
    partition: &ParamPartition,
) -> Result<Vector> {
    let score = decorrelated_score(&state.alpha_hat, state, model, partition)?;
    let chol = linalg::cholesky(&state.h_partial, "partial information matrix")?;
    Ok(&state.alpha_hat - chol.solve(&score))
}

/// `ℓ_de(b) = ℓ(b, θ̂ − Ŵ(b − α̂))`.
pub fn decorrelated_likelihood<M: LikelihoodModel + ?Sized>(
    b: &Vector,
    state: &DecorrelationState,
    model: &M,
    partition: &ParamPartition,
) -> Result<f64> {
    check_alpha(b, partition.d())?;
    let theta = &state.theta_hat - &state.w_hat * (b - &state.alpha_hat);
    model.value(&partition.assemble(b, &theta)?)
}

/// Exact quadratic form of `ℓ_de` for quadratic models:
/// `ℓ_de(b) = ℓ_de(b*) + ½ (b − b*)ᵀ G (b − b*)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecorrelatedQuadratic {
    /// `G = JᵀHJ` with `J` the path Jacobian `[I; −Ŵ]`.
    pub hessian: Matrix,
    /// Unconstrained minimizer `b*`.
    pub minimizer: Vector,
}

pub fn decorrelated_quadratic<M: LikelihoodModel + ?Sized>(
    state: &DecorrelationState,
    model: &M,
    partition: &ParamPartition,
) -> Result<DecorrelatedQuadratic> {
    if !model.is_quadratic() {
        return Err(Error::Capability(
            "closed-form decorrelated likelihood requires a quadratic model".into(),
        ));
    }
    let hess = model.hessian(&state.beta_hat)?;
    let blk = HessianBlocks::new(&hess, partition)?;
    let w = &state.w_hat;
    let hw = &blk.hat * w;
    let g = &blk.haa - &hw - hw.transpose() + w.tr_mul(&(&blk.htt * w));
    let g = linalg::symmetrize(&g);
    linalg::require_pd(&g, PD_FLOOR, "decorrelated likelihood Hessian")?;
    // ∇ℓ_de(α̂) = Û(α̂).
    let score = decorrelated_score(&state.alpha_hat, state, model, partition)?;
    let chol = linalg::cholesky(&g, "decorrelated likelihood Hessian")?;
    let minimizer = &state.alpha_hat - chol.solve(&score);
    Ok(DecorrelatedQuadratic { hessian: g, minimizer })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Dataset, GaussianLinear};
    use alloc::vec;

    fn fixture() -> (Dataset, ParamPartition) {
        let x = Matrix::from_fn(8, 3, |i, j| ((i * 7 + j * 3) as f64 * 0.61).sin() + if i == j { 1.0 } else { 0.0 });
        let y = Vector::from_fn(8, |i, _| (i as f64 * 0.3).cos());
        (Dataset::new(x, y, 1.0).unwrap(), ParamPartition::leading(1, 3).unwrap())
    }

    #[test]
    fn zero_weights_reduce_to_plain_gradient() {
        let (data, part) = fixture();
        let model = GaussianLinear::new(&data);
        let beta = Vector::from_vec(vec![0.2, -0.1, 0.4]);
        let hess = model.hessian(&beta).unwrap();
        let blocks = HessianBlocks::new(&hess, &part).unwrap();
        let w = Matrix::zeros(2, 1);
        let h = partial_information(&blocks, &w).unwrap();
        assert!((h[(0, 0)] - blocks.haa[(0, 0)]).abs() < 1e-15);
        let state = DecorrelationState::new(beta.clone(), w, h, &part).unwrap();
        let alpha = Vector::from_vec(vec![0.7]);
        let u = decorrelated_score(&alpha, &state, &model, &part).unwrap();
        let full = model.gradient(&part.assemble(&alpha, &state.theta_hat).unwrap()).unwrap();
        assert!((u[0] - full[0]).abs() < 1e-15);
        let lde = decorrelated_likelihood(&alpha, &state, &model, &part).unwrap();
        let direct = model.value(&part.assemble(&alpha, &state.theta_hat).unwrap()).unwrap();
        assert!((lde - direct).abs() < 1e-15);
    }

    #[test]
    fn anchor_and_root() {
        let (data, part) = fixture();
        let model = GaussianLinear::new(&data);
        let beta = Vector::from_vec(vec![0.2, -0.1, 0.4]);
        let st = decorrelate(&model, &part, &beta, &DantzigConfig::new(0.05).unwrap()).unwrap();
        let at_anchor = decorrelated_likelihood(&st.alpha_hat, &st, &model, &part).unwrap();
        assert!((at_anchor - model.value(&beta).unwrap()).abs() < 1e-15);

        // Re-anchoring at α̃ makes the score vanish there, so α̃ is a fixed point.
        let alpha_tilde = one_step_estimator(&st, &model, &part).unwrap();
        let root_beta = part.assemble(&alpha_tilde, &st.theta_hat).unwrap();
        let st2 = DecorrelationState::new(root_beta, st.w_hat.clone(), st.h_partial.clone(), &part).unwrap();
        let again = one_step_estimator(&st2, &model, &part).unwrap();
        // Jacobian is the symmetrized Ĥ; for d = 1 symmetrization is exact.
        assert!((again[0] - alpha_tilde[0]).abs() < 1e-12);
    }

    #[test]
    fn degenerate_information_is_an_error() {
        let blocks = HessianBlocks {
            haa: Matrix::from_element(1, 1, 1.0),
            hat: Matrix::from_element(1, 1, 1.0),
            hta: Matrix::from_element(1, 1, 1.0),
            htt: Matrix::from_element(1, 1, 1.0),
        };
        let w = Matrix::from_element(1, 1, 1.0);
        assert!(matches!(partial_information(&blocks, &w), Err(Error::Degenerate(_))));
    }
}

//! Statistical model abstraction and the Gaussian linear model.
//!
//! The negative log-likelihood of the Gaussian linear model with known noise
//! scale `σ` is taken as `‖y − Xβ‖² / (2nσ²)`; the additive constant
//! `½ log(2πσ²)` is dropped since every downstream quantity uses likelihood
//! differences, gradients or Hessians.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};

/// Design matrix, response and known noise standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Matrix,
    y: Vector,
    sigma: f64,
}

impl Dataset {
    pub fn new(x: Matrix, y: Vector, sigma: f64) -> Result<Self> {
        if x.nrows() == 0 || x.ncols() == 0 {
            return Err(Error::input("design matrix must have at least one row and one column"));
        }
        if x.nrows() != y.len() {
            return Err(Error::input(format!(
                "design has {} rows but response has length {}",
                x.nrows(),
                y.len()
            )));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::input(format!("sigma must be positive and finite, got {sigma}")));
        }
        if !linalg::all_finite(&x) || y.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("dataset contains non-finite values"));
        }
        Ok(Self { x, y, sigma })
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn y(&self) -> &Vector {
        &self.y
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Number of observations.
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    /// Number of coefficients.
    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    fn scale(&self) -> f64 {
        1.0 / (self.n() as f64 * self.sigma * self.sigma)
    }

    fn check_beta(&self, beta: &Vector) -> Result<()> {
        if beta.len() != self.p() {
            return Err(Error::input(format!(
                "coefficient vector has length {}, expected {}",
                beta.len(),
                self.p()
            )));
        }
        if beta.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("coefficient vector contains non-finite values"));
        }
        Ok(())
    }
}

/// `(1/(2nσ²))·‖y − Xβ‖²`.
pub fn neg_log_likelihood(beta: &Vector, data: &Dataset) -> Result<f64> {
    data.check_beta(beta)?;
    let resid = data.y() - data.x() * beta;
    Ok(0.5 * data.scale() * resid.norm_squared())
}

/// `−(1/(nσ²))·Xᵀ(y − Xβ)`.
pub fn gradient(beta: &Vector, data: &Dataset) -> Result<Vector> {
    data.check_beta(beta)?;
    let resid = data.y() - data.x() * beta;
    Ok(data.x().tr_mul(&resid) * (-data.scale()))
}

/// `(1/(nσ²))·XᵀX`, independent of `β` for this model.
pub fn hessian(beta: &Vector, data: &Dataset) -> Result<Matrix> {
    data.check_beta(beta)?;
    Ok(gram(data))
}

pub(crate) fn gram(data: &Dataset) -> Matrix {
    let g = data.x().tr_mul(data.x()) * data.scale();
    linalg::symmetrize(&g)
}

/// Value, gradient and Hessian of a sample negative log-likelihood.
///
/// The decorrelation and testing code only talks to models through this
/// trait.
pub trait LikelihoodModel {
    /// Number of parameters `p`.
    fn dim(&self) -> usize;
    /// Sample size `n`.
    fn n_obs(&self) -> usize;
    fn value(&self, beta: &Vector) -> Result<f64>;
    fn gradient(&self, beta: &Vector) -> Result<Vector>;
    fn hessian(&self, beta: &Vector) -> Result<Matrix>;
    /// `true` when the likelihood is exactly quadratic in `β`, so second-order
    /// expansions are exact.
    fn is_quadratic(&self) -> bool {
        false
    }
}

/// Gaussian linear model `y = Xβ + ε`, `ε ~ N(0, σ²I)`, σ known.
#[derive(Debug, Clone, Copy)]
pub struct GaussianLinear<'a> {
    data: &'a Dataset,
}

impl<'a> GaussianLinear<'a> {
    pub fn new(data: &'a Dataset) -> Self {
        Self { data }
    }

    pub fn data(&self) -> &'a Dataset {
        self.data
    }
}

impl LikelihoodModel for GaussianLinear<'_> {
    fn dim(&self) -> usize {
        self.data.p()
    }

    fn n_obs(&self) -> usize {
        self.data.n()
    }

    fn value(&self, beta: &Vector) -> Result<f64> {
        neg_log_likelihood(beta, self.data)
    }

    fn gradient(&self, beta: &Vector) -> Result<Vector> {
        gradient(beta, self.data)
    }

    fn hessian(&self, beta: &Vector) -> Result<Matrix> {
        hessian(beta, self.data)
    }

    fn is_quadratic(&self) -> bool {
        true
    }
}

/// Split of the coefficient indices into the tested block `α` (interest) and
/// the nuisance block `θ`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamPartition {
    p: usize,
    interest: Vec<usize>,
    nuisance: Vec<usize>,
}

impl ParamPartition {
    pub fn new(mut interest: Vec<usize>, p: usize) -> Result<Self> {
        interest.sort_unstable();
        if interest.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::input("interest indices must be distinct"));
        }
        if let Some(&bad) = interest.iter().find(|&&i| i >= p) {
            return Err(Error::input(format!("interest index {bad} out of range for p = {p}")));
        }
        if interest.is_empty() || interest.len() >= p {
            return Err(Error::input(format!(
                "need 1 <= d < p, got d = {} and p = {p}",
                interest.len()
            )));
        }
        let nuisance = (0..p).filter(|i| interest.binary_search(i).is_err()).collect();
        Ok(Self { p, interest, nuisance })
    }

    /// Interest block made of the leading `d` coefficients.
    pub fn leading(d: usize, p: usize) -> Result<Self> {
        Self::new((0..d).collect(), p)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn d(&self) -> usize {
        self.interest.len()
    }

    pub fn interest(&self) -> &[usize] {
        &self.interest
    }

    pub fn nuisance(&self) -> &[usize] {
        &self.nuisance
    }

    pub fn alpha(&self, beta: &Vector) -> Vector {
        linalg::select(beta, &self.interest)
    }

    pub fn theta(&self, beta: &Vector) -> Vector {
        linalg::select(beta, &self.nuisance)
    }

    /// Rebuild a full coefficient vector from its `(α, θ)` blocks.
    pub fn assemble(&self, alpha: &Vector, theta: &Vector) -> Result<Vector> {
        if alpha.len() != self.d() || theta.len() != self.nuisance.len() {
            return Err(Error::input(format!(
                "blocks of length ({}, {}) do not match partition ({}, {})",
                alpha.len(),
                theta.len(),
                self.d(),
                self.nuisance.len()
            )));
        }
        let mut beta = Vector::zeros(self.p);
        for (k, &i) in self.interest.iter().enumerate() {
            beta[i] = alpha[k];
        }
        for (k, &i) in self.nuisance.iter().enumerate() {
            beta[i] = theta[k];
        }
        Ok(beta)
    }
}

/// Sub-blocks of a Hessian under a [`ParamPartition`].
#[derive(Debug, Clone, PartialEq)]
pub struct HessianBlocks {
    pub haa: Matrix,
    pub hat: Matrix,
    pub hta: Matrix,
    pub htt: Matrix,
}

impl HessianBlocks {
    pub fn new(h: &Matrix, partition: &ParamPartition) -> Result<Self> {
        let p = partition.p();
        if h.nrows() != p || h.ncols() != p {
            return Err(Error::input(format!(
                "Hessian is {}x{}, expected {p}x{p}",
                h.nrows(),
                h.ncols()
            )));
        }
        if !linalg::all_finite(h) {
            return Err(Error::input("Hessian has non-finite entries"));
        }
        let scale = h.iter().fold(1.0_f64, |a, v| a.max(v.abs()));
        if linalg::max_asymmetry(h) > 1e-10 * scale {
            return Err(Error::input("Hessian is not symmetric"));
        }
        let (a, t) = (partition.interest(), partition.nuisance());
        Ok(Self {
            haa: linalg::submatrix(h, a, a),
            hat: linalg::submatrix(h, a, t),
            hta: linalg::submatrix(h, t, a),
            htt: linalg::submatrix(h, t, t),
        })
    }

    pub fn d(&self) -> usize {
        self.haa.nrows()
    }

    pub fn q(&self) -> usize {
        self.htt.nrows()
    }
}

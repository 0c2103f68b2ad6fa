//! Synthetic experiments: Toeplitz-correlated Gaussian designs, the three
//! constraint scenarios, and per-replicate test runs.
//!
//! The tested block is always `α = (β₀, β₁)`. With `margin = 0` the truth
//! sits on the null face; positive margins move it into the alternative.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::cones::{builtin_cone, BuiltinCone};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::model::{Dataset, ParamPartition};
use crate::rng;
use crate::testing::{self, Hypothesis, TestConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScenarioKind {
    /// `α₁ ≤ α₂`; truth `α* = (−1, −1 + margin)`.
    Monotonic,
    /// `α ≥ 0`; truth `α* = (margin/2, margin/2)` and `β_{p−2} = β_{p−1} = 1`.
    Nonnegative,
    /// `α₁ + α₂ ≤ −2`; truth `α* = (−1, −1 − margin)`.
    Sum,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 3] = [Self::Monotonic, Self::Nonnegative, Self::Sum];

    pub fn name(self) -> &'static str {
        match self {
            Self::Monotonic => "monotonic",
            Self::Nonnegative => "nonnegative",
            Self::Sum => "sum",
        }
    }

    /// Constraint shape on the tested pair.
    pub fn cone(self) -> BuiltinCone {
        match self {
            Self::Monotonic => BuiltinCone::Monotone,
            Self::Nonnegative => BuiltinCone::Nonnegative,
            Self::Sum => BuiltinCone::Sum { bound: -2.0 },
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "monotonic" | "monotone" => Ok(Self::Monotonic),
            "nonnegative" | "non-negative" => Ok(Self::Nonnegative),
            "sum" => Ok(Self::Sum),
            other => Err(Error::input(format!(
                "unknown scenario '{other}' (expected monotonic, nonnegative or sum)"
            ))),
        }
    }
}

/// One simulation setting.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub n: usize,
    pub p: usize,
    pub rho: f64,
    pub margin: f64,
    pub sigma: f64,
}

impl Scenario {
    pub fn new(kind: ScenarioKind, n: usize, p: usize, rho: f64, margin: f64) -> Result<Self> {
        let s = Self {
            kind,
            n,
            p,
            rho,
            margin,
            sigma: 1.0,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_sigma(mut self, sigma: f64) -> Result<Self> {
        self.sigma = sigma;
        self.validate()?;
        Ok(self)
    }

    pub fn with_margin(&self, margin: f64) -> Result<Self> {
        let mut s = self.clone();
        s.margin = margin;
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::input("n must be positive"));
        }
        let min_p = if self.kind == ScenarioKind::Nonnegative { 5 } else { 3 };
        if self.p < min_p {
            return Err(Error::input(format!("{} scenario needs p >= {min_p}", self.kind)));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(Error::input(format!("rho must lie in [0, 1), got {}", self.rho)));
        }
        if !(self.margin >= 0.0 && self.margin.is_finite()) {
            return Err(Error::input(format!("margin must be finite and >= 0, got {}", self.margin)));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::input("sigma must be positive"));
        }
        Ok(())
    }

    /// True coefficient vector.
    pub fn beta_star(&self) -> Vector {
        let mut b = Vector::zeros(self.p);
        let m = self.margin;
        match self.kind {
            ScenarioKind::Monotonic => {
                b[0] = -1.0;
                b[1] = -1.0 + m;
            }
            ScenarioKind::Nonnegative => {
                b[0] = m / 2.0;
                b[1] = m / 2.0;
                b[self.p - 1] = 1.0;
                b[self.p - 2] = 1.0;
            }
            ScenarioKind::Sum => {
                b[0] = -1.0;
                b[1] = -1.0 - m;
            }
        }
        b
    }

    pub fn partition(&self) -> Result<ParamPartition> {
        ParamPartition::leading(2, self.p)
    }

    /// Constrained pair `(C, M)`.
    pub fn hypothesis(&self) -> Result<Hypothesis> {
        Ok(Hypothesis::one_sided(builtin_cone(self.kind.cone(), 2)?.0))
    }

    /// Two-sided pair `(ℝ², M)` for the standard method.
    pub fn standard_hypothesis(&self) -> Result<Hypothesis> {
        Ok(Hypothesis::two_sided(builtin_cone(self.kind.cone(), 2)?.1))
    }

    pub fn describe(&self) -> String {
        format!(
            "{} n={} p={} rho={} margin={} sigma={}",
            self.kind, self.n, self.p, self.rho, self.margin, self.sigma
        )
    }
}

/// Toeplitz covariance `Σ_jk = ρ^|j−k|`.
pub fn toeplitz(p: usize, rho: f64) -> Matrix {
    Matrix::from_fn(p, p, |j, k| libm::pow(rho, (j as f64 - k as f64).abs()))
}

/// `n` i.i.d. rows from `N(0, Σ)` with Toeplitz `Σ`.
pub fn generate_design(n: usize, p: usize, rho: f64, seed: u64) -> Result<Matrix> {
    if n == 0 || p == 0 {
        return Err(Error::input("design needs n >= 1 and p >= 1"));
    }
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::input(format!("rho must lie in [0, 1), got {rho}")));
    }
    let l = linalg::cholesky(&toeplitz(p, rho), "Toeplitz covariance")
        .map_err(|e| Error::Internal(format!("{e}")))?
        .l();
    let mut stream = rng::stream(seed);
    let g = Matrix::from_row_iterator(n, p, (0..n * p).map(|_| rng::std_normal(&mut stream)));
    Ok(g * l.transpose())
}

/// Design from sub-stream `(seed, 0)`, noise from `(seed, 1)`.
pub fn simulate(scenario: &Scenario, seed: u64) -> Result<Dataset> {
    scenario.validate()?;
    let x = generate_design(scenario.n, scenario.p, scenario.rho, rng::derive_seed(seed, 0))?;
    let mut noise = rng::stream_at(seed, 1);
    let eps = Vector::from_fn(scenario.n, |_, _| scenario.sigma * rng::std_normal(&mut noise));
    let y = &x * scenario.beta_star() + eps;
    Dataset::new(x, y, scenario.sigma)
}

/// Statistics and decisions of one test on one replicate (Wald, LR, score).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub statistics: [f64; 3],
    pub reject: [bool; 3],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicateOutcome {
    pub constrained: Decision,
    pub standard: Option<Decision>,
}

/// Simulate replicate data from `seed` and run the constrained test, plus
/// the two-sided test on the same first step when `with_standard` is set.
pub fn run_replicate(
    scenario: &Scenario,
    gamma: f64,
    config: &TestConfig,
    seed: u64,
    with_standard: bool,
) -> Result<ReplicateOutcome> {
    let data = simulate(scenario, seed)?;
    let part = scenario.partition()?;
    let first = testing::first_step(&data, &part, config)?;
    let decide = |hyp: &Hypothesis| -> Result<Decision> {
        let r = testing::test_from_first_step(&data, &part, &first, hyp, gamma, &config.mc)?;
        Ok(Decision {
            statistics: r.statistics(),
            reject: r.reject,
        })
    };
    let constrained = decide(&scenario.hypothesis()?)?;
    let standard = if with_standard {
        Some(decide(&scenario.standard_hypothesis()?)?)
    } else {
        None
    };
    Ok(ReplicateOutcome { constrained, standard })
}

/// Rejection counts of the three statistics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counts {
    pub wald: usize,
    pub lr: usize,
    pub score: usize,
}

impl Counts {
    fn add(&mut self, reject: [bool; 3]) {
        self.wald += reject[0] as usize;
        self.lr += reject[1] as usize;
        self.score += reject[2] as usize;
    }

    pub fn as_array(&self) -> [usize; 3] {
        [self.wald, self.lr, self.score]
    }
}

/// Aggregate over replicates; rates are over successful replicates.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub scenario: Scenario,
    pub gamma: f64,
    pub master_seed: u64,
    pub replicates: usize,
    pub failures: usize,
    pub constrained: Counts,
    pub standard: Option<Counts>,
    /// Per-replicate constrained statistics in replicate order (failures omitted).
    pub statistics: Vec<[f64; 3]>,
}

impl SimulationResult {
    /// Aggregates outcomes listed in replicate order.
    pub fn from_outcomes(
        scenario: Scenario,
        gamma: f64,
        master_seed: u64,
        outcomes: &[Result<ReplicateOutcome>],
    ) -> Self {
        let mut constrained = Counts::default();
        let mut standard: Option<Counts> = None;
        let mut statistics = Vec::with_capacity(outcomes.len());
        let mut failures = 0;
        for o in outcomes {
            match o {
                Ok(r) => {
                    constrained.add(r.constrained.reject);
                    statistics.push(r.constrained.statistics);
                    if let Some(s) = &r.standard {
                        standard.get_or_insert_with(Counts::default).add(s.reject);
                    }
                }
                Err(_) => failures += 1,
            }
        }
        Self {
            scenario,
            gamma,
            master_seed,
            replicates: outcomes.len(),
            failures,
            constrained,
            standard,
            statistics,
        }
    }

    pub fn successes(&self) -> usize {
        self.replicates - self.failures
    }

    fn rates_of(&self, c: &Counts) -> [f64; 3] {
        let m = self.successes().max(1) as f64;
        c.as_array().map(|k| k as f64 / m)
    }

    /// Wald, LR and score rejection rates of the constrained test.
    pub fn rates(&self) -> [f64; 3] {
        self.rates_of(&self.constrained)
    }

    pub fn standard_rates(&self) -> Option<[f64; 3]> {
        self.standard.as_ref().map(|c| self.rates_of(c))
    }

    /// Binomial standard error of a rate over the successful replicates.
    pub fn std_error(&self, rate: f64) -> f64 {
        libm::sqrt(rate * (1.0 - rate) / self.successes().max(1) as f64)
    }
}

/// Mean of the three rates.
pub fn mean_rate(rates: &[f64; 3]) -> f64 {
    rates.iter().sum::<f64>() / 3.0
}

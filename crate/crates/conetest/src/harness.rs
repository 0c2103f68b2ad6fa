//! Replicated simulations. Replicate `r` always uses seed
//! `derive_seed(master_seed, r)`, so results do not depend on the thread count.

use rayon::prelude::*;

use conetest_core::rng;
use conetest_core::scenario::{self, Scenario, SimulationResult};
use conetest_core::testing::TestConfig;
use conetest_core::Error;

use crate::error::{AppError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct HarnessConfig {
    pub replicates: usize,
    pub gamma: f64,
    pub master_seed: u64,
    pub test: TestConfig,
    /// Fail the run on the first failed replicate instead of counting it.
    pub strict: bool,
}

impl HarnessConfig {
    pub fn new(replicates: usize, gamma: f64, master_seed: u64) -> Self {
        Self {
            replicates,
            gamma,
            master_seed,
            test: TestConfig::default(),
            strict: true,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(AppError::usage("replicates must be positive"));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(AppError::usage(format!("gamma must lie in (0, 1), got {}", self.gamma)));
        }
        Ok(())
    }
}

fn simulate(scenario: &Scenario, cfg: &HarnessConfig, with_standard: bool) -> Result<SimulationResult> {
    let outcomes: Vec<_> = (0..cfg.replicates)
        .into_par_iter()
        .map(|r| {
            scenario::run_replicate(
                scenario,
                cfg.gamma,
                &cfg.test,
                rng::derive_seed(cfg.master_seed, r as u64),
                with_standard,
            )
        })
        .collect();
    if cfg.strict {
        if let Some((r, Err(e))) = outcomes.iter().enumerate().find(|(_, o)| o.is_err()) {
            return Err(AppError::Core(Error::Internal(format!(
                "replicate {r} of {} failed: {e}",
                scenario.describe()
            ))));
        }
    }
    Ok(SimulationResult::from_outcomes(
        scenario.clone(),
        cfg.gamma,
        cfg.master_seed,
        &outcomes,
    ))
}

/// Empirical size of the constrained tests at `margin = 0`.
pub fn run_type1(scenario: &Scenario, cfg: &HarnessConfig) -> Result<SimulationResult> {
    cfg.validate()?;
    if scenario.margin != 0.0 {
        return Err(AppError::usage("type-I error runs need margin = 0"));
    }
    simulate(scenario, cfg, false)
}

/// Rejection rates of the constrained and the two-sided tests per margin.
/// Every margin reuses the same replicate seeds.
pub fn run_power(scenario: &Scenario, margins: &[f64], cfg: &HarnessConfig) -> Result<Vec<SimulationResult>> {
    cfg.validate()?;
    if margins.is_empty() {
        return Err(AppError::usage("at least one margin is required"));
    }
    margins
        .iter()
        .map(|&m| simulate(&scenario.with_margin(m)?, cfg, true))
        .collect()
}

/// Runs `f` on a pool of `threads` workers (all cores when `None`).
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        if t == 0 {
            return Err(AppError::usage("--threads must be at least 1"));
        }
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| AppError::usage(format!("cannot start thread pool: {e}")))?;
    Ok(pool.install(f))
}

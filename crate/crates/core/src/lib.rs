//! Inference for low-dimensional parameters under linear inequality
//! constraints in high-dimensional linear models.
//!
//! The pipeline fits a LASSO initial estimator, decorrelates the score of the
//! parameter of interest against the nuisance block with Dantzig-selector
//! weights, and compares Wald, likelihood-ratio and score statistics against
//! a chi-bar-squared null. Everything here is `no_std` + `alloc`; file
//! formats and the command line live in the `conetest` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod chibar;
pub mod cones;
pub mod dantzig;
pub mod decorrelate;
pub mod error;
pub mod lasso;
pub mod linalg;
pub mod lp;
pub mod model;
pub mod power;
pub mod rng;
pub mod scenario;
pub mod special;
pub mod testing;

pub use error::{Error, Result};
pub use linalg::{Matrix, Vector};

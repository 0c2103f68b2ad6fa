//! File formats, configuration, the replicated-simulation harness and the
//! `conetest` command line, on top of [`conetest_core`].

pub mod cli;
pub mod config;
pub mod error;
pub mod harness;
pub mod io;
pub mod report;

pub use conetest_core as core;
pub use error::{AppError, Result};

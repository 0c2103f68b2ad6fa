use alloc::string::String;

/// Result alias used throughout the crate.
pub type Result<T> = core::result::Result<T, Error>;

/// Errors raised by the estimation and testing pipeline.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Malformed or inconsistent input (dimensions, ranges, non-finite values).
    #[error("invalid input: {0}")]
    Input(String),

    /// A matrix that must be positive definite or invertible is not.
    #[error("degenerate problem: {0}")]
    Degenerate(String),

    /// An iterative solver ran out of iterations. `last_iterate` holds the
    /// final iterate when the solver has a meaningful one.
    #[error("{solver} did not converge after {iterations} iterations (residual {residual:.3e})")]
    Convergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
        last_iterate: alloc::vec::Vec<f64>,
    },

    /// A request beyond the size bounds supported by exact enumeration.
    #[error("capability limit: {0}")]
    Capability(String),

    /// No critical value reaches the requested level.
    #[error("level {gamma} is unachievable: the largest attainable rejection probability is {max_level}")]
    LevelUnachievable { gamma: f64, max_level: f64 },

    /// The linear program has no feasible point.
    #[error("linear program infeasible: {0}")]
    Infeasible(String),

    /// An invariant that should hold by construction failed numerically.
    #[error("internal error: {0}")]
    Internal(String),

    /// An error raised while solving one column of a column-wise problem.
    #[error("column {column}: {source}")]
    Column {
        column: usize,
        #[source]
        source: alloc::boxed::Box<Error>,
    },

    /// An error raised while running a named pipeline stage.
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: alloc::boxed::Box<Error>,
    },
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        Error::Degenerate(msg.into())
    }

    /// Wrap this error with the name of the stage that produced it.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: alloc::boxed::Box::new(self),
        }
    }

    /// Short machine-readable category name.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Input(_) => "input",
            Error::Degenerate(_) => "degenerate",
            Error::Convergence { .. } => "convergence",
            Error::Capability(_) => "capability",
            Error::LevelUnachievable { .. } => "level",
            Error::Infeasible(_) => "infeasible",
            Error::Internal(_) => "internal",
            Error::Stage { source, .. } | Error::Column { source, .. } => source.category(),
        }
    }
}

//! Error type shared by every module of the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("non-finite value in {context} at position {index}")]
    NonFinite { context: &'static str, index: usize },

    #[error("degenerate distribution: {0} has zero total weight")]
    DegenerateDistribution(&'static str),

    #[error("dimension mismatch: {context} (expected {expected}, got {actual})")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("index {index} out of range for {context} of size {size}")]
    IndexOutOfRange {
        context: &'static str,
        index: usize,
        size: usize,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("rejection sampling did not accept within {cap} proposals")]
    NonConvergence { cap: u64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("matrix is not symmetric (max asymmetry {max_asym:e} exceeds tolerance {tol:e})")]
    Asymmetric { max_asym: f64, tol: f64 },

    #[error("model degenerate: {0}")]
    ModelDegenerate(String),

    #[error("flat index capacity exceeded: {n}^{p} does not fit the index type")]
    CapacityExceeded { n: usize, p: u32 },

    #[error("size guard exceeded for {context}: {actual} > {limit}")]
    SizeGuard {
        context: &'static str,
        actual: usize,
        limit: usize,
    },

    #[error("dataset generation failed after {attempts} attempts: {reason}")]
    GenerationFailure { attempts: u32, reason: &'static str },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("stage {stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Wraps an error with the pipeline stage it occurred in.
    pub fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

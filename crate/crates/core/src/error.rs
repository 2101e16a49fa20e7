//! Error types shared across the crate.

use thiserror::Error;

/// Which stage of a stacked system an error came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    /// First-stage equation, fitted on the full sample or on `D_in`.
    First,
    /// Second-stage equation, fitted on the full sample or on `D_out`.
    Second,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Stage::First => write!(f, "first stage (D_in)"),
            Stage::Second => write!(f, "second stage (D_out)"),
        }
    }
}

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        /// Best iterate seen, for diagnostics.
        best: Vec<f64>,
    },

    #[error("finite-difference Jacobian is numerically singular")]
    SingularJacobian,

    #[error("{active} active records for {params} parameters")]
    InsufficientData { active: usize, params: usize },

    #[error("could not draw a non-degenerate split row in {attempts} attempts (n = {n})")]
    DegenerateSplit { n: usize, attempts: usize },

    #[error("all {total} splits failed; first failure: {first}")]
    AllSplitsFailed { total: usize, first: String },

    #[error("design matrix is rank deficient")]
    RankDeficientDesign,

    #[error("quasi-separation: fitted probabilities pinned to 0/1 across the sample")]
    SeparationDetected,

    #[error("marginal `{name}` is constant over the observed data")]
    DegenerateRange { name: String },

    #[error("{stage}: {source}")]
    StageFailed {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    ParseError {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("too many failed null replicates: {failed} of {requested} (cap {cap})")]
    NullSimulationFailed {
        failed: usize,
        requested: usize,
        cap: usize,
    },

    #[error("I/O error on {path}: {message}")]
    Io { path: String, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Wrap an error with the stacked-system stage it came from.
    pub fn at_stage(self, stage: Stage) -> Error {
        Error::StageFailed {
            stage,
            source: Box::new(self),
        }
    }

    pub fn io(path: &std::path::Path, err: impl std::fmt::Display) -> Error {
        Error::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

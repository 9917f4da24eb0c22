//! Error type shared by every module in the crate.

use thiserror::Error;

/// Errors produced by market, scoring, and learner operations.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Input contained NaN or infinity, or was otherwise malformed.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A parameter violated its precondition (e.g. b <= 0).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Outcome index outside 0..n.
    #[error("outcome index {index} out of range for {n} outcomes")]
    InvalidOutcome { index: usize, n: usize },

    /// A penalty function failed validation (non-convex, non-finite, or no gradient).
    #[error("invalid penalty: {0}")]
    InvalidPenalty(String),

    /// A report was rejected by the scoring rule (e.g. zero probability under the log rule).
    #[error("inadmissible report: {0}")]
    InadmissibleReport(String),

    /// The iterative solver did not reach tolerance; carries the last iterate.
    #[error("solver diverged after {iterations} iterations (residual {residual:e})")]
    SolverDiverged {
        iterations: usize,
        residual: f64,
        last_iterate: Vec<f64>,
    },

    /// A regret trace does not match the learner configuration it was checked against.
    #[error("trace does not match learner configuration: {0}")]
    InvalidTrace(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use crate::model::UserClass;

/// Crate-wide error type.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Adaptive quadrature exhausted its subdivision budget, or a tail
    /// estimate stayed above tolerance at the configured truncation.
    #[error("failed to converge: {0}")]
    NonConvergent(String),

    /// theta >= 1/(1+beta_e): the cell-edge layer cannot be decoded at any
    /// SIR, so conditional success probabilities are identically zero.
    #[error("infeasible power split: theta = {theta} >= 1/(1+beta_e) = {limit}")]
    InfeasiblePowerSplit { theta: f64, limit: f64 },

    /// A (mean, second moment) pair that no beta distribution attains.
    #[error("degenerate distribution: {0}")]
    DegenerateDistribution(String),

    /// A realization of the wrong user class was passed to a class-specific
    /// operation.
    #[error("class mismatch: expected {expected:?}, found {found:?}")]
    ClassMismatch { expected: UserClass, found: UserClass },

    /// Fewer than two points fell in the simulation window, so no
    /// serving/dominant pair exists.
    #[error("degenerate realization: fewer than two points in the window")]
    DegenerateRealization,

    /// An empirical estimate was requested from zero samples.
    #[error("empty sample set")]
    EmptySampleSet,
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised across the workbench.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("direction vector is zero")]
    ZeroVector,
    #[error("input contains a non-finite component")]
    NonFinite,
    #[error("direction is not rational at the requested tolerance")]
    NotRational,
    #[error("no approximate period found within {cap} candidates")]
    SearchExhausted { cap: usize },
    #[error("no lattice point within the discrepancy bound for N = {n} (best normal error {best:e})")]
    ApproximationFailed { n: usize, best: f64 },
    #[error("matrix is not symmetric (asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("degenerate oblique vector field: gamma.nu = {0} at the queried point")]
    DegenerateOblicity(f64),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("no barrier constant below {cap}")]
    NoBarrier { cap: f64 },
    #[error("scheme is not monotone at node ({i}, {j}): {reason}")]
    NonMonotone { i: usize, j: usize, reason: String },
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("solution leaves the barrier envelope by {excess:e}")]
    BarrierViolation { excess: f64 },
    #[error("row sign check failed: {0}")]
    NotSubSuper(String),
    #[error("boundary operators differ by more than delta: sampled excess {excess:e}")]
    PerturbationHypothesisFailed { excess: f64 },
    #[error("point lies outside the grid")]
    OutOfGrid,
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
}

pub type Result<T> = std::result::Result<T, Error>;

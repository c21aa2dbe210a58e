use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("matrix is singular")]
    Singular,
    #[error("R is not symmetric positive definite")]
    SingularR,
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("pair (A, B) is not stabilizable")]
    NotStabilizable,
    #[error("pair (A, Q^1/2) is not detectable")]
    NotDetectable,
    #[error(
        "Riccati iteration did not converge after {iterations} iterations (residual {residual:e})"
    )]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("closed loop is unstable (spectral radius {0})")]
    UnstableClosedLoop(f64),
    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },
    #[error("invalid plant family: {0}")]
    InvalidFamily(String),
    #[error("plant sampling rejected {0} consecutive draws")]
    RejectionLimitExceeded(usize),
    #[error("model fails the Riccati preconditions at this point")]
    InfeasiblePoint,
    #[error("every start point of the estimator is infeasible")]
    AllStartsInfeasible,
    #[error("estimated model fails the Riccati preconditions")]
    EstimateInfeasible,
    #[error("plant is not a member of the two-vehicle platoon family: {0}")]
    WrongFamily(String),
    #[error("invalid platoon parameters: {0}")]
    InvalidParams(String),
    #[error("state magnitude exceeded the overflow guard at step {0}")]
    NumericOverflow(usize),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("controller failure: {0}")]
    ControllerFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;

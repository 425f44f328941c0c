use thiserror::Error;

/// Errors surfaced by construction, quadrature and the solvers.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("quadrature did not converge: {0}")]
    NonConvergent(String),
    #[error("no growth order k <= {max_k} satisfies the doubling condition")]
    NoFiniteK { max_k: u32 },
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("target level unreachable: {0}")]
    Unreachable(String),
    #[error("budget grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("tensor is not tetrahedral symmetric: {0}")]
    NotTetrahedral(String),
    #[error("instance exceeds brute-force caps: {0}")]
    TooLarge(String),
    #[error("tail level below Monte Carlo resolution: {0}")]
    ResolutionExceeded(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("length mismatch: expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("weight has no positive direction on the grid; no positive principal eigenvalue")]
    NoPositiveEigenvalue,

    #[error(
        "{what} did not converge after {iterations} iterations (best estimate {estimate:e}, residual {residual:e})"
    )]
    NonConverged {
        what: &'static str,
        iterations: usize,
        estimate: f64,
        residual: f64,
    },

    #[error("dense oracle limited to {limit} nodes, grid has {nodes}")]
    SizeGuard { nodes: usize, limit: usize },

    #[error("no M in 1, 2, 4, ..., 2^64 with f(M)/M > {sup_norm}; absorption grows too slowly")]
    SupersolutionSearchExhausted { sup_norm: f64 },

    #[error("subsolution amplitude underflowed while enforcing eps*mu1*e1 + lambda*f(eps*e1) <= 0")]
    EpsilonUnderflow,

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("curve is not decreasing at R = {radius}: {previous} -> {current}; raise nodes_per_unit")]
    ResolutionFailure { radius: f64, previous: f64, current: f64 },

    #[error("profile is not strictly positive on the fit window (extinct profile has no decay rate)")]
    NonPositiveWindow,

    #[error("solver fault: {0}")]
    SolverFault(String),

    #[error("table error: {0}")]
    Table(String),
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("argument out of domain: {0}")]
    Domain(String),
    #[error("shooting bracket not found for a in [{lo:e}, {hi:e}]")]
    NoBracket { lo: f64, hi: f64 },
    #[error("step budget exhausted: {0}")]
    Budget(String),
    #[error("quadrature did not converge: estimate {estimate:e} above tolerance {tol:e}")]
    Quadrature { estimate: f64, tol: f64 },
    #[error("eigensolver failure: {0}")]
    Eigen(String),
    #[error("grid too coarse: lowest eigenvalue moved by {shift:e} under refinement")]
    GridTooCoarse { shift: f64 },
    #[error("linear solve failed: {0}")]
    LinearSolve(String),
    #[error("mesh generation failed: {0}")]
    Mesh(String),
    #[error("no convergence after {iterations} iterations (last residual {residual:e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        trace: Vec<f64>,
    },
    #[error("unknown name: {0}")]
    Unknown(String),
}

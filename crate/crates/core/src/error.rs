use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid mismatch: expected {expected:?}, found {found:?}")]
    GridMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("invalid surface: {0}")]
    InvalidSurface(String),

    #[error("degree mismatch: {left} vs {right}")]
    DegreeMismatch { left: i32, right: i32 },

    #[error(
        "Bradlow bound violated: area {area:.6} must exceed pi*N = {bound:.6}; \
         no vortex solution exists in this regime"
    )]
    BradlowViolated { area: f64, bound: f64 },

    #[error("Newton iteration did not converge after {iterations} iterations (last residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("malformed field file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

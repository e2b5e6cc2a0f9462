use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("zero denominator in cell kernel (sigma_t = 0 and all cosines zero)")]
    ZeroDenominator,

    #[error("reflecting boundary iteration did not converge on face {face} after {passes} passes (change {change:e})")]
    ReflectionNotConverged {
        face: &'static str,
        passes: usize,
        change: f64,
    },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("{solver} did not converge: {detail}")]
    NotConverged { solver: &'static str, detail: String },

    #[error("GMRES breakdown at iteration {iteration} with relative residual {residual:e}")]
    Breakdown { iteration: usize, residual: f64 },

    #[error("{0}")]
    Output(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("singular matrix (det = {det:e})")]
    SingularMatrix { det: f64 },

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("point {point:?} lies outside the domain")]
    Outside { point: [f64; 3] },

    #[error("quadrature budget exhausted: estimate {estimate} with error {error:e}")]
    QuadratureBudget { estimate: f64, error: f64 },

    #[error("grid spacing {h} too coarse (limit {limit})")]
    Resolution { h: f64, limit: f64 },

    #[error("eigen-solver did not converge in {iterations} iterations (last change {last_change:e})")]
    NonConvergence {
        iterations: usize,
        last_change: f64,
        history: Vec<f64>,
    },

    #[error("eigen-solver failure: {0}")]
    SolverFailure(String),

    #[error("supersolution certificate invalid: value {value:e} at {point:?}")]
    CertificateInvalid { point: [f64; 3], value: f64 },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code for the CLI contract: 2 usage/parameter, 3 numerical budget.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::QuadratureBudget { .. }
            | Error::NonConvergence { .. }
            | Error::SolverFailure(_) => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

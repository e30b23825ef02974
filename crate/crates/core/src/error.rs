use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("invalid regime: {0}")]
    InvalidRegime(String),
    #[error("divergence {measured:.3e} exceeds tolerance {tolerance:.3e}")]
    Inconsistent { measured: f64, tolerance: f64 },
    #[error("singular linear system (condition estimate {condition_estimate:.3e})")]
    Singular { condition_estimate: f64 },
    #[error("{stage}: no convergence after {iterations} iterations (last update {last_update:.3e})")]
    NonConvergence { stage: String, iterations: usize, last_update: f64 },
    #[error("compatibility violated: mean {mean:.3e}")]
    Compatibility { mean: f64 },
    #[error("corrector infeasible: θ-mean {mean:.3e}")]
    CorrectorInfeasible { mean: f64 },
    #[error("missing dependency: {0}")]
    Dependency(String),
    #[error("tail integration: {0}")]
    Tail(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A quantity that needs a strictly interior profile (logarithms) was
    /// evaluated on the boundary of the simplex.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        last: Vec<Vec<f64>>,
    },

    #[error("integration failed at t = {time}: vector field norm {norm:.3e} after step halving")]
    StepFailure { time: f64, norm: f64 },

    #[error("unknown game `{0}`")]
    UnknownGame(String),

    #[error("game has no potential attached")]
    MissingPotential,

    #[error("empty trajectory")]
    EmptyTrajectory,

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Numerical failures (as opposed to bad input or configuration).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. } | Error::StepFailure { .. } | Error::Domain(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

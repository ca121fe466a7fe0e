use thiserror::Error;

/// Everything that can go wrong inside the solver toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("field has {got} values but the grid has {expected} nodes")]
    LengthMismatch { expected: usize, got: usize },

    #[error("the ray through the state does not meet the Nehari manifold ({0})")]
    NoProjection(&'static str),

    #[error("trivial state (u, v) = (0, 0) is excluded")]
    TrivialState,

    #[error("singular linear system at Newton iterate {iteration}")]
    Singular { iteration: usize },

    #[error("Newton iteration diverged at iterate {iteration} (residual {residual:e})")]
    Diverged { iteration: usize, residual: f64 },

    #[error("{what} did not converge after {iterations} iterations (last value {last:e})")]
    NotConverged {
        what: &'static str,
        iterations: usize,
        last: f64,
    },

    #[error("continuation failed on the first step (last good beta {last_good_beta})")]
    ContinuationStart { last_good_beta: f64 },

    #[error("evolution blew up at t = {t}")]
    BlowUp { t: f64 },

    #[error("wave parameters do not match the stored parameters: {0}")]
    ParameterMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn require_positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite and > 0",
        })
    }
}

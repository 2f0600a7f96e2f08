use thiserror::Error;

/// Errors raised by the groupoid, solver and verification layers.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An input lies outside the domain of an operation (non-composable pair,
    /// constraint violation, retraction out of range, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A scalar field or map produced a non-finite value.
    #[error("evaluation error: {0}")]
    Evaluation(String),

    /// Malformed construction data (wrong dimensions, empty sampler, ...).
    #[error("configuration error: {0}")]
    Configuration(String),

    /// The Newton Jacobian is singular to working precision.
    #[error("regularity error: Jacobian condition number {condition:.3e} exceeds {limit:.1e}")]
    Regularity { condition: f64, limit: f64 },

    /// Newton iteration did not reach the requested tolerance.
    #[error("solver error: no convergence after {iterations} iterations (residual {residual:.3e})")]
    Solver { iterations: usize, residual: f64 },

    /// A failure while advancing a trajectory, tagged with the step index.
    #[error("step {index}: {source}")]
    Step {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at_step(self, index: usize) -> Self {
        Error::Step {
            index,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

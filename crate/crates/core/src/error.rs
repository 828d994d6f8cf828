use thiserror::Error;

/// Errors raised by the analytic and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error in {func}: {msg}")]
    Domain { func: &'static str, msg: String },

    #[error("{func} did not converge after {terms} terms (best estimate {estimate})")]
    NoConvergence {
        func: &'static str,
        terms: usize,
        estimate: f64,
    },

    #[error("graph error: {0}")]
    Graph(String),

    #[error("scheduling error: {0}")]
    Schedule(String),

    #[error("integer overflow while counting {0}")]
    Overflow(&'static str),

    #[error("invalid scenario: {0}")]
    Scenario(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(func: &'static str, msg: impl Into<String>) -> Error {
    Error::Domain {
        func,
        msg: msg.into(),
    }
}

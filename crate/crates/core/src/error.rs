use thiserror::Error;

/// Errors raised by the evaluators, zero finder and simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the requested quantity.
    #[error("domain error: {0}")]
    Domain(String),

    /// A spectral series hit its term cap before the tail bound was met.
    #[error("truncation failure: tail bound {tail:.3e} still above tolerance after {terms} terms")]
    Truncation { terms: usize, tail: f64 },

    /// An intermediate quantity could not be represented in `f64`.
    #[error("overflow while evaluating {0}")]
    Overflow(&'static str),

    /// An iterative routine (root refinement, continued fraction) failed to converge.
    #[error("no convergence in {0}")]
    NoConvergence(&'static str),

    /// A simulated path exceeded `max_time` without leaving the interval.
    #[error("path did not exit before max_time = {max_time}")]
    Timeout { max_time: f64 },

    /// Too few samples for an empirical statistic.
    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    /// Malformed persisted data (zero tables).
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

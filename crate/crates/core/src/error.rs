use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("quadrature did not converge: {0}")]
    NonConvergence(String),

    #[error("series diverges or does not converge fast enough: {0}")]
    Divergence(String),

    #[error("insufficient expected counts: {0}")]
    InsufficientExpected(String),

    #[error("algebra `{algebra}` does not support {capability}")]
    Unsupported { algebra: String, capability: &'static str },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("cannot parse `{input}`: {reason}")]
    Parse { input: String, reason: String },

    #[error("1 - h(delta_t) is not a distribution function: fails at t = {t}")]
    NotATail { t: f64 },

    #[error("invalid law: {0}")]
    InvalidLaw(String),

    #[error("too few conditioning events: got {hits}, need {needed}")]
    Starvation { hits: u64, needed: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;

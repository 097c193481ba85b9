use thiserror::Error;

/// Errors raised by the estimation library and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("value out of domain: {0}")]
    Domain(String),

    #[error("linear system is singular or not positive definite: {0}")]
    Rank(String),

    #[error("autoregressive polynomial has a root on or inside the unit circle (min modulus {min_modulus})")]
    NonStationary { min_modulus: f64 },

    #[error("MA expansion tail {tail:e} still above tolerance after {n_terms} terms")]
    Truncation { n_terms: usize, tail: f64 },

    #[error("root finder failed: {0}")]
    SolverFailure(String),

    #[error("fit failed at B = {radius}: {source}")]
    AtRadius {
        radius: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("replication {replication} (seed {seed}) failed: {source}")]
    Replication {
        replication: usize,
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid value for `{key}`: {reason}")]
    Usage { key: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

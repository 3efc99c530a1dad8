use thiserror::Error;

/// Errors raised by the counting and verification routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the range covered by the sieve tables.
    #[error("{n} is outside the sieve range 1..={limit}")]
    Range { n: u64, limit: u64 },

    /// An argument violates a mathematical precondition.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configured memory or work guard would be exceeded.
    #[error("resource guard: {0}")]
    Resource(String),

    /// The requested precision is not reachable in double precision.
    #[error("precision {target:e} unreachable; best achievable bound is {achieved:e}")]
    Precision { target: f64, achieved: f64 },

    /// The least-squares design is rank deficient or underdetermined.
    #[error("fit error: {0}")]
    Fit(String),

    /// Two algorithms that must agree produced different values.
    #[error("validation failure at H={h}, k={k}: {detail}")]
    Validation { h: u64, k: u32, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;

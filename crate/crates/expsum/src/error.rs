use thiserror::Error;

/// Errors shared across the crate.
///
/// The CLI maps these onto process exit codes: bad input → 2, resource
/// guards → 3, precision exhaustion → 4, findings (results contradicting
/// an invariant that should hold) → 5.
#[derive(Debug, Error)]
pub enum Error {
    #[error("bad input: {0}")]
    BadInput(String),

    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("resource guard exceeded: {0}")]
    ResourceGuard(String),

    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),

    #[error("integrality failure: {0}")]
    IntegralityFailure(String),

    #[error("triangularization hypothesis violated: delta = {delta} <= m*eta = {m}*{eta}")]
    HypothesisViolated { delta: i64, eta: i64, m: usize },

    #[error("leading minor {0} is singular at working precision")]
    SingularMinor(usize),

    #[error("iteration did not converge: {0}")]
    NonConvergence(String),

    /// A computed result contradicts an invariant that is supposed to hold.
    /// Never silently ignored; surfaced to the caller instead of panicking.
    #[error("finding: {0}")]
    Finding(String),
}

pub type Result<T> = std::result::Result<T, Error>;

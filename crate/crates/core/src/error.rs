use crate::capacity::CapacityResult;

/// Errors raised by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid probability distribution: {0}")]
    InvalidPmf(String),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("binary relay model forbids the silent pair (N, N) at hop {hop}")]
    ConstraintViolation { hop: usize },

    #[error("inconsistent chain: {0}")]
    InconsistentChain(String),

    #[error("cascade too large for exhaustive evaluation: m = {m}, limit {limit}")]
    CapacityGuard { m: usize, limit: usize },

    #[error("solver did not converge after {iterations} iterations (best min-cut {:.9})", best.capacity_bits)]
    NonConvergence {
        iterations: usize,
        best: Box<CapacityResult>,
    },

    #[error("received block failed integrity check: {0}")]
    Integrity(String),

    #[error("zero-error violation in block {block}: sent {sent}, decoded {decoded}")]
    ZeroErrorViolation {
        block: usize,
        sent: String,
        decoded: String,
    },

    #[error("trace of {symbols} symbols exceeds the limit of {limit}")]
    TraceTooLarge { symbols: usize, limit: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

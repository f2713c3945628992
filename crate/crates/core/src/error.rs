//! Error types shared across the crate.
//!
//! The four variants map onto the CLI exit codes: domain errors (2),
//! accuracy errors (3) and capacity errors (4); `Range` is reported as an
//! accuracy failure since the request cannot be computed in double precision.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Input outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Kernel diagonal too small for the Kac-Rice covariance to be meaningful.
    #[error("degenerate kernel: Pi(x,x) = {pi:.3e} below threshold {threshold:.3e}")]
    DegenerateKernel { pi: f64, threshold: f64 },

    /// A requested tolerance cannot be met; the achievable bound is attached.
    #[error("accuracy error: {message} (bound {bound:.3e} > tolerance {tolerance:.3e})")]
    Accuracy {
        message: String,
        bound: f64,
        tolerance: f64,
    },

    /// Intermediate values overflow double precision.
    #[error("range error: {0}")]
    Range(String),

    /// Enumeration or allocation beyond the configured cap.
    #[error("capacity error: requested size {requested} exceeds cap {cap}")]
    Capacity { requested: u128, cap: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the CLI for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) | Error::DegenerateKernel { .. } => 2,
            Error::Accuracy { .. } | Error::Range(_) => 3,
            Error::Capacity { .. } => 4,
        }
    }
}

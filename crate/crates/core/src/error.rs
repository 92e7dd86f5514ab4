use thiserror::Error;

/// Failure reported by a noisy loss oracle for a single evaluation.
#[derive(Debug, Clone, Error)]
#[error("{0}")]
pub struct OracleError(pub String);

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid plan: {0}")]
    Codec(String),

    /// An oracle evaluation failed mid-run; the run is aborted rather
    /// than substituting a penalty value.
    #[error("oracle failed at iteration {k} for point {point:?}: {source}")]
    Oracle {
        k: usize,
        point: Vec<f64>,
        source: OracleError,
    },

    #[error("gain tuning failed: {0}")]
    GainTuning(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

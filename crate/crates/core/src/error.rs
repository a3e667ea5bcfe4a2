use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian (max |m - m†| = {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },

    #[error("matrix is not square: {len} entries for dimension {dim}")]
    NotSquare { dim: usize, len: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("state is not physical: {0}")]
    NotPhysical(String),

    #[error("qubit index {0} out of range (expected 1..=3)")]
    QubitOutOfRange(usize),

    #[error("control and target must differ (both are qubit {0})")]
    SameQubit(usize),

    #[error("qubit subset must be non-empty")]
    EmptySubset,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("evolution left the physical state space at t = {time:.6} s: {reason}")]
    NumericalDrift { time: f64, reason: String },

    #[error("schedule needs {needed:.6} s but only {available:.6} s are available")]
    ScheduleTooLong { needed: f64, available: f64 },

    #[error("not enough samples for a fit: need {needed}, found {found}")]
    InsufficientSamples { needed: usize, found: usize },

    #[error("curve never crosses below {threshold}")]
    NoCrossing { threshold: f64 },

    #[error("state carries no tripartite negativity at t = 0")]
    NotEntangled,

    #[error("reconstruction did not converge (gradient norm {gradient_norm:.3e})")]
    NonConvergence { gradient_norm: f64 },

    #[error("tomography records are missing settings: {0:?}")]
    MissingSettings(Vec<String>),

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}

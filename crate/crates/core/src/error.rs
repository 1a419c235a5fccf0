use thiserror::Error;

/// Errors raised by the simulator and trainer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{what} = {value} is outside its domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("index {index} out of range for {len} sites")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("operator is not Hermitian (max |A - A^dagger| = {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("not a valid density matrix: {reason}")]
    InvalidState { reason: String },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("steady state is not unique (singular value probe {probe:e} below {threshold:e})")]
    DegenerateSteadyState { probe: f64, threshold: f64 },

    #[error("steady-state residual {residual:e} exceeds {tolerance:e}")]
    Residual { residual: f64, tolerance: f64 },

    #[error("integration failed: trace drifted by {drift:e} at t = {time}")]
    Integration { drift: f64, time: f64 },

    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("histogram binning mismatch: {left} vs {right}")]
    BinningMismatch { left: String, right: String },

    #[error("non-finite loss at step {step}")]
    NonFinite { step: usize },

    #[error("output qubit {output}: {source}")]
    Output { output: usize, source: Box<Error> },

    #[error("training aborted at step {step}: {source}")]
    Training { step: usize, source: Box<Error> },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// True when the root cause is a degenerate steady state.
    pub fn is_degenerate(&self) -> bool {
        match self {
            Error::DegenerateSteadyState { .. } => true,
            Error::Output { source, .. } | Error::Training { source, .. } => source.is_degenerate(),
            _ => false,
        }
    }
}

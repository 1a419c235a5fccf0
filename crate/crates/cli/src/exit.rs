//! Failure classification and process exit codes.

use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitKind {
    Config = 1,
    Io = 2,
    Numerical = 3,
    Validation = 4,
}

#[derive(Debug)]
pub struct Failure {
    pub kind: ExitKind,
    pub error: anyhow::Error,
}

pub type Outcome<T> = std::result::Result<T, Failure>;

impl Failure {
    pub fn new(kind: ExitKind, error: impl Into<anyhow::Error>) -> Self {
        Self { kind, error: error.into() }
    }

    pub fn config(msg: impl fmt::Display) -> Self {
        Self::new(ExitKind::Config, anyhow::anyhow!("{msg}"))
    }

    pub fn io(context: impl fmt::Display, err: std::io::Error) -> Self {
        Self::new(ExitKind::Io, anyhow::Error::new(err).context(context.to_string()))
    }

    pub fn validation(msg: impl fmt::Display) -> Self {
        Self::new(ExitKind::Validation, anyhow::anyhow!("{msg}"))
    }

    /// Bad inputs map to exit 1, solver and training aborts to exit 3.
    pub fn from_core(err: dqgan::Error) -> Self {
        use dqgan::Error as E;
        let kind = match &err {
            E::Config(_) | E::Domain { .. } | E::DimensionMismatch { .. } | E::IndexOutOfRange { .. } | E::BinningMismatch { .. } | E::Empty(_) => ExitKind::Config,
            _ => ExitKind::Numerical,
        };
        Self::new(kind, err)
    }

    pub fn code(&self) -> i32 {
        self.kind as i32
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

impl From<dqgan::Error> for Failure {
    fn from(err: dqgan::Error) -> Self {
        Self::from_core(err)
    }
}

//! Error type shared by every module of the crate.

use thiserror::Error;

use crate::analysis::PulseFit;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Atomic detuning is zero, so the normalized detuning cannot be formed.
    #[error("singular detuning: reference frame coincides with the spin transition (Delta = 0)")]
    SingularDetuning,

    /// Invalid or inconsistent configuration.
    #[error("config error: {0}")]
    Config(String),

    #[error("blow-up at step {step}: max |F| = {max_abs:e}")]
    BlowUp { step: u64, max_abs: f64 },

    #[error("non-finite value at step {step}")]
    NonFinite { step: u64 },

    #[error("sech fit failed: {reason}")]
    FitFailure {
        reason: String,
        initial: Box<PulseFit>,
    },

    /// Failure before any compute started (output directory, plan resolution).
    #[error("setup error: {0}")]
    Setup(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("format error: {0}")]
    Format(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// True for failures produced by numerical integration or fitting.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::BlowUp { .. } | Error::NonFinite { .. } | Error::FitFailure { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

/// A run that stopped early, together with whatever it produced before stopping.
#[derive(Debug, Clone)]
pub struct Aborted<R> {
    pub error: Error,
    pub partial: R,
}

impl<R> std::fmt::Display for Aborted<R> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "run aborted: {}", self.error)
    }
}

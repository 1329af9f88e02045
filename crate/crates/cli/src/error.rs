use std::fmt;

use maser_soliton::Error;

/// Process exit codes. 0, 2, 3 and 4 are a stable contract; 1 covers I/O
/// trouble and failed integrity checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Failure = 1,
    Config = 2,
    Domain = 3,
    Numerical = 4,
}

impl ExitKind {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ExitKind::Failure => "failure",
            ExitKind::Config => "config",
            ExitKind::Domain => "domain",
            ExitKind::Numerical => "numerical",
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ExitKind,
    pub message: String,
}

impl CliError {
    pub fn new(kind: ExitKind, message: impl Into<String>) -> Self {
        CliError {
            kind,
            message: message.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(ExitKind::Config, message)
    }

    pub fn failure(message: impl Into<String>) -> Self {
        Self::new(ExitKind::Failure, message)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

pub fn kind_of(e: &Error) -> ExitKind {
    match e {
        Error::Domain(_) | Error::SingularDetuning => ExitKind::Domain,
        Error::Config(_) | Error::Setup(_) | Error::Format(_) => ExitKind::Config,
        Error::BlowUp { .. } | Error::NonFinite { .. } | Error::FitFailure { .. } => {
            ExitKind::Numerical
        }
        Error::Io(_) => ExitKind::Failure,
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::new(kind_of(&e), e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::failure(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

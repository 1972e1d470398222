use std::fmt;

/// Exit status `0`.
pub const EXIT_PASS: i32 = 0;
/// Exit status of a failed check.
pub const EXIT_FAIL: i32 = 1;
/// Exit status of an invalid configuration.
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug)]
pub enum CliError {
    ConfigInvalid(String),
    /// First failing check of a suite.
    SuiteFailed {
        suite: String,
        check: String,
    },
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        Self::ConfigInvalid(msg.into())
    }

    pub fn core(e: oneres_core::Error) -> Self {
        Self::ConfigInvalid(e.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::ConfigInvalid(_) => EXIT_CONFIG,
            Self::SuiteFailed { .. } | Self::Runtime(_) => EXIT_FAIL,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ConfigInvalid(m) => write!(f, "invalid configuration: {m}"),
            Self::SuiteFailed { suite, check } => write!(f, "suite {suite} failed at {check}"),
            Self::Runtime(e) => write!(f, "{e:#}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        Self::Runtime(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Runtime(e.into())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::Runtime(e.into())
    }
}

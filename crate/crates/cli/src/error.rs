use std::fmt;

use evc_core::cwt::CwtError;
use evc_core::f0prep::F0Error;
use evc_core::io::IoError;
use evc_core::metrics::MetricError;
use evc_core::vawgan::VawganError;

/// Command failure, carrying its process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Exit 1.
    Io(String),
    /// Exit 2: bad configuration, shapes or data.
    Config(String),
    /// Exit 3.
    Diverged(String),
    /// Exit 4: reference and converted utterances do not pair up.
    Pairing(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Diverged(_) => 3,
            CliError::Pairing(_) => 4,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Io(m) | CliError::Config(m) | CliError::Diverged(m) | CliError::Pairing(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        match e {
            IoError::InvalidShape(_) => CliError::Config(e.to_string()),
            _ => CliError::Io(e.to_string()),
        }
    }
}

impl From<F0Error> for CliError {
    fn from(e: F0Error) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<CwtError> for CliError {
    fn from(e: CwtError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<MetricError> for CliError {
    fn from(e: MetricError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<VawganError> for CliError {
    fn from(e: VawganError) -> Self {
        match e {
            VawganError::TrainingDiverged { .. } => CliError::Diverged(e.to_string()),
            VawganError::Io(io) => io.into(),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

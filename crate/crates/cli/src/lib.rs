//! Library face of the command-line tool: the configuration parser and
//! the error-to-exit-code mapping, split out so they can be tested and
//! fuzzed directly.

pub mod config;

use torevac::error::{DataError, MeshError, OptError};

#[derive(Debug)]
pub enum CliError {
    /// exit 2
    Config(String),
    /// exit 3
    Numeric(String),
    /// exit 4
    Io(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numeric(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        match e {
            DataError::NonPositiveSigma { .. } => CliError::Numeric(e.to_string()),
            _ => CliError::Io(e.to_string()),
        }
    }
}

impl From<MeshError> for CliError {
    fn from(e: MeshError) -> Self {
        match e {
            MeshError::Io { .. } | MeshError::BadFile { .. } => CliError::Io(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<torevac::error::FemError> for CliError {
    fn from(e: torevac::error::FemError) -> Self {
        CliError::Numeric(e.to_string())
    }
}

impl From<torevac::error::BepError> for CliError {
    fn from(e: torevac::error::BepError) -> Self {
        CliError::Numeric(e.to_string())
    }
}

impl From<torevac::error::GeometryError> for CliError {
    fn from(e: torevac::error::GeometryError) -> Self {
        CliError::Numeric(e.to_string())
    }
}

impl From<OptError> for CliError {
    fn from(e: OptError) -> Self {
        match e {
            OptError::Data(inner) => inner.into(),
            OptError::Mesh(inner) => inner.into(),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}


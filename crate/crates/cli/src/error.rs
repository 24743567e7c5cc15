use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config {path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("{0}")]
    UnknownName(rbfrk::Error),
    #[error("{0}")]
    StepCounts(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Core(rbfrk::Error),
    #[error("tableau `{method}` fails: {failed}")]
    Validation { method: String, failed: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } => 2,
            CliError::UnknownName(_) => 3,
            CliError::StepCounts(_) => 4,
            CliError::Io { .. } => 5,
            CliError::Core(_) | CliError::Validation { .. } => 1,
        }
    }
}

impl From<rbfrk::Error> for CliError {
    fn from(e: rbfrk::Error) -> Self {
        match e {
            rbfrk::Error::UnknownMethod(_) | rbfrk::Error::UnknownProblem(_) => CliError::UnknownName(e),
            rbfrk::Error::InvalidStepCounts(m) => CliError::StepCounts(format!("invalid step count list: {m}")),
            rbfrk::Error::InvalidRaster(_) => CliError::Usage(e.to_string()),
            e => CliError::Core(e),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

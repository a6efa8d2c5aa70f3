//! Command errors and their exit codes.

use std::path::Path;

use raypet_classifiers::ClassifierError;
use raypet_core::{ClipIoError, DatasetError, PipelineError};
use raypet_eval::EvalError;
use thiserror::Error;

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_IO: u8 = 3;
pub const EXIT_DIVERGENCE: u8 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{0}")]
    Divergence(String),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Io { path: path.display().to_string(), message: e.to_string() }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => EXIT_USAGE,
            CliError::Io { .. } => EXIT_IO,
            CliError::Divergence(_) => EXIT_DIVERGENCE,
            CliError::Other(_) => EXIT_FAILURE,
        }
    }
}

impl From<ClassifierError> for CliError {
    fn from(e: ClassifierError) -> Self {
        match e {
            ClassifierError::Divergence { .. } => CliError::Divergence(e.to_string()),
            ClassifierError::Checkpoint { path, message } => CliError::Io { path, message },
            ClassifierError::Config(_)
            | ClassifierError::Empty
            | ClassifierError::SingleClass(_)
            | ClassifierError::Shape(_) => CliError::Usage(e.to_string()),
            ClassifierError::Learn(_) => CliError::Other(e.to_string()),
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        CliError::Config(vec![e.to_string()])
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::Io { path, source } => {
                CliError::Io { path: path.display().to_string(), message: source.to_string() }
            }
            DatasetError::Pipeline(p) => p.into(),
            other => CliError::Io { path: "<dataset>".into(), message: other.to_string() },
        }
    }
}

impl From<ClipIoError> for CliError {
    fn from(e: ClipIoError) -> Self {
        match e {
            ClipIoError::Io { path, source } => {
                CliError::Io { path: path.display().to_string(), message: source.to_string() }
            }
            other => CliError::Io { path: "<clip>".into(), message: other.to_string() },
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Classifier(c) => c.into(),
            EvalError::Pipeline(p) => p.into(),
            EvalError::Dataset(d) => d.into(),
            EvalError::Split(_) | EvalError::EmptyTest => CliError::Usage(e.to_string()),
        }
    }
}

use std::path::PathBuf;

use cira_core::corpus::CorpusError;
use cira_core::evaluation::EvaluationError;
use cira_core::shallow::ShallowError;
use cira_service::ServiceError;
use cira_transformer::TransformerError;

/// Failure of a command, classified by the exit code it maps to.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Internal(_) => 3,
        }
    }

    pub fn write(path: &std::path::Path, e: std::io::Error) -> Self {
        CliError::Internal(format!("cannot write {}: {e}", path.display()))
    }

    pub fn read(path: &std::path::Path, e: std::io::Error) -> Self {
        CliError::Data(format!("cannot read {}: {e}", path.display()))
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        match e {
            CorpusError::InvalidSplit(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<ShallowError> for CliError {
    fn from(e: ShallowError) -> Self {
        match e {
            ShallowError::UnknownAlgorithm(_)
            | ShallowError::UnknownParam { .. }
            | ShallowError::InvalidParam { .. }
            | ShallowError::EmptyAxis(_)
            | ShallowError::GridFile(_) => CliError::Usage(e.to_string()),
            ShallowError::Corpus(c) => c.into(),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<EvaluationError> for CliError {
    fn from(e: EvaluationError) -> Self {
        match e {
            EvaluationError::Corpus(c) => c.into(),
            EvaluationError::Shallow(s) => s.into(),
            EvaluationError::DuplicateSystem(_)
            | EvaluationError::UnknownSystem(_)
            | EvaluationError::Config(_) => CliError::Usage(e.to_string()),
            EvaluationError::Run { .. } | EvaluationError::Model(_) => {
                CliError::Internal(e.to_string())
            }
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<TransformerError> for CliError {
    fn from(e: TransformerError) -> Self {
        match e {
            TransformerError::Checkpoint { .. }
            | TransformerError::Io { .. }
            | TransformerError::VariantMismatch { .. }
            | TransformerError::Corpus(_)
            | TransformerError::EmptyTrainingSet => CliError::Data(e.to_string()),
            TransformerError::TaggerUnavailable(_) | TransformerError::Config(_) => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Internal(e.to_string()),
        }
    }
}

impl From<ServiceError> for CliError {
    fn from(e: ServiceError) -> Self {
        match e {
            ServiceError::Config(_) | ServiceError::ModelRequired => CliError::Usage(e.to_string()),
            ServiceError::Io { .. }
            | ServiceError::Corpus(_)
            | ServiceError::Assign(_)
            | ServiceError::Model(_) => CliError::Data(e.to_string()),
            _ => CliError::Internal(e.to_string()),
        }
    }
}

pub fn missing(path: PathBuf) -> CliError {
    CliError::Data(format!("{} does not exist", path.display()))
}

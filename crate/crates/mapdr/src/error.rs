use std::path::PathBuf;

use thiserror::Error;

/// Failure reading or writing one of the CSV and text formats.
#[derive(Debug, Error)]
pub enum FileError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}, line {line}: {message}")]
    Format { path: PathBuf, line: u64, message: String },
}

impl FileError {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Self::Io { path: path.to_owned(), source }
    }

    pub(crate) fn csv(path: &std::path::Path, source: csv::Error) -> Self {
        Self::Csv { path: path.to_owned(), source }
    }

    pub(crate) fn format(path: &std::path::Path, line: u64, message: impl Into<String>) -> Self {
        Self::Format {
            path: path.to_owned(),
            line,
            message: message.into(),
        }
    }
}

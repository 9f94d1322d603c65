use std::path::{Path, PathBuf};

use crate::formats::ParseError;

/// Errors of the file, configuration and command layer.
#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error(transparent)]
    Core(#[from] mlzsr_core::Error),
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: ParseError },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config error: {0}")]
    Config(String),
    #[error("check failed: {0}")]
    Check(String),
}

pub type AppResult<T> = Result<T, AppError>;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

impl AppError {
    pub fn parse(path: &Path, source: ParseError) -> Self {
        AppError::Parse {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        AppError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        AppError::Config(message.into())
    }

    pub fn exit_code(&self) -> i32 {
        use mlzsr_core::Error as E;
        match self {
            AppError::Config(_) | AppError::Core(E::Config(_) | E::Domain(_)) => EXIT_CONFIG,
            AppError::Check(_) | AppError::Core(E::Numeric(_)) => EXIT_NUMERIC,
            AppError::Core(_) | AppError::Parse { .. } | AppError::Io { .. } => EXIT_DATA,
        }
    }
}

//! Command-line surface and file formats for the ensemble trainer.

pub mod cli;
pub mod commands;
pub mod config;
pub mod io;
pub mod persist;
pub mod report;

pub use cli::run;

/// Process exit codes: 0 success, 1 partial failure, 2 config/input error,
/// 3 numerical divergence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Success = 0,
    Partial = 1,
    ConfigError = 2,
    Divergence = 3,
}

/// Errors surfaced by the CLI layer.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("io error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error in {path} at row {row}, column {column}: {detail}")]
    Parse {
        path: String,
        row: usize,
        column: String,
        detail: String,
    },
    #[error(transparent)]
    Core(#[from] edde_core::Error),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) | CliError::Io { .. } | CliError::Parse { .. } => {
                ExitCode::ConfigError
            }
            CliError::Core(e) => match e {
                edde_core::Error::Divergence { .. } => ExitCode::Divergence,
                edde_core::Error::Round { source, .. } => {
                    if matches!(**source, edde_core::Error::Divergence { .. }) {
                        ExitCode::Divergence
                    } else {
                        ExitCode::ConfigError
                    }
                }
                _ => ExitCode::ConfigError,
            },
            CliError::Other(_) => ExitCode::Partial,
        }
    }

    pub fn io(path: impl Into<String>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

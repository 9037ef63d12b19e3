use std::path::PathBuf;

use thiserror::Error;

/// Process exit codes: 0 success, 2 configuration error, 3 data error,
/// 4 numeric failure.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] cfrlab_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use cfrlab_core::Error as Core;
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) | CliError::Io { .. } => 3,
            CliError::Core(core) => match core {
                Core::Config(_) | Core::OracleGuard(_) => 2,
                Core::Data(_)
                | Core::Shape(_)
                | Core::DegenerateTreatment(_)
                | Core::DegenerateInput(_)
                | Core::MissingGroundTruth(_) => 3,
                Core::Numeric(_) | Core::IllConditioned { .. } => 4,
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

pub fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
    let path = path.into();
    move |source| CliError::Io { path, source }
}

use std::process::ExitCode;

use screenlab_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("configuration error: {0}")]
    Config(String),
    /// A property the computation is supposed to satisfy failed beyond its
    /// tolerance.
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("resource limit: {0}")]
    Resource(String),
    #[error("numerical error: {0}")]
    Numeric(CoreError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type AppResult<T> = Result<T, AppError>;

impl AppError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            AppError::Config(_) => 2,
            AppError::Verification(_) | AppError::Numeric(_) => 3,
            AppError::Resource(_) => 4,
            AppError::Io { .. } => 1,
        })
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        AppError::Io { path: path.into(), source }
    }
}

impl From<CoreError> for AppError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Resource { needed, limit } => {
                AppError::Resource(format!("problem needs {needed} LP variables, limit is {limit}"))
            }
            CoreError::FreeDisposal { bundle, kappa, bound } => AppError::Config(format!(
                "bundle {bundle:#b} violates free disposal: kappa {kappa} exceeds the bound {bound}"
            )),
            CoreError::Model(m) => AppError::Config(m),
            other => AppError::Numeric(other),
        }
    }
}

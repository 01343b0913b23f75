use std::path::PathBuf;

use levyhomog_core::Error as CoreError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("config error: key `{key}`: {reason}")]
pub struct ConfigError {
    pub key: String,
    pub reason: String,
}

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("io error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("empty table: nothing to emit")]
    EmptyTable,
    #[error("{0}")]
    Core(#[from] CoreError),
    /// A check of the self-test or split-check battery failed.
    #[error("{0} check(s) failed")]
    Checks(usize),
    #[error("{0} sweep row(s) failed; no files written")]
    SweepFailed(usize),
}

impl AppError {
    /// 1 for failures of the computation, 2 for configuration and IO problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Core(e) if e.is_computational() => 1,
            AppError::Checks(_) | AppError::SweepFailed(_) => 1,
            _ => 2,
        }
    }
}

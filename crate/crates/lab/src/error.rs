use std::io;
use std::path::PathBuf;

use semiquantum_core::Error as CoreError;

/// Process exit codes of the command-line tool.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Success = 0,
    Config = 1,
    Numerical = 2,
    Divergence = 3,
}

impl ExitCode {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("cannot parse {path}: {source}")]
    Parse {
        path: PathBuf,
        source: serde_json::Error,
    },

    #[error("{context}: {source}")]
    Io { context: String, source: io::Error },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("unexpected divergence at t = {t_div}")]
    Divergence { t_div: f64 },
}

impl LabError {
    pub fn config(msg: impl Into<String>) -> Self {
        LabError::Config(msg.into())
    }

    pub fn io(context: impl Into<String>, source: io::Error) -> Self {
        LabError::Io {
            context: context.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            LabError::Config(_) | LabError::Parse { .. } | LabError::Io { .. } | LabError::Csv(_) => {
                ExitCode::Config
            }
            LabError::Core(e) => match e {
                CoreError::NumericalFailure { .. } => ExitCode::Numerical,
                CoreError::DivergedBeforeTransient { .. } => ExitCode::Divergence,
                _ => ExitCode::Config,
            },
            LabError::Numerical(_) => ExitCode::Numerical,
            LabError::Divergence { .. } => ExitCode::Divergence,
        }
    }
}

pub type Result<T> = std::result::Result<T, LabError>;

use std::path::PathBuf;

use serde::Serialize;

/// Everything a CLI run can fail with.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] nested_tom_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {source}")]
    Parse {
        path: PathBuf,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("missing input {0}")]
    MissingInput(PathBuf),
    #[error("{0}")]
    Usage(String),
}

pub type Result<T> = std::result::Result<T, CliError>;

/// The error as printed on stderr before a nonzero exit.
#[derive(Debug, Serialize)]
pub struct ErrorReport {
    pub error: &'static str,
    pub message: String,
    pub exit_status: i32,
}

impl CliError {
    /// Stable machine-readable kind.
    pub fn kind(&self) -> &'static str {
        use nested_tom_core::Error as E;
        match self {
            CliError::Core(E::MissingModel(_)) => "missing_model",
            CliError::Core(E::InvalidConfig(_)) => "invalid_config",
            CliError::Core(E::VersionMismatch { .. } | E::CorruptFile(_)) => "corrupt_checkpoint",
            CliError::Core(E::NonFiniteLoss { .. }) => "non_finite_loss",
            CliError::Core(_) => "inference",
            CliError::Io { .. } => "io",
            CliError::Parse { .. } | CliError::Csv { .. } => "parse",
            CliError::MissingInput(_) => "missing_input",
            CliError::Usage(_) => "usage",
        }
    }

    /// Process exit status: 2 usage, 3 missing model or input, 4 I/O,
    /// 5 malformed data or checkpoint, 1 anything else.
    pub fn exit_status(&self) -> i32 {
        match self.kind() {
            "usage" | "invalid_config" => 2,
            "missing_model" | "missing_input" => 3,
            "io" => 4,
            "parse" | "corrupt_checkpoint" => 5,
            _ => 1,
        }
    }

    pub fn report(&self) -> ErrorReport {
        ErrorReport {
            error: self.kind(),
            message: self.to_string(),
            exit_status: self.exit_status(),
        }
    }
}

impl From<clap::Error> for CliError {
    fn from(e: clap::Error) -> Self {
        CliError::Usage(e.to_string().trim_end().to_string())
    }
}

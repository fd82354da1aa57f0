use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("decompose check failed: max distance {max_distance:e} exceeds {tolerance:e}")]
    CheckFailed { max_distance: f64, tolerance: f64 },
}

impl CliError {
    /// Process exit code: 1 config, 2 I/O, 3 failed check.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Io { .. } => 2,
            CliError::CheckFailed { .. } => 3,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

impl From<qgan_core::Error> for CliError {
    fn from(e: qgan_core::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

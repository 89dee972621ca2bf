use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {msg}", path.display())]
    Malformed { path: PathBuf, msg: String },

    #[error(transparent)]
    Core(#[from] twoway_core::Error),

    /// Some trials of an experiment failed; the outputs were still written.
    #[error("{failed} of {total} trials failed")]
    PartialFailure { failed: usize, total: usize },
}

pub type Result<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    pub fn malformed(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Self::Malformed { path: path.into(), msg: msg.into() }
    }

    /// 1 for numerical failures, 2 for usage, parse and I/O errors.
    pub fn exit_code(&self) -> u8 {
        use twoway_core::Error as E;
        match self {
            CliError::PartialFailure { .. } => 1,
            CliError::Core(E::Data(_) | E::ZeroRow(_) | E::ZeroColumn(_) | E::NoStructure) => 1,
            _ => 2,
        }
    }
}

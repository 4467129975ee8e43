use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("instance generation failed: {0}")]
    Generation(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error(transparent)]
    Core(#[from] bwcr_core::Error),
}

impl SimError {
    /// Process exit code used by the command line: 2 for bad configs, 3 for failed generation.
    pub fn exit_code(&self) -> i32 {
        match self {
            SimError::Config(_) | SimError::Json { .. } | SimError::Core(bwcr_core::Error::Config(_)) => 2,
            SimError::Generation(_) => 3,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> SimError {
        let path = path.into();
        move |source| SimError::Io { path, source }
    }
}

pub type Result<T> = std::result::Result<T, SimError>;

pub(crate) fn config_err(e: impl std::fmt::Display) -> SimError {
    SimError::Config(e.to_string())
}

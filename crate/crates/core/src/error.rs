use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: invalid JSON: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("manifest: {0}")]
    Manifest(#[from] crate::manifest::ManifestError),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("synthetic corpus: {0}")]
    Synth(#[from] crate::synth::SynthError),

    #[error("pattern contrast: {0}")]
    Contrast(#[from] crate::mining::ContrastError),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for this error: 2 for bad input, 3 for internal
    /// invariant violations.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Invariant(_) => 3,
            _ => 2,
        }
    }
}

//! Error type shared across the toolkit.
//!
//! Every variant maps to a stable category token so the CLI can emit
//! machine-parseable one-line failures.

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// An artifact file is malformed or has an unknown version header.
    #[error("{0}")]
    Format(String),

    /// A word id does not fit the configured input encoding.
    #[error("word id {id} does not fit {bits}-bit encoding")]
    Capacity { id: usize, bits: usize },

    #[error("{0}")]
    Config(String),

    /// Artifact content hashes disagree (vocabulary / assignment / model).
    #[error("{0}")]
    Incompatible(String),

    /// Non-finite values appeared in a forward pass or update.
    #[error("{0}")]
    Numeric(String),

    /// An operation received empty or degenerate input it cannot define
    /// a result for (empty corpus, zero total tokens, empty test set).
    #[error("{0}")]
    EmptyInput(String),

    /// Training loss became non-finite.
    #[error("training diverged at epoch {epoch}, sentence {sentence}")]
    Divergence { epoch: usize, sentence: usize },
}

impl Error {
    /// Stable category token for machine-parseable CLI failures.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Format(_) => "format",
            Error::Capacity { .. } => "capacity",
            Error::Config(_) => "config",
            Error::Incompatible(_) => "incompatible",
            Error::Numeric(_) => "numeric",
            Error::EmptyInput(_) => "empty-input",
            Error::Divergence { .. } => "divergence",
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

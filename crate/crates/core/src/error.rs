use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Scores one voter compared when it failed to find a strict winner.
pub type VoterScores = [f64; 3];

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("index {value} out of range on axis {axis} (size {size})")]
    IndexOutOfRange { axis: usize, value: usize, size: usize },

    #[error("resource limit exceeded: {what} needs {needed}, cap is {cap}")]
    Resource { what: &'static str, needed: u128, cap: u128 },

    #[error("unsupported transform: {0}")]
    UnsupportedTransform(String),

    #[error("undecidable order for probes {probes:?}{}: every voter tied (scores {scores:?})",
        step.map(|t| format!(" while inserting axis {t}")).unwrap_or_default())]
    Undecidable {
        probes: Vec<usize>,
        scores: Vec<VoterScores>,
        step: Option<usize>,
    },

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Attach the insertion step to an undecidable error raised inside a recovery loop.
    pub(crate) fn at_step(self, t: usize) -> Self {
        match self {
            Error::Undecidable { probes, scores, .. } => Error::Undecidable { probes, scores, step: Some(t) },
            other => other,
        }
    }

    pub fn is_undecidable(&self) -> bool {
        matches!(self, Error::Undecidable { .. })
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

use std::path::PathBuf;

use thiserror::Error;

use crate::blend::Diagnostic;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("manifest validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("value out of range: {0}")]
    Domain(String),

    #[error("manifest has no sources")]
    EmptyManifest,

    #[error("unknown source or key `{0}`")]
    UnknownSource(String),

    #[error("unknown domain `{0}`")]
    UnknownDomain(String),

    #[error("{target} epochs of `{key}` need weight {required}, which the blend cannot give")]
    InfeasibleTarget {
        key: String,
        target: String,
        required: String,
    },

    #[error("blend `{0}` has no `crawl` weight to expand")]
    MissingCrawlKey(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("blend `{name}` is invalid: {}", diagnostics.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidBlend {
        name: String,
        diagnostics: Vec<Diagnostic>,
    },

    #[error("cap for `{0}` cannot be met")]
    CapInfeasible(String),

    #[error("source `{0}` is in the blend but has no available tokens")]
    EmptyShardList(String),

    #[error("schedule does not fit in 64-bit offsets: {0}")]
    BudgetOverflow(String),

    #[error("blend weights need more precision than the scheduler supports: {0}")]
    WeightPrecision(String),

    #[error("cursor does not belong to this schedule: {0}")]
    CursorMismatch(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the districtbench core library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("missing dataset file {}", .0.display())]
    MissingFile(PathBuf),

    #[error("{file}: column `{column}` has {found} entries, expected {expected}")]
    LengthMismatch {
        file: String,
        column: String,
        expected: usize,
        found: usize,
    },

    #[error("{file}: missing column `{column}`")]
    MissingColumn { file: String, column: String },

    #[error("{file}: row {row}, column `{column}`: {message}")]
    InvalidCell {
        file: String,
        row: usize,
        column: String,
        message: String,
    },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid schema descriptor: {0}")]
    InvalidSchema(String),

    #[error("unknown observation feature `{0}`")]
    UnknownFeature(String),

    #[error("expected {expected} building parameter sets, got {found}")]
    BuildingCountMismatch { expected: usize, found: usize },

    #[error("expected {expected} agent actions, got {found}")]
    AgentCountMismatch { expected: usize, found: usize },

    #[error("step called on a finished episode (t = {0})")]
    EpisodeDone(usize),

    #[error("invalid episode window: {0}")]
    InvalidWindow(String),

    #[error("invalid trace: {0}")]
    InvalidTrace(String),

    #[error("baseline value for `{0}` is zero; ratio normalization undefined")]
    ZeroBaseline(&'static str),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("replay buffer holds {have} transitions, learner starts at {need}")]
    LearnerNotStarted { have: usize, need: usize },

    #[error("checkpoint schema hash {found} does not match environment schema {expected}")]
    SchemaMismatch { expected: String, found: String },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("io error at {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Everything that can go wrong, grouped by the process exit code it maps to.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),

    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    MalformedLine { line: usize, message: String },

    #[error("line {line}: unparsable timestamp {value:?}")]
    Timestamp { line: usize, value: String },

    #[error("duplicate document id {0:?}")]
    DuplicateId(String),

    #[error("embedding file: {0}")]
    EmbeddingFormat(String),

    #[error("embedding row count {rows} does not match corpus size {documents}")]
    RowCountMismatch { rows: usize, documents: usize },

    #[error("sidecar id {0:?} is not in the corpus")]
    UnknownSidecarId(String),

    #[error("non-finite embedding value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("procrustes needs more than {dim} anchors, got {anchors}")]
    UnderdeterminedAnchors { anchors: usize, dim: usize },

    #[error("neighbor count {k} exceeds point count {n}")]
    TooFewPoints { k: usize, n: usize },

    #[error("token {0:?} does not occur in the reference documents")]
    ExcludedPair(String),

    #[error("coherence undefined: every topic has fewer than two scoreable terms")]
    UndefinedCoherence,

    #[error("topic diversity needs at least one nonempty topic")]
    EmptyTopics,

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("stage {stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Process exit code: 2 config, 3 data, 4 internal.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidSpec(_) => 2,
            Error::Stage { source, .. } => source.exit_code(),
            Error::Internal(_) => 4,
            _ => 3,
        }
    }
}

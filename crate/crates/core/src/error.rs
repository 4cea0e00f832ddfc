use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised anywhere in the pipeline.
///
/// Variants are grouped into families (see [`ErrorFamily`]); the binary maps
/// each family onto its own process exit code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed activity export {path}: {reason}")]
    MalformedExport { path: PathBuf, reason: String },
    #[error("activity export {0} contains no text records")]
    EmptyExport(PathBuf),
    #[error("malformed lexicon at line {line}: {reason}")]
    MalformedLexicon { line: usize, reason: String },
    #[error("duplicate label '{surface}' for trait '{trait_name}'")]
    DuplicateLabel { surface: String, trait_name: String },
    #[error("malformed artifact {path}: {reason}")]
    MalformedArtifact { path: PathBuf, reason: String },
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("no word reaches the minimum frequency of {min_frequency}")]
    EmptyVocabulary { min_frequency: usize },
    #[error("cosine of a zero vector")]
    ZeroVector,
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("split sizes sum to {requested} but there are {available} participants")]
    SizeMismatch { requested: usize, available: usize },
    #[error("too few rows: need at least {needed}, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("target has zero variance")]
    DegenerateTarget,
    #[error("variance is zero: {0}")]
    DegenerateVariance(String),
    #[error("value off the hyperparameter grid: {0}")]
    OffGrid(String),
    #[error("requested {k} features but only {available} are ranked")]
    KTooLarge { k: usize, available: usize },
    #[error("need at least {needed} distinct points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("grid result is empty")]
    EmptyGrid,
    #[error("variable '{0}' missing from cohort scores")]
    MissingVariable(String),
    #[error("participant '{0}' has no trait score")]
    MissingScore(String),

    #[error("stage '{stage}' needs upstream stage '{upstream}' which has not run")]
    MissingUpstream { stage: String, upstream: String },
    #[error("stage '{stage}' cache is stale: inputs changed since the cached run")]
    StaleCache { stage: String },
    #[error("unknown stage '{0}'")]
    UnknownStage(String),
}

/// Coarse grouping of errors, used for exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorFamily {
    Io,
    Input,
    Config,
    Numeric,
    Pipeline,
}

impl ErrorFamily {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorFamily::Config => 2,
            ErrorFamily::Io => 3,
            ErrorFamily::Input => 4,
            ErrorFamily::Numeric => 5,
            ErrorFamily::Pipeline => 6,
        }
    }
}

impl Error {
    pub fn family(&self) -> ErrorFamily {
        use Error::*;
        match self {
            Io { .. } => ErrorFamily::Io,
            MalformedExport { .. }
            | EmptyExport(_)
            | MalformedLexicon { .. }
            | DuplicateLabel { .. }
            | MalformedArtifact { .. }
            | MissingVariable(_)
            | MissingScore(_) => ErrorFamily::Input,
            Config(_) | OffGrid(_) | KTooLarge { .. } => ErrorFamily::Config,
            EmptyVocabulary { .. }
            | ZeroVector
            | DimensionMismatch { .. }
            | DegenerateData(_)
            | SizeMismatch { .. }
            | TooFewRows { .. }
            | DegenerateTarget
            | DegenerateVariance(_)
            | TooFewPoints { .. }
            | EmptyGrid => ErrorFamily::Numeric,
            MissingUpstream { .. } | StaleCache { .. } | UnknownStage(_) => ErrorFamily::Pipeline,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn artifact(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::MalformedArtifact {
            path: path.into(),
            reason: reason.into(),
        }
    }
}

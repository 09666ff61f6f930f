use thiserror::Error;

/// Errors surfaced by the library. Each maps to a process exit code used by
/// the CLI: config errors exit 2, data errors exit 3, internal invariant
/// violations exit 4.
#[derive(Debug, Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("label out of space: {0}")]
    InvalidLabel(String),

    #[error("zero probability for label {0}; categorical predictions must be smoothed first")]
    ZeroProbability(String),

    #[error("prefix of {0} examples is too small for a train/dev split (need at least 10)")]
    TooSmallPrefix(usize),

    #[error("annotation '{field}' missing on example {index}")]
    AnnotationMissing { field: String, index: usize },

    #[error("matched control is not applicable: {0} is not a masking transform")]
    NotApplicable(String),

    #[error("results not comparable: {0}")]
    Incomparable(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::NotApplicable(_) => 2,
            Error::Data(_)
            | Error::InvalidLabel(_)
            | Error::TooSmallPrefix(_)
            | Error::AnnotationMissing { .. }
            | Error::Io(_) => 3,
            Error::ZeroProbability(_) | Error::Incomparable(_) | Error::Internal(_) => 4,
        }
    }

    /// Attach a condition name to the error message, preserving the exit
    /// code category.
    pub fn in_condition(self, name: &str) -> Error {
        match self {
            Error::Config(m) => Error::Config(format!("condition '{name}': {m}")),
            Error::Data(m) => Error::Data(format!("condition '{name}': {m}")),
            Error::Internal(m) => Error::Internal(format!("condition '{name}': {m}")),
            other @ (Error::InvalidLabel(_)
            | Error::TooSmallPrefix(_)
            | Error::AnnotationMissing { .. }) => {
                Error::Data(format!("condition '{name}': {other}"))
            }
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

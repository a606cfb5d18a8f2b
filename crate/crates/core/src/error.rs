use thiserror::Error;

/// Errors raised by the consensus engine.
///
/// Variants split into two families: input problems the caller can fix
/// (`is_validation() == true`) and broken internal invariants.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("line {line}: field `{field}`: {message}")]
    Record {
        line: usize,
        field: String,
        message: String,
    },

    #[error("opinions span multiple cases: `{first}` and `{other}`")]
    MixedCases { first: String, other: String },

    #[error("no opinions to build a consensus from")]
    NoOpinions,

    #[error("zero variance in {0}")]
    ZeroVariance(&'static str),

    #[error("timestamp {timestamp} for annotator `{annotator}` is not after the last entry ({last})")]
    NonMonotonicTimestamp {
        annotator: String,
        timestamp: i64,
        last: i64,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    /// `true` for errors caused by bad input rather than a bug.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Internal(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

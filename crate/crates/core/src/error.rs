use thiserror::Error;

/// Errors raised by the model, analysis and I/O layers.
///
/// Variants split into two families that the CLI maps to different exit
/// codes: input validation problems and numeric/domain failures.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid value for `{field}`: {reason}")]
    Validation { field: String, reason: String },

    #[error("source index {index} out of range for {len} sources")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("source {label} has non-zero leak angle; coherent amplitude sum is undefined")]
    IncoherentSource { label: String },

    #[error("visibility undefined: both amplitudes (or all rates) are zero")]
    UndefinedVisibility,

    #[error("attribution undefined: total count is zero")]
    UndefinedAttribution,

    #[error("inconsistent inputs: {0}")]
    InconsistentInputs(String),

    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True for errors caused by malformed or invalid input, as opposed to
    /// numeric or domain failures on otherwise valid input.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Validation { .. }
                | Error::Parse { .. }
                | Error::IndexOutOfRange { .. }
                | Error::Io(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised while building series, loading datasets or evaluating subjects.
#[derive(Debug, Error)]
pub enum Error {
    #[error("label at index {index} is {value}, expected 0 or 1")]
    InvalidLabel { index: usize, value: u8 },

    #[error("probability {value} at index {index} is outside [0, 1]")]
    ProbabilityOutOfRange { index: usize, value: f64 },

    #[error("series must contain at least one sample")]
    EmptySeries,

    #[error("sampling rate must be positive and finite, got {0}")]
    InvalidRate(f64),

    #[error("threshold {0} is outside [0, 1]")]
    InvalidThreshold(f64),

    #[error("malformed subject record{}: {reason}", subject.as_deref().map(|s| format!(" '{s}'")).unwrap_or_default())]
    MalformedRecord { subject: Option<String>, reason: String },

    #[error("invalid metric specification: {0}")]
    InvalidSpec(String),

    #[error("unknown scenario '{0}'")]
    UnknownScenario(String),

    #[error("subject sets are not aligned: {0}")]
    Misaligned(String),

    #[error("{message}, line {line}")]
    Parse { line: u64, message: String },

    #[error("invalid duration '{0}'")]
    InvalidDuration(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

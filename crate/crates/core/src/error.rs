use thiserror::Error;

/// Errors raised by the simulation core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid value for `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("orientation ({x}, {y}) is not unit-norm")]
    NonUnitOrientation { x: f64, y: f64 },

    #[error("RIS index {index} out of range (have {count})")]
    RisIndexOutOfRange { index: usize, count: usize },

    #[error("RIS {index} not configured")]
    RisNotConfigured { index: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("point ({x}, {y}) coincides with antenna element {element}")]
    SingularPoint { x: f64, y: f64, element: usize },

    #[error("cannot build a precoder from an all-zero channel")]
    ZeroChannel,

    #[error("no circle points to search")]
    EmptyCircle,

    #[error("scan grid has no points outside the limit circle")]
    NoOutsidePoints,

    #[error("empty metric series")]
    EmptySeries,

    #[error("sample {index}: {source}")]
    Sample {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

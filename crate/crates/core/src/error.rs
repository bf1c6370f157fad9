use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{0}")]
    InvalidInput(String),

    #[error("frame {frame} has no skin pixels")]
    NoSkinPixels { frame: usize },

    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (u32, u32),
        actual: (u32, u32),
    },

    #[error("{0}")]
    Degenerate(String),

    #[error("sampling rate {fs} Hz too low for band upper edge {high} Hz")]
    SamplingRateTooLow { fs: f64, high: f64 },

    #[error("signal too short: need {needed} samples, have {actual}")]
    TooShort { needed: usize, actual: usize },

    #[error("no valid pairs to compare")]
    NoValidPairs,

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("entry '{id}': {source}")]
    Entry {
        id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Short machine-readable tag for error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid_input",
            Error::NoSkinPixels { .. } => "no_skin_pixels",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::Degenerate(_) => "degenerate",
            Error::SamplingRateTooLow { .. } => "sampling_rate_too_low",
            Error::TooShort { .. } => "too_short",
            Error::NoValidPairs => "no_valid_pairs",
            Error::Parse { .. } => "parse",
            Error::Entry { source, .. } => source.kind(),
            Error::Io { .. } => "io",
            Error::Image { .. } => "image",
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("index ({i}, {j}) out of range for side {side}")]
    IndexOutOfRange { i: usize, j: usize, side: usize },

    #[error("grid side must be positive")]
    EmptyGrid,

    #[error("expected {expected} values for a square grid, got {actual}")]
    NotSquare { expected: usize, actual: usize },

    #[error("non-finite value at ({i}, {j})")]
    NonFinite { i: usize, j: usize },

    #[error("side mismatch: expected {expected}, got {actual}")]
    SideMismatch { expected: usize, actual: usize },

    #[error("images have mismatched sizes (expected {expected}x{expected}): {}", offenders.join(", "))]
    DimensionMismatch {
        expected: usize,
        offenders: Vec<String>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: cannot decode image: {message}")]
    Decode { path: PathBuf, message: String },

    #[error("format error at byte offset {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("pixel ({i}, {j}) has zero variance across the set")]
    DegeneratePixel { i: usize, j: usize },

    #[error("ensemble has zero variance")]
    ZeroVariance,

    #[error("non-positive spectral value {value} at unmasked index ({i}, {j})")]
    NonPositiveSpectrum { i: usize, j: usize, value: f64 },

    #[error("degenerate power-law fit: {0}")]
    DegenerateFit(String),

    #[error("anchor ({i}, {j}) is the excluded zero-frequency index")]
    MaskedAnchor { i: usize, j: usize },

    #[error("timestep {t} outside [1, {steps}]")]
    TimestepOutOfRange { t: usize, steps: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl Error {
    /// Failures that come from the data's numerics rather than from bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NonPositiveSpectrum { .. }
                | Error::DegenerateFit(_)
                | Error::ZeroVariance
                | Error::NonFinite { .. }
        )
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::IndexOutOfRange { .. } => "index_out_of_range",
            Error::EmptyGrid => "empty_grid",
            Error::NotSquare { .. } => "not_square",
            Error::NonFinite { .. } => "non_finite",
            Error::SideMismatch { .. } => "side_mismatch",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::Io { .. } => "io",
            Error::Decode { .. } => "decode",
            Error::Format { .. } => "format",
            Error::InsufficientSamples { .. } => "insufficient_samples",
            Error::DegeneratePixel { .. } => "degenerate_pixel",
            Error::ZeroVariance => "zero_variance",
            Error::NonPositiveSpectrum { .. } => "non_positive_spectrum",
            Error::DegenerateFit(_) => "degenerate_fit",
            Error::MaskedAnchor { .. } => "masked_anchor",
            Error::TimestepOutOfRange { .. } => "timestep_out_of_range",
            Error::InvalidParameter(_) => "invalid_parameter",
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

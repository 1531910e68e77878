use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("non-finite sample at line {0}")]
    NonFiniteSample(usize),
    #[error("unsupported wav: {0}")]
    UnsupportedWav(String),
    #[error("invalid signal: {0}")]
    InvalidSignal(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid exceeds nyquist: |y| up to {max_y} but signal supports {nyquist}")]
    AboveNyquist { max_y: f64, nyquist: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("empty mask")]
    EmptyMask,
    #[error("degenerate graph: {0}")]
    DegenerateGraph(String),
    #[error("invalid subset: {0}")]
    InvalidSubset(String),
    #[error("graph has {0} vertices; use spectral estimator")]
    TooManyVertices(usize),
    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("no cut induced: {0}")]
    NoCut(String),
    #[error("zero region: field vanishes on mask")]
    ZeroRegion,
    #[error("f(0) ≈ 0; translate input first")]
    VanishingOrigin,
    #[error("format error: {0}")]
    Format(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag, used by the CLI error line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Parse(_) => "parse",
            Error::NonFiniteSample(_) => "non_finite_sample",
            Error::UnsupportedWav(_) => "unsupported_wav",
            Error::InvalidSignal(_) => "invalid_signal",
            Error::InvalidGrid(_) => "invalid_grid",
            Error::AboveNyquist { .. } => "above_nyquist",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::ShapeMismatch(_) => "shape_mismatch",
            Error::EmptyMask => "empty_mask",
            Error::DegenerateGraph(_) => "degenerate_graph",
            Error::InvalidSubset(_) => "invalid_subset",
            Error::TooManyVertices(_) => "too_many_vertices",
            Error::NoConvergence { .. } => "no_convergence",
            Error::NoCut(_) => "no_cut",
            Error::ZeroRegion => "zero_region",
            Error::VanishingOrigin => "vanishing_origin",
            Error::Format(_) => "format",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

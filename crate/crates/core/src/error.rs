use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = LabError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("unsupported weight {weight}: {reason}")]
    UnsupportedWeight { weight: u32, reason: &'static str },

    #[error("insufficient range: need {needed}, have {available} ({what})")]
    InsufficientRange {
        what: &'static str,
        needed: u64,
        available: u64,
    },

    #[error("insufficient q-expansion precision: need {needed}, have {available}")]
    InsufficientPrecision { needed: usize, available: usize },

    #[error("inexact arithmetic: {0}")]
    Inexact(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("quadrature did not converge: residual {residual:e} after {panels} panels")]
    Quadrature { residual: f64, panels: usize },

    #[error("cache corrupted at {path}: {reason}")]
    CacheCorrupt { path: PathBuf, reason: String },

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("smoothing disagreement {relative:e} exceeds {tolerance:e}")]
    SmoothingDisagreement { relative: f64, tolerance: f64 },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl LabError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        LabError::InvalidArgument(msg.into())
    }

    pub(crate) fn range(what: &'static str, needed: u64, available: u64) -> Self {
        LabError::InsufficientRange {
            what,
            needed,
            available,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LabError::Io {
            path: path.into(),
            source,
        }
    }
}

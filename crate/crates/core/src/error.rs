use std::path::PathBuf;

use thiserror::Error;

/// A single violated parameter or policy invariant.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationError {
    #[error("beta out of (2,3): got {0}")]
    BetaOutOfRange(f64),
    #[error("theta must be positive: got {0}")]
    ThetaNonPositive(f64),
    #[error("alpha below beta-1: got alpha={alpha}, lower bound {lo}")]
    AlphaBelowWindow { alpha: f64, lo: f64 },
    #[error("alpha above min(3beta-5, 5-beta): got alpha={alpha}, upper bound {hi}")]
    AlphaAboveWindow { alpha: f64, hi: f64 },
    #[error("b must be positive: got {0}")]
    DrainRateNonPositive(f64),
    #[error("station count d must be at least 1")]
    NoStations,
    #[error("scaling level n must be at least 1")]
    ScaleZero,
    #[error("policy coefficient {name} must be {requirement}: got {value}")]
    PolicyCoefficient {
        name: &'static str,
        requirement: &'static str,
        value: f64,
    },
    #[error("non-finite value for {0}")]
    NonFinite(&'static str),
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid parameters: {0}")]
    Validation(#[from] ValidationError),
    #[error("consistency error: {0}")]
    Consistency(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("resource limit: {0}")]
    Resource(String),
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl SimError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        SimError::Domain(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SimError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = SimError> = std::result::Result<T, E>;

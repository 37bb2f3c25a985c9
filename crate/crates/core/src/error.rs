use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the domain of an operation (bad index, empty set, malformed row).
    #[error("domain error: {0}")]
    Domain(String),

    /// A restricted linear system had a pivot below the singularity threshold.
    #[error("singular system: pivot {pivot:e} below threshold {threshold:e}")]
    Singular { pivot: f64, threshold: f64 },

    /// A computed vector failed its fixed-point residual check.
    #[error("residual {residual:e} exceeds tolerance {tolerance:e}: {context}")]
    Residual {
        residual: f64,
        tolerance: f64,
        context: String,
    },

    /// The iterative solver hit its iteration cap without meeting the residual tolerance.
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        trace: Vec<Vec<f64>>,
    },

    /// An enumeration would exceed the configured combination limit.
    #[error("capacity exceeded: {count} combinations > limit {limit}")]
    Capacity { count: u128, limit: u128 },

    /// A sampled matrix produced a hitting probability outside the computed bounds.
    #[error(
        "sandwich violation at state {state}: p = {value} not in [{lower}, {upper}] (sample {sample})"
    )]
    Sandwich {
        state: usize,
        sample: usize,
        value: f64,
        lower: f64,
        upper: f64,
        matrix: Vec<Vec<f64>>,
    },

    /// An internal consistency check failed (e.g. a zero set drifted during iteration).
    #[error("diagnostics: {0}")]
    Diagnostics(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Domain(_) => "domain",
            Self::Singular { .. } => "singular",
            Self::Residual { .. } => "residual",
            Self::NonConvergence { .. } => "non_convergence",
            Self::Capacity { .. } => "capacity",
            Self::Sandwich { .. } => "sandwich",
            Self::Diagnostics(_) => "diagnostics",
            Self::Json(_) => "json",
            Self::Csv(_) => "csv",
            Self::Io(_) => "io",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

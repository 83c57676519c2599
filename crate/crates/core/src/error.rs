use thiserror::Error;

/// Errors raised by state construction, transforms and I/O.
#[derive(Debug, Error)]
pub enum TomoError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(
        "degenerate frame{}: mu2*nu1 - mu1*nu2 = {det:e}",
        point.map(|p| format!(" at point {p}")).unwrap_or_default()
    )]
    DegenerateFrame { det: f64, point: Option<usize> },
    #[error("numerical failure in {stage}: {detail}")]
    Numeric { stage: &'static str, detail: String },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("cost guard: {0}")]
    CostExceeded(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = TomoError> = std::result::Result<T, E>;

impl TomoError {
    pub(crate) fn numeric(stage: &'static str, detail: impl Into<String>) -> Self {
        TomoError::Numeric { stage, detail: detail.into() }
    }

    pub(crate) fn domain(detail: impl Into<String>) -> Self {
        TomoError::Domain(detail.into())
    }
}

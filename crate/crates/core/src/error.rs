use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate metric at node {node}: det g = {det:e} <= {threshold:e}")]
    DegenerateMetric { node: usize, det: f64, threshold: f64 },

    #[error("rank mismatch: expected {expected}, got {got}")]
    RankMismatch { expected: usize, got: usize },

    #[error("unknown quantity `{0}`")]
    UnknownQuantity(String),

    #[error("unsupported convention: {0}")]
    UnsupportedConvention(String),

    #[error("bad config: {0}")]
    BadConfig(String),

    #[error("solver failure at t = {t}: {reason}")]
    SolverFailure { t: f64, reason: String },

    #[error("immersion lost at t = {t}: min det g = {min_det:e}")]
    ImmersionLost { t: f64, min_det: f64 },

    #[error("parse error: {0}")]
    ParseError(String),

    #[error("invalid value for `{key}`: {message}")]
    ValidationError { key: String, message: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid workspace: {0}")]
    InvalidWorkspace(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("spline parameter {0} outside [0, 1]")]
    ParameterOutOfRange(f64),
    #[error("random workspace generation gave up after {0} attempts")]
    SamplingExhausted(usize),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("approach trajectory did not join the path within {0} s")]
    ApproachTimeout(f64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

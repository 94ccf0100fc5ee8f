use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to decode image: {0}")]
    Decode(String),
    #[error("failed to encode image: {0}")]
    Encode(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid path: regions {0} and {1} are not adjacent")]
    InvalidPath(usize, usize),
    #[error("invalid labeling: {0}")]
    InvalidLabeling(String),
    #[error("invalid ROI: {0}")]
    InvalidRoi(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("graph too large for exhaustive enumeration ({0} regions, limit {1})")]
    TooLarge(usize, usize),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },
    #[error("rejected action ({i}, {j}): {reason}")]
    RejectedAction { i: usize, j: usize, reason: String },
    #[error("load error: {0}")]
    Load(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("training diverged: {0}")]
    Divergence(String),
    #[error("statistics error: {0}")]
    Stats(String),
    #[error("unsupported transfer: {0}")]
    UnsupportedTransfer(String),
    #[error(transparent)]
    Qmcs(#[from] entsched_qmcs::QmcsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    TomlDe(#[from] toml::de::Error),
    #[error(transparent)]
    TomlSer(#[from] toml::ser::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("invalid network config: {0}")]
    InvalidConfig(String),
    #[error("invalid training hyperparameters: {0}")]
    InvalidHyper(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("non-finite {what} at step {step}")]
    NonFinite { step: u64, what: String },
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error("checkpoint was written for a different network: expected {expected}, found {found}")]
    ConfigMismatch { expected: String, found: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

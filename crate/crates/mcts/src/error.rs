use slap_core::{GameError, ShapeError};
use slap_net::NetError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MctsError {
    #[error("search started from a finished game")]
    TerminalRoot,
    #[error("visit counts sum to zero")]
    ZeroVisits,
    #[error("invalid search config: {0}")]
    InvalidConfig(String),
    #[error("evaluator returned {actual} priors for a board of {expected} cells")]
    PriorLength { expected: usize, actual: usize },
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error(transparent)]
    Net(#[from] NetError),
}

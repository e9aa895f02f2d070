use slap_core::{GameError, ShapeError};
use slap_mcts::MctsError;
use slap_net::NetError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("malformed data file: {0}")]
    Format(String),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Mcts(#[from] MctsError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

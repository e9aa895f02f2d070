use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GameError {
    #[error("invalid board configuration: {0}")]
    InvalidConfig(String),
    #[error("illegal move at cell {index}: {reason}")]
    IllegalMove { index: usize, reason: &'static str },
    #[error("game is already over")]
    GameOver,
    #[error("invalid game state: {0}")]
    InvalidState(String),
    #[error("diagram parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ShapeError {
    #[error("planes are {rows}x{cols}, expected a square board")]
    NotSquare { rows: usize, cols: usize },
    #[error("expected {expected} values, got {actual}")]
    Length { expected: usize, actual: usize },
    #[error("expected {expected} channels, got {actual}")]
    Channels { expected: usize, actual: usize },
}

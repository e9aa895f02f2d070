//! Self-play reinforcement learning, the synthetic supervised experiment
//! and tiered evaluation against pure-MCTS opponents.

pub mod datafile;
mod error;
pub mod eval;
pub mod grid;
pub mod seeds;
pub mod selfplay;
pub mod storage;
pub mod supervised;
pub mod synth;

pub use error::TrainError;

//! Monte Carlo tree search with PUCT selection, guided either by the
//! policy-value network or by uniform priors with random rollouts.

pub mod agent;
pub mod config;
mod error;
pub mod evaluator;
pub mod policy;
pub mod search;

pub use agent::{selfplay_move, Agent, NetAgent, PureMctsAgent, RandomAgent};
pub use config::SearchConfig;
pub use error::MctsError;
pub use evaluator::{
    mask_and_normalize, prepare_input, random_rollout, Evaluation, Evaluator, Mode, NetEvaluator,
    Predictor, RolloutEvaluator,
};
pub use policy::{greedy_move, move_probs, sample_move};
pub use search::{puct_score, run_playouts, Node, SearchResult, SearchTree};

//! Move-choosing agents used in self-play and evaluation.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slap_core::GameState;

use crate::config::SearchConfig;
use crate::error::MctsError;
use crate::evaluator::{Evaluator, Mode, NetEvaluator, Predictor, RolloutEvaluator};
use crate::policy::{greedy_move, move_probs, sample_move};
use crate::search::run_playouts;

pub trait Agent {
    fn select_move(&mut self, state: &GameState) -> Result<usize, MctsError>;
    fn name(&self) -> String;
}

/// Greedy by root visit count; falls back to a uniformly random legal move
/// when no child was visited (a single playout only expands the root).
fn greedy_search<E: Evaluator, R: Rng>(
    state: &GameState,
    evaluator: &mut E,
    cfg: &SearchConfig,
    rng: &mut R,
) -> Result<usize, MctsError> {
    let (_, result) = run_playouts(state, evaluator, cfg, Some(&mut *rng))?;
    match move_probs(&result.visits, 0.0) {
        Ok(pi) => Ok(greedy_move(&pi)),
        Err(MctsError::ZeroVisits) => Ok(*state
            .legal_moves()
            .choose(rng)
            .expect("ongoing game has a legal move")),
        Err(e) => Err(e),
    }
}

/// Search with uniform priors and random-rollout leaf values.
pub struct PureMctsAgent {
    pub cfg: SearchConfig,
    evaluator: RolloutEvaluator<ChaCha8Rng>,
    /// Separate stream for the fallback choice so rollouts do not depend on it.
    choice_rng: ChaCha8Rng,
}

impl PureMctsAgent {
    pub fn new(n_playouts: usize, seed: u64) -> Self {
        let mut choice_rng = ChaCha8Rng::seed_from_u64(seed);
        choice_rng.set_stream(1);
        Self {
            cfg: SearchConfig::evaluation(n_playouts),
            evaluator: RolloutEvaluator {
                rng: ChaCha8Rng::seed_from_u64(seed),
            },
            choice_rng,
        }
    }
}

impl Agent for PureMctsAgent {
    fn select_move(&mut self, state: &GameState) -> Result<usize, MctsError> {
        greedy_search(state, &mut self.evaluator, &self.cfg, &mut self.choice_rng)
    }

    fn name(&self) -> String {
        format!("pure-mcts-{}", self.cfg.n_playouts)
    }
}

pub struct RandomAgent<R> {
    pub rng: R,
}

impl<R: Rng> Agent for RandomAgent<R> {
    fn select_move(&mut self, state: &GameState) -> Result<usize, MctsError> {
        if state.is_terminal() {
            return Err(MctsError::TerminalRoot);
        }
        Ok(*state.legal_moves().choose(&mut self.rng).expect("legal move"))
    }

    fn name(&self) -> String {
        "random".into()
    }
}

/// Network-guided search, greedy by visit count.
pub struct NetAgent<P, R> {
    pub cfg: SearchConfig,
    evaluator: NetEvaluator<P>,
    rng: R,
    label: String,
}

impl<P: Predictor, R: Rng> NetAgent<P, R> {
    pub fn new(predictor: P, mode: Mode, cfg: SearchConfig, rng: R) -> Result<Self, MctsError> {
        Ok(Self {
            label: format!("net-{}-{}", mode.name(), cfg.n_playouts),
            evaluator: NetEvaluator::new(predictor, mode)?,
            cfg,
            rng,
        })
    }
}

impl<P: Predictor, R: Rng> Agent for NetAgent<P, R> {
    fn select_move(&mut self, state: &GameState) -> Result<usize, MctsError> {
        greedy_search(state, &mut self.evaluator, &self.cfg, &mut self.rng)
    }

    fn name(&self) -> String {
        self.label.clone()
    }
}

/// One self-play turn: search with root noise, then sample from the visit
/// distribution. Returns the move and the distribution used as the training
/// target.
pub fn selfplay_move<E: Evaluator, R: Rng>(
    state: &GameState,
    evaluator: &mut E,
    cfg: &SearchConfig,
    rng: &mut R,
) -> Result<(usize, Vec<f32>), MctsError> {
    let (_, result) = run_playouts(state, evaluator, cfg, Some(&mut *rng))?;
    let pi = move_probs(&result.visits, cfg.temperature)?;
    let action = sample_move(&pi, rng);
    Ok((action, pi))
}

//! Leaf evaluation: network priors and value, or uniform priors with a random
//! rollout.

use rand::Rng;
use serde::{Deserialize, Serialize};
use slap_core::{
    encode_planes, extend_planes_cc, map_policy_back, slap, D4Transform, GameState, GameStatus,
    PlaneStack, transform_state, BASE_CHANNELS, CC_CHANNELS,
};
use slap_net::{NetError, Network, Prediction};

use crate::error::MctsError;

/// How positions are presented to the network and stored for training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Raw four-plane input, training data augmented ×8.
    Augment8,
    /// Canonical four-plane input, one stored sample per position.
    Slap,
    /// Eight-plane input with centered stone and position planes, training
    /// data augmented ×8.
    SlapCc,
}

impl Mode {
    pub fn in_channels(self) -> usize {
        match self {
            Mode::Augment8 | Mode::Slap => BASE_CHANNELS,
            Mode::SlapCc => CC_CHANNELS,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Augment8 => "augment8",
            Mode::Slap => "slap",
            Mode::SlapCc => "slap_cc",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "augment8" => Ok(Mode::Augment8),
            "slap" => Ok(Mode::Slap),
            "slap_cc" => Ok(Mode::SlapCc),
            other => Err(format!("unknown mode {other:?}, expected augment8, slap or slap_cc")),
        }
    }
}

/// Network input for `planes` under `mode`, with the transform that was
/// applied (identity unless `mode` is [`Mode::Slap`]).
pub fn prepare_input(planes: &PlaneStack, mode: Mode) -> Result<(PlaneStack, D4Transform), MctsError> {
    Ok(match mode {
        Mode::Augment8 => (planes.clone(), D4Transform::IDENTITY),
        Mode::Slap => {
            let s = slap(planes);
            (s.canonical, s.transform)
        }
        Mode::SlapCc => (extend_planes_cc(planes)?, D4Transform::IDENTITY),
    })
}

/// Result of evaluating a non-terminal leaf.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    /// One prior per cell, zero on occupied cells.
    pub priors: Vec<f32>,
    /// Expected outcome for the player to move.
    pub value: f32,
    /// Frame in which children are ordered for tie-breaking. Searching in
    /// the canonical frame makes the search itself symmetry-equivariant.
    pub frame: D4Transform,
}

pub trait Evaluator {
    fn evaluate(&mut self, state: &GameState) -> Result<Evaluation, MctsError>;
}

/// Anything that maps a batch of input planes to a policy and a value.
pub trait Predictor {
    fn in_channels(&self) -> usize;
    fn predict(&self, states: &[f32], batch: usize) -> Result<Prediction, NetError>;
}

impl Predictor for Network<f32> {
    fn in_channels(&self) -> usize {
        self.config().in_channels
    }

    fn predict(&self, states: &[f32], batch: usize) -> Result<Prediction, NetError> {
        Network::predict(self, states, batch)
    }
}

impl<P: Predictor + ?Sized> Predictor for &P {
    fn in_channels(&self) -> usize {
        (**self).in_channels()
    }

    fn predict(&self, states: &[f32], batch: usize) -> Result<Prediction, NetError> {
        (**self).predict(states, batch)
    }
}

/// Zeroes occupied cells and renormalizes; falls back to uniform over the
/// empty cells if nothing is left.
pub fn mask_and_normalize(policy: &mut [f32], state: &GameState) {
    let mut sum = 0.0f64;
    for (p, cell) in policy.iter_mut().zip(state.cells()) {
        if !cell.is_empty() || !p.is_finite() || *p < 0.0 {
            *p = 0.0;
        }
        sum += *p as f64;
    }
    if sum > 0.0 {
        policy.iter_mut().for_each(|p| *p = (*p as f64 / sum) as f32);
    } else {
        let empty = state.cells().iter().filter(|c| c.is_empty()).count().max(1);
        for (p, cell) in policy.iter_mut().zip(state.cells()) {
            *p = if cell.is_empty() { 1.0 / empty as f32 } else { 0.0 };
        }
    }
}

/// Network leaf evaluation. In [`Mode::Slap`] the network only ever sees
/// canonical inputs and its policy is mapped back to the original frame.
pub struct NetEvaluator<P> {
    pub predictor: P,
    pub mode: Mode,
}

impl<P: Predictor> NetEvaluator<P> {
    pub fn new(predictor: P, mode: Mode) -> Result<Self, MctsError> {
        if predictor.in_channels() != mode.in_channels() {
            return Err(MctsError::InvalidConfig(format!(
                "mode {} needs {} input channels, network has {}",
                mode.name(),
                mode.in_channels(),
                predictor.in_channels()
            )));
        }
        Ok(Self { predictor, mode })
    }
}

impl<P: Predictor> Evaluator for NetEvaluator<P> {
    fn evaluate(&mut self, state: &GameState) -> Result<Evaluation, MctsError> {
        let (input, frame) = prepare_input(&encode_planes(state), self.mode)?;
        let out = self.predictor.predict(input.data(), 1)?;
        // Masking in the network's frame keeps the summation order, and so
        // the rounding, identical across symmetric positions.
        let mut policy = out.policy;
        if frame.is_identity() {
            mask_and_normalize(&mut policy, state);
        } else {
            mask_and_normalize(&mut policy, &transform_state(state, frame));
        }
        let priors = map_policy_back(&policy, state.size(), frame)?;
        Ok(Evaluation {
            priors,
            value: out.value[0],
            frame,
        })
    }
}

/// Uniform priors over legal moves and the outcome of one uniformly random
/// playout to the end of the game.
pub struct RolloutEvaluator<R> {
    pub rng: R,
}

/// Plays uniformly random moves until the game ends and returns the outcome
/// for the player to move in `state`.
pub fn random_rollout(state: &GameState, rng: &mut impl Rng) -> f32 {
    let me = state.to_move();
    let mut s = state.clone();
    let mut empty = s.empty_cells();
    while !s.is_terminal() {
        let k = rng.random_range(0..empty.len());
        let cell = empty.swap_remove(k);
        s.apply(cell).expect("empty cell on an ongoing board");
    }
    match s.status() {
        GameStatus::Win(p) if p == me => 1.0,
        GameStatus::Win(_) => -1.0,
        _ => 0.0,
    }
}

impl<R: Rng> Evaluator for RolloutEvaluator<R> {
    fn evaluate(&mut self, state: &GameState) -> Result<Evaluation, MctsError> {
        let mut priors = vec![0.0; state.config().cells()];
        mask_and_normalize(&mut priors, state);
        Ok(Evaluation {
            priors,
            value: random_rollout(state, &mut self.rng),
            frame: D4Transform::IDENTITY,
        })
    }
}

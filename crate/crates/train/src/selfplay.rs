//! Self-play policy iteration: games from the current network, a FIFO
//! replay buffer filled per storage mode, and periodic training.

use std::collections::VecDeque;
use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use slap_core::{encode_planes, new_game, BoardConfig, GameStatus, PlaneStack, Player};
use slap_mcts::{move_probs, run_playouts, sample_move, Evaluator, Mode, NetEvaluator, SearchConfig};
use slap_net::{checkpoint, LabeledBatch, NetConfig, Network, Trainer, TrainHyper};

use crate::error::TrainError;
use crate::seeds::{names, sub_seed};
use crate::storage::expand;

/// One recorded turn: base planes for the player to move, the search
/// policy and the final outcome from that player's side.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSample {
    pub planes: PlaneStack,
    pub policy: Vec<f32>,
    pub value: f32,
}

#[derive(Debug, Clone)]
pub struct SelfPlayGame {
    pub samples: Vec<TrainingSample>,
    pub moves: Vec<usize>,
    pub status: GameStatus,
    pub seconds: f64,
}

/// Outcome of a finished game for each listed player to move.
pub fn assign_outcomes(to_move: &[Player], status: GameStatus) -> Vec<f32> {
    to_move
        .iter()
        .map(|&p| match status {
            GameStatus::Win(w) if w == p => 1.0,
            GameStatus::Win(_) => -1.0,
            _ => 0.0,
        })
        .collect()
}

/// Plays one game against itself. Root noise comes from `noise_rng` and
/// moves are sampled from the visit distribution with `move_rng`.
pub fn run_selfplay_game<E: Evaluator>(
    board: BoardConfig,
    evaluator: &mut E,
    cfg: &SearchConfig,
    move_rng: &mut impl Rng,
    noise_rng: &mut impl Rng,
) -> Result<SelfPlayGame, TrainError> {
    let start = Instant::now();
    let mut state = new_game(board);
    let mut turns = Vec::new();
    let mut moves = Vec::new();
    while !state.is_terminal() {
        let (_, result) = run_playouts(&state, evaluator, cfg, Some(&mut *noise_rng))?;
        let pi = move_probs(&result.visits, cfg.temperature)?;
        let action = sample_move(&pi, move_rng);
        turns.push((encode_planes(&state), pi, state.to_move()));
        state.apply(action)?;
        moves.push(action);
    }
    let players: Vec<Player> = turns.iter().map(|t| t.2).collect();
    let z = assign_outcomes(&players, state.status());
    let samples = turns
        .into_iter()
        .zip(z)
        .map(|((planes, policy, _), value)| TrainingSample { planes, policy, value })
        .collect();
    Ok(SelfPlayGame {
        samples,
        moves,
        status: state.status(),
        seconds: start.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BufferEntry {
    /// Insertion order across the lifetime of the buffer.
    pub seq: u64,
    pub state: Vec<f32>,
    pub policy: Vec<f32>,
    pub value: f32,
}

/// Bounded FIFO of training entries.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    channels: usize,
    size: usize,
    entries: VecDeque<BufferEntry>,
    next_seq: u64,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, channels: usize, size: usize) -> Self {
        assert!(capacity > 0, "buffer capacity must be positive");
        Self {
            capacity,
            channels,
            size,
            entries: VecDeque::with_capacity(capacity.min(1 << 16)),
            next_seq: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Entries pushed so far, evicted ones included.
    pub fn total_pushed(&self) -> u64 {
        self.next_seq
    }

    /// Changes the bound, evicting the oldest entries if it shrinks.
    pub fn set_capacity(&mut self, capacity: usize) {
        assert!(capacity > 0, "buffer capacity must be positive");
        self.capacity = capacity;
        while self.entries.len() > capacity {
            self.entries.pop_front();
        }
    }

    pub fn push(&mut self, state: Vec<f32>, policy: Vec<f32>, value: f32) -> u64 {
        debug_assert_eq!(state.len(), self.channels * self.size * self.size);
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.entries.push_back(BufferEntry { seq, state, policy, value });
        seq
    }

    /// Oldest first.
    pub fn iter(&self) -> impl Iterator<Item = &BufferEntry> {
        self.entries.iter()
    }

    /// `batch` entries drawn uniformly with replacement.
    pub fn sample_batch(&self, batch: usize, rng: &mut impl Rng) -> Result<LabeledBatch, TrainError> {
        let mut out = LabeledBatch::with_capacity(self.channels, self.size, batch);
        for _ in 0..batch {
            let e = &self.entries[rng.random_range(0..self.entries.len())];
            out.push(&e.state, &e.policy, e.value)?;
        }
        Ok(out)
    }
}

/// Adds the samples of one game under `mode`; returns the number of entries.
pub fn store(buffer: &mut ReplayBuffer, samples: &[TrainingSample], mode: Mode) -> Result<usize, TrainError> {
    let mut added = 0;
    for s in samples {
        for (planes, pi) in expand(&s.planes, &s.policy, mode)? {
            buffer.push(planes.into_data(), pi, s.value);
            added += 1;
        }
    }
    Ok(added)
}

/// Game counts, buffer plan and cadences of the training loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RlSchedule {
    pub games: u64,
    pub games_per_iteration: u64,
    pub steps_per_iteration: u64,
    pub batch_size: usize,
    /// Buffer capacity; the mode's default when unset.
    pub initial_capacity: Option<usize>,
    /// Game count after which `later_capacity` applies.
    pub capacity_switch_game: Option<u64>,
    pub later_capacity: Option<usize>,
    /// Validation and learning-rate adaptation cadence in games.
    pub lr_adapt_every: u64,
    /// Checkpoint cadence in games; a final checkpoint is always written.
    pub checkpoint_every: u64,
}

impl Default for RlSchedule {
    fn default() -> Self {
        Self {
            games: 250,
            games_per_iteration: 1,
            steps_per_iteration: 10,
            batch_size: 512,
            initial_capacity: None,
            capacity_switch_game: None,
            later_capacity: None,
            lr_adapt_every: 100,
            checkpoint_every: 100,
        }
    }
}

impl RlSchedule {
    /// Stage 1: 250 games at the stage-one buffer sizes.
    pub fn stage1() -> Self {
        Self::default()
    }

    /// Stage 2: 5000 games, buffer enlarged after game 1000.
    pub fn stage2(mode: Mode) -> Self {
        Self {
            games: 5000,
            capacity_switch_game: Some(1000),
            later_capacity: Some(match mode {
                Mode::Slap => 5000,
                Mode::Augment8 | Mode::SlapCc => 40_000,
            }),
            ..Self::default()
        }
    }

    pub fn default_capacity(mode: Mode) -> usize {
        match mode {
            Mode::Slap => 1250,
            Mode::Augment8 | Mode::SlapCc => 10_000,
        }
    }

    /// Capacity in force once `games_played` games are finished.
    pub fn capacity_at(&self, mode: Mode, games_played: u64) -> usize {
        match (self.capacity_switch_game, self.later_capacity) {
            (Some(g), Some(c)) if games_played >= g => c,
            _ => self.initial_capacity.unwrap_or(Self::default_capacity(mode)),
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        let positive = [
            self.games_per_iteration,
            self.steps_per_iteration,
            self.batch_size as u64,
            self.lr_adapt_every,
            self.checkpoint_every,
            self.initial_capacity.unwrap_or(1) as u64,
            self.later_capacity.unwrap_or(1) as u64,
        ];
        if positive.contains(&0) {
            return Err(TrainError::InvalidConfig("schedule sizes and cadences must be positive".into()));
        }
        Ok(())
    }
}

/// Halves the learning-rate multiplier when validation loss rises beyond the
/// three-sigma band of its history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrAdaptState {
    pub history: Vec<f64>,
    pub lr_multiplier: f64,
}

impl Default for LrAdaptState {
    fn default() -> Self {
        Self {
            history: Vec::new(),
            lr_multiplier: 1.0,
        }
    }
}

/// History points needed before the rule can fire.
pub const LR_ADAPT_WARMUP: usize = 5;
pub const LR_ADAPT_SIGMAS: f64 = 3.0;

impl LrAdaptState {
    /// Records `loss` and reports whether the multiplier was halved.
    pub fn adapt(&mut self, loss: f64) -> bool {
        let mut halved = false;
        if self.history.len() >= LR_ADAPT_WARMUP {
            let n = self.history.len() as f64;
            let mean = self.history.iter().sum::<f64>() / n;
            let var = self.history.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
            if loss > mean + LR_ADAPT_SIGMAS * var.sqrt() {
                self.lr_multiplier /= 2.0;
                halved = true;
            }
        }
        self.history.push(loss);
        halved
    }
}

/// Everything that defines a self-play run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub mode: Mode,
    pub net: NetConfig,
    pub hyper: TrainHyper,
    pub search: SearchConfig,
    pub schedule: RlSchedule,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Slap,
            net: NetConfig::default(),
            hyper: TrainHyper::default(),
            search: SearchConfig::default(),
            schedule: RlSchedule::default(),
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        self.net.validate()?;
        self.hyper.validate()?;
        self.search.validate()?;
        self.schedule.validate()?;
        if self.net.in_channels != self.mode.in_channels() {
            return Err(TrainError::InvalidConfig(format!(
                "mode {} needs in_channels = {}, got {}",
                self.mode.name(),
                self.mode.in_channels(),
                self.net.in_channels
            )));
        }
        if self.schedule.batch_size != self.hyper.batch_size {
            return Err(TrainError::InvalidConfig("schedule and optimizer batch sizes differ".into()));
        }
        Ok(())
    }

    pub fn board(&self) -> Result<BoardConfig, TrainError> {
        Ok(BoardConfig::new(self.net.board_size)?)
    }
}

/// One line of `metrics.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationMetrics {
    /// Games finished, this iteration's included.
    pub game: u64,
    pub moves: usize,
    pub winner: String,
    pub entries_added: usize,
    pub buffer_size: usize,
    pub buffer_capacity: usize,
    pub train_steps: u64,
    /// Optimizer steps taken over the whole run.
    pub step: u64,
    pub loss: Option<f64>,
    pub value_loss: Option<f64>,
    pub policy_loss: Option<f64>,
    pub entropy: Option<f64>,
    pub lr_multiplier: f64,
    pub validation_loss: Option<f64>,
}

/// One line of `timing.jsonl`, kept apart so the metrics stay reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub game: u64,
    pub seconds_per_move: f64,
}

/// Counters persisted next to each checkpoint for resuming.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResumeState {
    pub games: u64,
    pub step: u64,
    pub adapt: LrAdaptState,
}

pub fn status_name(status: GameStatus) -> &'static str {
    match status {
        GameStatus::Win(Player::Black) => "black",
        GameStatus::Win(Player::White) => "white",
        GameStatus::Draw => "draw",
        GameStatus::Ongoing => "ongoing",
    }
}

pub struct Pipeline {
    pub cfg: PipelineConfig,
    pub net: Network,
    trainer: Trainer,
    pub buffer: ReplayBuffer,
    pub adapt: LrAdaptState,
    games: u64,
    step_offset: u64,
    move_rng: ChaCha8Rng,
    noise_rng: ChaCha8Rng,
    sample_rng: ChaCha8Rng,
    validation: Option<LabeledBatch>,
    last_game: Option<SelfPlayGame>,
}

impl Pipeline {
    /// `validation`, if given, must be in the frame of `cfg.mode`; it drives
    /// the learning-rate adaptation.
    pub fn new(cfg: PipelineConfig, validation: Option<LabeledBatch>) -> Result<Self, TrainError> {
        cfg.validate()?;
        let net = Network::new(cfg.net.clone(), sub_seed(cfg.seed, names::NET_INIT))?;
        Self::with_network(cfg, net, validation, None)
    }

    /// Continues from a checkpoint written by [`Pipeline::run`]. The buffer
    /// and optimizer moments start empty; game and step counters continue.
    pub fn resume(
        cfg: PipelineConfig,
        checkpoint_path: &Path,
        validation: Option<LabeledBatch>,
    ) -> Result<Self, TrainError> {
        cfg.validate()?;
        let ckpt = checkpoint::load_expecting(checkpoint_path, &cfg.net)?;
        let state: ResumeState = serde_json::from_slice(&fs::read(checkpoint_path.with_extension("json"))?)?;
        if state.step != ckpt.step {
            return Err(TrainError::Format("checkpoint and resume state disagree on the step".into()));
        }
        Self::with_network(cfg, ckpt.net, validation, Some(state))
    }

    fn with_network(
        cfg: PipelineConfig,
        net: Network,
        validation: Option<LabeledBatch>,
        resume: Option<ResumeState>,
    ) -> Result<Self, TrainError> {
        if let Some(v) = &validation {
            if v.channels != cfg.mode.in_channels() || v.size != cfg.net.board_size {
                return Err(TrainError::InvalidConfig("validation set shape does not match the network".into()));
            }
        }
        let resume = resume.unwrap_or(ResumeState {
            games: 0,
            step: 0,
            adapt: LrAdaptState::default(),
        });
        let mut hyper = cfg.hyper.clone();
        hyper.lr_multiplier = resume.adapt.lr_multiplier;
        let trainer = Trainer::new(hyper, &net, sub_seed(cfg.seed, names::DROPOUT))?;
        // Streams continue per game so a resumed run stays seeded.
        let stream = |name| {
            let mut r = ChaCha8Rng::seed_from_u64(sub_seed(cfg.seed, name));
            r.set_stream(resume.games);
            r
        };
        let buffer = ReplayBuffer::new(
            cfg.schedule.capacity_at(cfg.mode, resume.games),
            cfg.mode.in_channels(),
            cfg.net.board_size,
        );
        Ok(Self {
            move_rng: stream(names::GAME),
            noise_rng: stream(names::DIRICHLET),
            sample_rng: stream(names::SAMPLING),
            buffer,
            trainer,
            net,
            adapt: resume.adapt,
            games: resume.games,
            step_offset: resume.step,
            validation,
            last_game: None,
            cfg,
        })
    }

    pub fn games_played(&self) -> u64 {
        self.games
    }

    /// Optimizer steps over the whole run, resumed ones included.
    pub fn step(&self) -> u64 {
        self.step_offset + self.trainer.step()
    }

    pub fn last_game(&self) -> Option<&SelfPlayGame> {
        self.last_game.as_ref()
    }

    pub fn validation_loss(&self) -> Result<Option<f64>, TrainError> {
        match &self.validation {
            Some(v) => Ok(Some(self.net.evaluate_loss(v)?.loss)),
            None => Ok(None),
        }
    }

    /// Self-play games for one iteration, then training if the buffer holds
    /// at least a batch.
    pub fn policy_iteration(&mut self) -> Result<IterationMetrics, TrainError> {
        let board = self.cfg.board()?;
        let mut entries_added = 0;
        let mut moves = 0;
        let mut status = GameStatus::Ongoing;
        for _ in 0..self.cfg.schedule.games_per_iteration {
            let game = {
                let mut eval = NetEvaluator::new(&self.net, self.cfg.mode)?;
                run_selfplay_game(board, &mut eval, &self.cfg.search, &mut self.move_rng, &mut self.noise_rng)?
            };
            self.games += 1;
            self.buffer.set_capacity(self.cfg.schedule.capacity_at(self.cfg.mode, self.games));
            entries_added += store(&mut self.buffer, &game.samples, self.cfg.mode)?;
            moves += game.moves.len();
            status = game.status;
            self.last_game = Some(game);
        }

        let mut sums = [0.0f64; 4];
        let mut steps = 0;
        if self.buffer.len() >= self.cfg.schedule.batch_size {
            for _ in 0..self.cfg.schedule.steps_per_iteration {
                let batch = self.buffer.sample_batch(self.cfg.schedule.batch_size, &mut self.sample_rng)?;
                let m = self.trainer.train_step(&mut self.net, &batch)?;
                for (s, v) in sums.iter_mut().zip([m.loss, m.value_loss, m.policy_loss, m.entropy]) {
                    *s += v;
                }
                steps += 1;
            }
        }
        let mean = |i: usize| (steps > 0).then(|| sums[i] / steps as f64);

        let mut validation_loss = None;
        if self.games % self.cfg.schedule.lr_adapt_every == 0 {
            validation_loss = self.validation_loss()?;
            if let Some(l) = validation_loss {
                self.adapt.adapt(l);
                self.trainer.hyper.lr_multiplier = self.adapt.lr_multiplier;
            }
        }
        Ok(IterationMetrics {
            game: self.games,
            moves,
            winner: status_name(status).into(),
            entries_added,
            buffer_size: self.buffer.len(),
            buffer_capacity: self.buffer.capacity(),
            train_steps: steps,
            step: self.step(),
            loss: mean(0),
            value_loss: mean(1),
            policy_loss: mean(2),
            entropy: mean(3),
            lr_multiplier: self.adapt.lr_multiplier,
            validation_loss,
        })
    }

    pub fn checkpoint_path(dir: &Path, step: u64) -> PathBuf {
        dir.join("checkpoints").join(format!("step-{step:08}.bin"))
    }

    /// Writes the network and the resume counters into `dir/checkpoints`.
    pub fn save_checkpoint(&self, dir: &Path) -> Result<PathBuf, TrainError> {
        let path = Self::checkpoint_path(dir, self.step());
        fs::create_dir_all(path.parent().expect("has a parent"))?;
        checkpoint::save(&path, &self.net, &self.trainer.hyper, self.step())?;
        let state = ResumeState {
            games: self.games,
            step: self.step(),
            adapt: self.adapt.clone(),
        };
        fs::write(path.with_extension("json"), serde_json::to_vec_pretty(&state)?)?;
        Ok(path)
    }

    /// Runs until `cfg.schedule.games` games are finished, appending to
    /// `metrics.jsonl` and `timing.jsonl` under `dir` and checkpointing on
    /// the schedule's cadence. `observe` runs after every iteration.
    pub fn run(
        &mut self,
        dir: Option<&Path>,
        mut observe: impl FnMut(&Pipeline, &IterationMetrics) -> Result<(), TrainError>,
    ) -> Result<Vec<IterationMetrics>, TrainError> {
        let mut writers = match dir {
            Some(d) => {
                fs::create_dir_all(d)?;
                let open = |name: &str| -> Result<BufWriter<File>, TrainError> {
                    Ok(BufWriter::new(OpenOptions::new().create(true).append(true).open(d.join(name))?))
                };
                Some((open("metrics.jsonl")?, open("timing.jsonl")?))
            }
            None => None,
        };
        let mut all = Vec::new();
        let mut last_ckpt = None;
        while self.games < self.cfg.schedule.games {
            let m = self.policy_iteration()?;
            if let (Some((metrics, timing)), Some(game)) = (writers.as_mut(), self.last_game.as_ref()) {
                serde_json::to_writer(&mut *metrics, &m)?;
                metrics.write_all(b"\n")?;
                let t = TimingRecord {
                    game: m.game,
                    seconds_per_move: game.seconds / game.moves.len().max(1) as f64,
                };
                serde_json::to_writer(&mut *timing, &t)?;
                timing.write_all(b"\n")?;
            }
            if let Some(d) = dir {
                if self.games % self.cfg.schedule.checkpoint_every == 0 {
                    last_ckpt = Some(self.games);
                    self.save_checkpoint(d)?;
                }
            }
            observe(self, &m)?;
            all.push(m);
        }
        if let (Some((metrics, timing)), Some(d)) = (writers.as_mut(), dir) {
            metrics.flush()?;
            timing.flush()?;
            if last_ckpt != Some(self.games) {
                self.save_checkpoint(d)?;
            }
        }
        Ok(all)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lr_rule_examples() {
        let mut flat = LrAdaptState::default();
        for _ in 0..10 {
            flat.adapt(2.0);
        }
        assert!(!flat.adapt(2.0));
        assert_eq!(flat.lr_multiplier, 1.0);

        let mut s = LrAdaptState::default();
        for x in [1.9, 2.1, 1.9, 2.1, 1.9, 2.1] {
            s.adapt(x);
        }
        assert!(s.adapt(2.5));
        assert_eq!(s.lr_multiplier, 0.5);

        let mut warm = LrAdaptState::default();
        for x in [1.0, 1.0, 1.0, 1.0] {
            assert!(!warm.adapt(x));
        }
        assert!(!warm.adapt(100.0));
    }

    #[test]
    fn fifo_eviction_by_sequence() {
        let mut b = ReplayBuffer::new(1250, 1, 2);
        for i in 0..1300 {
            b.push(vec![i as f32; 4], vec![0.25; 4], 0.0);
        }
        assert_eq!(b.len(), 1250);
        let seqs: Vec<u64> = b.iter().map(|e| e.seq).collect();
        assert_eq!(seqs, (50..1300).collect::<Vec<_>>());
        b.set_capacity(1000);
        assert_eq!(b.iter().next().unwrap().seq, 300);
    }

    #[test]
    fn capacity_plan() {
        let s = RlSchedule::stage2(Mode::Slap);
        assert_eq!(s.capacity_at(Mode::Slap, 999), 1250);
        assert_eq!(s.capacity_at(Mode::Slap, 1000), 5000);
        let s = RlSchedule::stage2(Mode::Augment8);
        assert_eq!(s.capacity_at(Mode::Augment8, 0), 10_000);
        assert_eq!(s.capacity_at(Mode::Augment8, 1000), 40_000);
    }

    #[test]
    fn outcomes_follow_the_player_to_move() {
        let p = [Player::Black, Player::White, Player::Black];
        assert_eq!(assign_outcomes(&p, GameStatus::Win(Player::Black)), vec![1.0, -1.0, 1.0]);
        assert_eq!(assign_outcomes(&p, GameStatus::Draw), vec![0.0; 3]);
    }
}

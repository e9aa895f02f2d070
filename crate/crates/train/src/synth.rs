//! Synthetic positions for the supervised experiment: about-to-win states
//! built from every five-cell line, mixed with purely random states.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slap_core::{encode_planes, BoardConfig, Cell, GameState, Player, WIN_LENGTH};
use slap_mcts::Mode;
use slap_net::LabeledBatch;

use crate::error::TrainError;
use crate::storage::{expand, single_view};

/// Random (non about-to-win) states in one mixed set.
pub const RANDOM_PER_SET: usize = 1000;
/// Stones per player in every synthetic state.
pub const STONES_PER_SIDE: usize = 4;
/// Share of all states reserved for validation.
pub const VALIDATION_FRACTION: f64 = 0.15;

/// Every horizontal, vertical and diagonal window of five cells, in that
/// order, each listed from its first cell in row-major order.
pub fn enumerate_win_lines(n: usize) -> Result<Vec<[usize; WIN_LENGTH]>, TrainError> {
    BoardConfig::new(n)?;
    let k = WIN_LENGTH as isize;
    let n = n as isize;
    let mut lines = Vec::new();
    for (dr, dc) in [(0isize, 1isize), (1, 0), (1, 1), (1, -1)] {
        for r in 0..n {
            for c in 0..n {
                let (er, ec) = (r + dr * (k - 1), c + dc * (k - 1));
                if !(0..n).contains(&er) || !(0..n).contains(&ec) {
                    continue;
                }
                let mut line = [0; WIN_LENGTH];
                for (i, cell) in line.iter_mut().enumerate() {
                    let i = i as isize;
                    *cell = ((r + dr * i) * n + c + dc * i) as usize;
                }
                lines.push(line);
            }
        }
    }
    Ok(lines)
}

/// Empty cells where the player to move completes five.
pub fn winning_cells(state: &GameState) -> Vec<usize> {
    let me = state.to_move();
    state
        .empty_cells()
        .into_iter()
        .filter(|&a| state.wins_at(a, me))
        .collect()
}

/// Policy and value targets for a synthetic state.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticLabel {
    pub policy: Vec<f32>,
    pub value: f32,
}

/// With `k` immediate wins: value 1 and `1/k` on each winning cell.
/// Otherwise value 0 and a random distribution over the empty cells
/// (uniform draws, normalized).
pub fn label(state: &GameState, rng: &mut impl Rng) -> SyntheticLabel {
    let cells = state.config().cells();
    let mut policy = vec![0.0f32; cells];
    let wins = winning_cells(state);
    if !wins.is_empty() {
        for &a in &wins {
            policy[a] = 1.0 / wins.len() as f32;
        }
        return SyntheticLabel { policy, value: 1.0 };
    }
    let empty = state.empty_cells();
    let draws: Vec<f64> = empty.iter().map(|_| rng.random::<f64>()).collect();
    let total: f64 = draws.iter().sum();
    for (&a, d) in empty.iter().zip(&draws) {
        policy[a] = (d / total) as f32;
    }
    SyntheticLabel { policy, value: 0.0 }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSample {
    pub state: GameState,
    pub policy: Vec<f32>,
    pub value: f32,
}

fn place(config: BoardConfig, black: &[usize], white: &[usize]) -> GameState {
    let mut cells = vec![Cell::Empty; config.cells()];
    for &b in black {
        cells[b] = Cell::Stone(Player::Black);
    }
    for &w in white {
        cells[w] = Cell::Stone(Player::White);
    }
    GameState::from_cells(config, cells, None).expect("equal stone counts, black to move")
}

/// One state per (line, removed stone): the other four line cells black,
/// four white stones uniformly on cells off the line. Black to move.
pub fn gen_about_to_win_set(config: BoardConfig, rng: &mut impl Rng) -> Vec<GameState> {
    let lines = enumerate_win_lines(config.size()).expect("valid config");
    let mut out = Vec::with_capacity(lines.len() * WIN_LENGTH);
    for line in &lines {
        let off_line: Vec<usize> = (0..config.cells()).filter(|c| !line.contains(c)).collect();
        for removed in 0..WIN_LENGTH {
            let black: Vec<usize> = (0..WIN_LENGTH)
                .filter(|&i| i != removed)
                .map(|i| line[i])
                .collect();
            let white: Vec<usize> = off_line
                .choose_multiple(rng, STONES_PER_SIDE)
                .copied()
                .collect();
            out.push(place(config, &black, &white));
        }
    }
    out
}

/// Four stones per side on uniformly chosen distinct cells.
pub fn gen_random_states(config: BoardConfig, count: usize, rng: &mut impl Rng) -> Vec<GameState> {
    let all: Vec<usize> = (0..config.cells()).collect();
    (0..count)
        .map(|_| {
            let cells: Vec<usize> = all
                .choose_multiple(rng, 2 * STONES_PER_SIDE)
                .copied()
                .collect();
            place(config, &cells[..STONES_PER_SIDE], &cells[STONES_PER_SIDE..])
        })
        .collect()
}

/// One labelled mixed set: the about-to-win states followed by
/// [`RANDOM_PER_SET`] random ones, all drawn from `seed`.
pub fn gen_mixed_set(config: BoardConfig, seed: u64) -> Vec<SyntheticSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut states = gen_about_to_win_set(config, &mut rng);
    states.extend(gen_random_states(config, RANDOM_PER_SET, &mut rng));
    states
        .into_iter()
        .map(|state| {
            let l = label(&state, &mut rng);
            SyntheticSample {
                state,
                policy: l.policy,
                value: l.value,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub board_size: usize,
    pub seeds: Vec<u64>,
    pub split_seed: u64,
    pub train: Vec<SyntheticSample>,
    pub validation: Vec<SyntheticSample>,
}

/// Number of validation states for `total` states.
pub fn validation_count(total: usize) -> usize {
    (total as f64 * VALIDATION_FRACTION).round() as usize
}

/// Concatenates one mixed set per seed, shuffles globally with `split_seed`
/// and reserves the first 15% for validation.
pub fn build_dataset(config: BoardConfig, seeds: &[u64], split_seed: u64) -> Result<Dataset, TrainError> {
    let mut distinct = seeds.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if seeds.is_empty() || distinct.len() != seeds.len() {
        return Err(TrainError::InvalidConfig("dataset seeds must be distinct and non-empty".into()));
    }
    let mut all: Vec<SyntheticSample> = seeds.iter().flat_map(|&s| gen_mixed_set(config, s)).collect();
    all.shuffle(&mut ChaCha8Rng::seed_from_u64(split_seed));
    let train = all.split_off(validation_count(all.len()));
    Ok(Dataset {
        board_size: config.size(),
        seeds: seeds.to_vec(),
        split_seed,
        train,
        validation: all,
    })
}

impl Dataset {
    /// Keeps only the first `size` training states; validation is unchanged.
    pub fn with_train_size(mut self, size: usize) -> Result<Self, TrainError> {
        if size == 0 || size > self.train.len() {
            return Err(TrainError::InvalidConfig(format!(
                "train size {size} outside 1..={}",
                self.train.len()
            )));
        }
        self.train.truncate(size);
        Ok(self)
    }
}

/// Training store: every sample expanded per `mode`.
pub fn training_batch(samples: &[SyntheticSample], mode: Mode) -> Result<LabeledBatch, TrainError> {
    let size = samples.first().map_or(8, |s| s.state.size());
    let per = crate::storage::entries_per_sample(mode);
    let mut batch = LabeledBatch::with_capacity(mode.in_channels(), size, samples.len() * per);
    for s in samples {
        for (planes, pi) in expand(&encode_planes(&s.state), &s.policy, mode)? {
            batch.push(planes.data(), &pi, s.value)?;
        }
    }
    Ok(batch)
}

/// Evaluation store: one input per sample in the network's frame.
pub fn evaluation_batch(samples: &[SyntheticSample], mode: Mode) -> Result<LabeledBatch, TrainError> {
    let size = samples.first().map_or(8, |s| s.state.size());
    let mut batch = LabeledBatch::with_capacity(mode.in_channels(), size, samples.len());
    for s in samples {
        let (planes, pi) = single_view(&encode_planes(&s.state), &s.policy, mode)?;
        batch.push(planes.data(), &pi, s.value)?;
    }
    Ok(batch)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_counts() {
        assert_eq!(enumerate_win_lines(8).unwrap().len(), 96);
        assert_eq!(enumerate_win_lines(5).unwrap().len(), 12);
        assert!(enumerate_win_lines(4).is_err());
    }

    #[test]
    fn open_and_blocked_fours() {
        let cfg = BoardConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        // Open four on row 3, columns 2..=5.
        let open = place(cfg, &[26, 27, 28, 29], &[0, 7, 56, 63]);
        let l = label(&open, &mut rng);
        assert_eq!(l.value, 1.0);
        assert_eq!((l.policy[25], l.policy[30]), (0.5, 0.5));
        assert_eq!(l.policy.iter().filter(|&&p| p > 0.0).count(), 2);
        // Blocked by white at column 1.
        let blocked = place(cfg, &[26, 27, 28, 29], &[25, 7, 56, 63]);
        let l = label(&blocked, &mut rng);
        assert_eq!(l.policy[30], 1.0);
    }

    #[test]
    fn random_label_covers_empty_cells() {
        let cfg = BoardConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = place(cfg, &[0, 9, 18, 40], &[1, 2, 3, 50]);
        let l = label(&s, &mut rng);
        assert_eq!(l.value, 0.0);
        assert!((l.policy.iter().map(|&p| p as f64).sum::<f64>() - 1.0).abs() < 1e-6);
        for (p, c) in l.policy.iter().zip(s.cells()) {
            assert_eq!(*p > 0.0, c.is_empty());
        }
    }
}

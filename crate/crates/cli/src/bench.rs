//! `canon-bench`: cost of canonicalizing against augmenting, and stored size.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use slap_core::{augment_8, encode_planes, new_game, slap, transform_policy, BoardConfig, PlaneStack};
use slap_train::seeds::{names, sub_seed};

use crate::config::RunConfig;
use crate::BenchArgs;

#[derive(Debug, Serialize)]
pub struct BenchReport {
    pub n_states: usize,
    pub seed: u64,
    pub slap_seconds: f64,
    pub augment_seconds: f64,
    pub slap_states_per_second: Option<f64>,
    pub augment_states_per_second: Option<f64>,
    /// Canonicalization time over augmentation time.
    pub time_ratio: Option<f64>,
    pub slap_entries: usize,
    pub augment_entries: usize,
    pub bytes_per_entry: usize,
    pub slap_bytes: usize,
    pub augment_bytes: usize,
}

/// Positions reached by a uniformly random number of random moves.
fn random_positions(board: BoardConfig, n: usize, rng: &mut impl Rng) -> Vec<PlaneStack> {
    (0..n)
        .map(|_| {
            let mut state = new_game(board);
            let plies = rng.random_range(0..board.cells());
            for _ in 0..plies {
                if state.is_terminal() {
                    break;
                }
                let empty = state.empty_cells();
                state.apply(empty[rng.random_range(0..empty.len())]).expect("empty cell");
            }
            encode_planes(&state)
        })
        .collect()
}

pub fn measure(board: BoardConfig, n_states: usize, seed: u64) -> BenchReport {
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, names::DATASET));
    let states = random_positions(board, n_states, &mut rng);
    let cells = board.cells();
    let policy = vec![1.0 / cells as f32; cells];

    let start = Instant::now();
    let mut slap_entries = 0;
    for planes in &states {
        let s = slap(planes);
        let pi = transform_policy(&policy, board.size(), s.transform).expect("policy fits the board");
        std::hint::black_box((&s.canonical, &pi));
        slap_entries += 1;
    }
    let slap_seconds = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let mut augment_entries = 0;
    for planes in &states {
        let all = augment_8(planes, &policy).expect("policy fits the board");
        augment_entries += std::hint::black_box(all).len();
    }
    let augment_seconds = start.elapsed().as_secs_f64();

    // Planes, policy and value, as f32.
    let channels = states.first().map_or(slap_core::BASE_CHANNELS, |p| p.channels());
    let bytes_per_entry = (channels * cells + cells + 1) * std::mem::size_of::<f32>();
    let rate = |secs: f64| (n_states > 0 && secs > 0.0).then(|| n_states as f64 / secs);
    BenchReport {
        n_states,
        seed,
        slap_seconds,
        augment_seconds,
        slap_states_per_second: rate(slap_seconds),
        augment_states_per_second: rate(augment_seconds),
        time_ratio: (n_states > 0 && augment_seconds > 0.0).then(|| slap_seconds / augment_seconds),
        slap_entries,
        augment_entries,
        bytes_per_entry,
        slap_bytes: slap_entries * bytes_per_entry,
        augment_bytes: augment_entries * bytes_per_entry,
    }
}

pub fn run(cfg: RunConfig, args: BenchArgs) -> anyhow::Result<()> {
    let report = measure(cfg.board()?, args.n_states, cfg.seed);
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stored_entries_are_one_to_eight() {
        let r = measure(BoardConfig::default(), 50, 3);
        assert_eq!(r.slap_entries, 50);
        assert_eq!(r.augment_entries, 8 * r.slap_entries);
        assert_eq!(r.augment_bytes, 8 * r.slap_bytes);
        assert_eq!(r.bytes_per_entry, (4 * 64 + 64 + 1) * 4);
    }

    #[test]
    fn empty_report() {
        let r = measure(BoardConfig::default(), 0, 3);
        assert_eq!((r.slap_entries, r.augment_entries, r.slap_bytes), (0, 0, 0));
        assert!(r.time_ratio.is_none() && r.slap_states_per_second.is_none());
    }
}

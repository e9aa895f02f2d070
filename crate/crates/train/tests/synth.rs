use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use slap_core::{
    encode_planes, slap, transform_policy, apply_transform, BoardConfig, Cell, D4Transform,
    GameState, GameStatus, Player,
};
use slap_mcts::Mode;
use slap_train::datafile::{read_dataset, write_dataset};
use slap_train::synth::{
    build_dataset, enumerate_win_lines, gen_about_to_win_set, gen_mixed_set, label,
    training_batch, RANDOM_PER_SET,
};

const SEEDS: [u64; 8] = [11, 12, 13, 14, 15, 16, 17, 18];

/// Brute force: put a black stone on each empty cell and scan the whole
/// board for a finished line.
fn oracle_wins(state: &GameState) -> BTreeSet<usize> {
    (0..state.config().cells())
        .filter(|&a| state.cell(a).is_empty())
        .filter(|&a| {
            let mut cells = state.cells().to_vec();
            cells[a] = Cell::Stone(Player::Black);
            let s = GameState::from_cells(state.config(), cells, Some(a)).unwrap();
            s.full_scan_status() == GameStatus::Win(Player::Black)
        })
        .collect()
}

#[test]
fn set_and_split_sizes_are_exact() {
    let cfg = BoardConfig::default();
    assert_eq!(enumerate_win_lines(8).unwrap().len(), 96);
    let set = gen_mixed_set(cfg, 1);
    assert_eq!(set.len(), 480 + RANDOM_PER_SET);
    let ds = build_dataset(cfg, &SEEDS, 3).unwrap();
    assert_eq!(ds.train.len() + ds.validation.len(), 11_840);
    assert_eq!(ds.validation.len(), 1_776);
    assert_eq!(ds.train.len(), 10_064);
    assert_eq!(training_batch(&ds.train, Mode::Augment8).unwrap().len(), 80_512);
    assert_eq!(training_batch(&ds.train, Mode::Slap).unwrap().len(), 10_064);
}

#[test]
fn about_to_win_labels_match_brute_force() {
    let cfg = BoardConfig::default();
    let set = gen_mixed_set(cfg, 5);
    for s in &set[..480] {
        assert_eq!(s.value, 1.0);
        assert_eq!(s.state.to_move(), Player::Black);
        assert_eq!(s.state.stone_count(Player::Black), 4);
        assert_eq!(s.state.stone_count(Player::White), 4);
        let support: BTreeSet<usize> = (0..64).filter(|&a| s.policy[a] > 0.0).collect();
        let wins = oracle_wins(&s.state);
        assert!(!wins.is_empty());
        assert_eq!(support, wins);
        for &a in &support {
            assert_eq!(s.policy[a], 1.0 / wins.len() as f32);
        }
    }
    for s in &set[480..] {
        let wins = oracle_wins(&s.state);
        assert_eq!(s.value == 1.0, !wins.is_empty());
        let total: f64 = s.policy.iter().map(|&p| p as f64).sum();
        assert!((total - 1.0).abs() < 1e-5);
    }
}

#[test]
fn seeds_change_only_white_stones() {
    let cfg = BoardConfig::default();
    let a = gen_about_to_win_set(cfg, &mut ChaCha8Rng::seed_from_u64(1));
    let b = gen_about_to_win_set(cfg, &mut ChaCha8Rng::seed_from_u64(2));
    assert_eq!(a.len(), 480);
    let black = |s: &GameState| -> Vec<bool> { s.cells().iter().map(|c| c.is(Player::Black)).collect() };
    let white = |s: &GameState| -> Vec<bool> { s.cells().iter().map(|c| c.is(Player::White)).collect() };
    assert!(a.iter().zip(&b).all(|(x, y)| black(x) == black(y)));
    assert!(a.iter().zip(&b).any(|(x, y)| white(x) != white(y)));
}

#[test]
fn generation_is_deterministic() {
    let cfg = BoardConfig::default();
    assert_eq!(gen_mixed_set(cfg, 9), gen_mixed_set(cfg, 9));
    let s = &gen_mixed_set(cfg, 9)[100];
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert_eq!(label(&s.state, &mut rng), label(&s.state, &mut rng));
    assert!(build_dataset(cfg, &[1, 1], 0).is_err());
}

#[test]
fn canonical_store_shares_one_element_with_raw_sample() {
    let ds = build_dataset(BoardConfig::default(), &SEEDS, 3).unwrap();
    let canon = training_batch(&ds.train[..300], Mode::Slap).unwrap();
    for (i, s) in ds.train[..300].iter().enumerate() {
        let raw = encode_planes(&s.state);
        let g = D4Transform::ALL
            .into_iter()
            .find(|&g| apply_transform(&raw, g).data() == canon.state(i))
            .expect("canonical planes are a D4 image of the raw planes");
        assert_eq!(transform_policy(&s.policy, 8, g).unwrap(), canon.policy(i));
        assert_eq!(canon.values[i], s.value);
        let planes = slap_core::PlaneStack::from_vec(4, 8, canon.state(i).to_vec()).unwrap();
        assert_eq!(slap(&planes).transform, D4Transform::IDENTITY);
    }
}

#[test]
fn dataset_files_round_trip() {
    let ds = build_dataset(BoardConfig::default(), &SEEDS, 3).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_dataset(dir.path(), &ds).unwrap();
    assert_eq!((manifest.total, manifest.train, manifest.validation), (11_840, 10_064, 1_776));
    assert_eq!(read_dataset(dir.path()).unwrap(), ds);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn labels_are_valid_distributions(seed in 0u64..1_000) {
        for s in gen_mixed_set(BoardConfig::default(), seed).iter().step_by(37) {
            let total: f64 = s.policy.iter().map(|&p| p as f64).sum();
            prop_assert!((total - 1.0).abs() < 1e-5);
            for (p, c) in s.policy.iter().zip(s.state.cells()) {
                prop_assert!(c.is_empty() || *p == 0.0);
            }
        }
    }
}

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use slap_core::{apply_transform, slap, transform_policy, BoardConfig, D4Transform, GameStatus, PlaneStack, Player};
use slap_mcts::{Mode, NetEvaluator, SearchConfig};
use slap_net::{NetConfig, Network, TrainHyper};
use slap_train::selfplay::{
    run_selfplay_game, store, Pipeline, PipelineConfig, ReplayBuffer, RlSchedule, SelfPlayGame,
};
use slap_train::synth::{build_dataset, evaluation_batch};

fn tiny_net(mode: Mode) -> NetConfig {
    NetConfig {
        in_channels: mode.in_channels(),
        common_filters: vec![4, 4],
        policy_filters: 2,
        value_filters: 1,
        value_hidden: 8,
        ..NetConfig::default()
    }
}

fn game(mode: Mode, seed: u64) -> SelfPlayGame {
    let net = Network::new(tiny_net(mode), seed).unwrap();
    let mut eval = NetEvaluator::new(&net, mode).unwrap();
    let cfg = SearchConfig {
        n_playouts: 16,
        ..SearchConfig::default()
    };
    run_selfplay_game(
        BoardConfig::default(),
        &mut eval,
        &cfg,
        &mut ChaCha8Rng::seed_from_u64(seed),
        &mut ChaCha8Rng::seed_from_u64(seed + 100),
    )
    .unwrap()
}

fn planes_of(data: &[f32], channels: usize) -> PlaneStack {
    PlaneStack::from_vec(channels, 8, data.to_vec()).unwrap()
}

#[test]
fn outcomes_and_lengths() {
    for seed in 0..6 {
        let g = game(Mode::Augment8, seed);
        assert!(g.moves.len() <= 64);
        assert_eq!(g.samples.len(), g.moves.len());
        assert_ne!(g.status, GameStatus::Ongoing);
        // Black moves on even plies; the colour plane says so too.
        for (i, s) in g.samples.iter().enumerate() {
            let black = s.planes.plane(3)[0] == 1.0;
            assert_eq!(black, i % 2 == 0);
            let expected = match g.status {
                GameStatus::Win(Player::Black) => if black { 1.0 } else { -1.0 },
                GameStatus::Win(Player::White) => if black { -1.0 } else { 1.0 },
                _ => 0.0,
            };
            assert_eq!(s.value, expected);
            let occupied = |c: usize| s.planes.plane(0)[c] + s.planes.plane(1)[c] > 0.0;
            assert!((0..64).all(|c| !occupied(c) || s.policy[c] == 0.0));
            assert!((s.policy.iter().sum::<f32>() - 1.0).abs() < 1e-5);
        }
        // Per side the outcomes sum to +L, -L or 0.
        let black_sum: f32 = g.samples.iter().step_by(2).map(|s| s.value).sum();
        let white_sum: f32 = g.samples.iter().skip(1).step_by(2).map(|s| s.value).sum();
        let (lb, lw) = (g.samples.len().div_ceil(2) as f32, (g.samples.len() / 2) as f32);
        match g.status {
            GameStatus::Win(Player::Black) => assert_eq!((black_sum, white_sum), (lb, -lw)),
            GameStatus::Win(Player::White) => assert_eq!((black_sum, white_sum), (-lb, lw)),
            _ => assert_eq!((black_sum, white_sum), (0.0, 0.0)),
        }
    }
}

#[test]
fn storage_modes() {
    let g = game(Mode::Slap, 3);
    let n = g.samples.len();
    let mut aug = ReplayBuffer::new(100_000, 4, 8);
    let mut canon = ReplayBuffer::new(100_000, 4, 8);
    let mut cc = ReplayBuffer::new(100_000, 8, 8);
    assert_eq!(store(&mut aug, &g.samples, Mode::Augment8).unwrap(), 8 * n);
    assert_eq!(store(&mut canon, &g.samples, Mode::Slap).unwrap(), n);
    assert_eq!(store(&mut cc, &g.samples, Mode::SlapCc).unwrap(), 8 * n);
    assert_eq!(aug.len(), 8 * canon.len());

    for e in canon.iter() {
        assert_eq!(slap(&planes_of(&e.state, 4)).transform, D4Transform::IDENTITY);
    }
    // The eight entries of every turn collapse to the one canonical entry.
    // A symmetric position fixes its planes under several elements, so its
    // canonical policy is only defined up to those elements.
    let aug: Vec<_> = aug.iter().collect();
    for (turn, c) in aug.chunks(8).zip(canon.iter()) {
        let canonical = planes_of(&c.state, 4);
        let stabilizer: Vec<D4Transform> = D4Transform::ALL
            .into_iter()
            .filter(|&g| apply_transform(&canonical, g) == canonical)
            .collect();
        for e in turn {
            let s = slap(&planes_of(&e.state, 4));
            assert_eq!(s.canonical.data(), &c.state[..]);
            let pi = transform_policy(&e.policy, 8, s.transform).unwrap();
            assert!(stabilizer
                .iter()
                .any(|&h| transform_policy(&pi, 8, h).unwrap() == c.policy));
            if stabilizer.len() == 1 {
                assert_eq!(pi, c.policy);
            }
            assert_eq!(e.value, c.value);
        }
    }
}

fn pipeline_config(mode: Mode, games: u64) -> PipelineConfig {
    PipelineConfig {
        mode,
        net: tiny_net(mode),
        hyper: TrainHyper {
            batch_size: 32,
            ..TrainHyper::default()
        },
        search: SearchConfig {
            n_playouts: 12,
            ..SearchConfig::default()
        },
        schedule: RlSchedule {
            games,
            steps_per_iteration: 2,
            batch_size: 32,
            initial_capacity: Some(400),
            lr_adapt_every: 2,
            checkpoint_every: 3,
            ..RlSchedule::default()
        },
        seed: 21,
    }
}

fn validation(mode: Mode) -> slap_net::LabeledBatch {
    let ds = build_dataset(BoardConfig::default(), &[1, 2], 0).unwrap();
    evaluation_batch(&ds.validation[..64], mode).unwrap()
}

#[test]
fn pipeline_trains_once_the_buffer_holds_a_batch() {
    let mut p = Pipeline::new(pipeline_config(Mode::Slap, 6), Some(validation(Mode::Slap))).unwrap();
    let mut seen_untrained = false;
    for m in p.run(None, |_, _| Ok(())).unwrap() {
        if m.buffer_size < 32 {
            assert_eq!(m.train_steps, 0);
            seen_untrained = true;
        } else {
            assert_eq!(m.train_steps, 2);
            assert!(m.loss.unwrap().is_finite());
        }
        assert_eq!(m.validation_loss.is_some(), m.game % 2 == 0);
        assert!(m.buffer_size <= 400);
    }
    assert!(seen_untrained);
    assert_eq!(p.games_played(), 6);
}

#[test]
fn run_directory_is_reproducible_and_resumable() {
    let run = |games| {
        let dir = tempfile::tempdir().unwrap();
        let mut p = Pipeline::new(pipeline_config(Mode::Augment8, games), Some(validation(Mode::Augment8))).unwrap();
        p.run(Some(dir.path()), |_, _| Ok(())).unwrap();
        (dir, p.step())
    };
    let (a, step) = run(5);
    let (b, _) = run(5);
    let metrics = |d: &tempfile::TempDir| std::fs::read(d.path().join("metrics.jsonl")).unwrap();
    assert_eq!(metrics(&a), metrics(&b));
    assert_eq!(String::from_utf8(metrics(&a)).unwrap().lines().count(), 5);
    assert_eq!(std::fs::read_to_string(a.path().join("timing.jsonl")).unwrap().lines().count(), 5);

    let ckpt = Pipeline::checkpoint_path(a.path(), step);
    assert!(ckpt.exists());
    let mut resumed = Pipeline::resume(pipeline_config(Mode::Augment8, 7), &ckpt, None).unwrap();
    assert_eq!((resumed.games_played(), resumed.step()), (5, step));
    let more = resumed.run(None, |_, _| Ok(())).unwrap();
    assert_eq!(more.len(), 2);
    assert_eq!(more[0].game, 6);
    assert!(more.last().unwrap().step >= step);
}

#[test]
fn mismatched_mode_and_channels_are_rejected() {
    let mut cfg = pipeline_config(Mode::SlapCc, 1);
    cfg.net.in_channels = 4;
    assert!(Pipeline::new(cfg, None).is_err());
    assert!(Pipeline::new(pipeline_config(Mode::SlapCc, 1), Some(validation(Mode::Slap))).is_err());
}

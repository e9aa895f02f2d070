use proptest::prelude::*;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use slap_core::symmetry::transform_state;
use slap_core::{
    apply_transform, augment_8, compose, diagram, encode_planes, extend_planes_cc, inverse,
    map_policy_back, new_game, slap, slap_cc, transform_policy, BoardConfig, CcShift, D4Transform,
    PlaneStack,
};

/// Materializes a variant with explicit coordinate arithmetic, independent of
/// the gather tables used by the library.
fn variant_by_points(p: &PlaneStack, g: D4Transform) -> Vec<f32> {
    let n = p.size();
    let mut out = vec![0.0; p.data().len()];
    for ch in 0..p.channels() {
        for r in 0..n {
            for c in 0..n {
                let (mut rr, mut cc) = (r, c);
                for _ in 0..g.rotation() {
                    (rr, cc) = (n - 1 - cc, rr);
                }
                if g.flip() {
                    cc = n - 1 - cc;
                }
                out[(ch * n + rr) * n + cc] = p.get(ch, r, c);
            }
        }
    }
    out
}

/// Brute-force canonical form: largest flattened variant, lowest index on ties.
fn brute_slap(p: &PlaneStack) -> (Vec<f32>, usize) {
    let mut best = (variant_by_points(p, D4Transform::IDENTITY), 0);
    for (i, g) in D4Transform::ALL.iter().enumerate().skip(1) {
        let v = variant_by_points(p, *g);
        if v.partial_cmp(&best.0) == Some(std::cmp::Ordering::Greater) {
            best = (v, i);
        }
    }
    best
}

fn random_state_planes(rng: &mut ChaCha8Rng, n: usize) -> PlaneStack {
    let mut g = new_game(BoardConfig::new(n).unwrap());
    let plies = rng.random_range(0..n * n / 2);
    for _ in 0..plies {
        if g.is_terminal() {
            break;
        }
        let m = *g.legal_moves().choose(rng).unwrap();
        g.apply(m).unwrap();
    }
    encode_planes(&g)
}

fn random_binary_planes(rng: &mut ChaCha8Rng, channels: usize, n: usize) -> PlaneStack {
    let density = rng.random_range(0.02..0.5);
    let data = (0..channels * n * n)
        .map(|_| if rng.random_bool(density) { 1.0 } else { 0.0 })
        .collect();
    PlaneStack::from_vec(channels, n, data).unwrap()
}

#[test]
fn group_axioms_exhaustive() {
    let id = D4Transform::IDENTITY;
    let all = D4Transform::ALL;
    let mut products = std::collections::HashSet::new();
    for g in all {
        assert_eq!(compose(g, id), g);
        assert_eq!(compose(id, g), g);
        assert_eq!(compose(g, inverse(g)), id);
        assert_eq!(compose(inverse(g), g), id);
        for h in all {
            products.insert(compose(g, h));
            for k in all {
                assert_eq!(compose(compose(g, h), k), compose(g, compose(h, k)));
            }
        }
    }
    assert_eq!(products.len(), 8);
}

#[test]
fn transforms_match_coordinate_oracle_and_compose() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = random_binary_planes(&mut rng, 3, 7);
    for g in D4Transform::ALL {
        assert_eq!(apply_transform(&x, g).data(), variant_by_points(&x, g).as_slice());
        assert_eq!(apply_transform(&apply_transform(&x, g), inverse(g)), x);
        for h in D4Transform::ALL {
            assert_eq!(
                apply_transform(&x, compose(g, h)),
                apply_transform(&apply_transform(&x, h), g)
            );
        }
    }
}

#[test]
fn slap_is_invariant_and_maximal() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for i in 0..10_000 {
        let x = if i % 2 == 0 {
            random_state_planes(&mut rng, 8)
        } else {
            random_binary_planes(&mut rng, 4, 8)
        };
        let reference = slap(&x);
        let (brute, brute_idx) = brute_slap(&x);
        assert_eq!(reference.canonical.data(), brute.as_slice());
        assert_eq!(reference.transform.index(), brute_idx);
        assert_eq!(apply_transform(&x, reference.transform), reference.canonical);
        for g in D4Transform::ALL {
            let moved = slap(&apply_transform(&x, g));
            assert_eq!(moved.canonical, reference.canonical);
        }
        let again = slap(&reference.canonical);
        assert_eq!(again.canonical, reference.canonical);
        assert!(again.transform.is_identity());
    }
}

#[test]
fn slap_examples() {
    let mut p = PlaneStack::zeros(4, 8);
    p.set(0, 7, 7, 1.0);
    p.plane_mut(3).fill(1.0);
    let s = slap(&p);
    assert_eq!(s.transform.index(), 2);
    assert_eq!(s.canonical.get(0, 0, 0), 1.0);
}

#[test]
fn golden_canonical_fixtures() {
    let text = include_str!("fixtures/slap_golden.txt");
    let cases: Vec<&str> = text.split("# case\n").filter(|c| !c.trim().is_empty()).collect();
    assert_eq!(cases.len(), 13);
    for case in cases {
        let (input, rest) = case.split_once("# canonical transform ").unwrap();
        let (idx, expected) = rest.split_once('\n').unwrap();
        let idx: usize = idx.trim().parse().unwrap();
        let state = diagram::parse(input).unwrap();
        let expected = diagram::parse(expected).unwrap();
        let s = slap(&encode_planes(&state));
        assert_eq!(s.transform.index(), idx, "input:\n{input}");
        assert_eq!(s.canonical, encode_planes(&expected));
        assert_eq!(transform_state(&state, s.transform), expected);
    }
}

#[test]
fn augmented_asymmetric_state_has_eight_distinct_variants() {
    let text = "to_move: X\nlast: 5,3\n........\n........\n........\n...X....\n\
                ...XO...\n...O....\n........\n........\n";
    let planes = encode_planes(&diagram::parse(text).unwrap());
    let mut policy = vec![0.0; 64];
    policy[2] = 0.75;
    policy[40] = 0.25;
    let pairs = augment_8(&planes, &policy).unwrap();
    for i in 0..8 {
        for j in i + 1..8 {
            assert_ne!(pairs[i].0, pairs[j].0, "variants {i} and {j} coincide");
        }
        let back = map_policy_back(&pairs[i].1, 8, D4Transform::ALL[i]).unwrap();
        assert_eq!(back, policy);
    }
}

#[test]
fn slap_cc_idempotent_on_random_states() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..10_000 {
        let x = random_state_planes(&mut rng, 8).truncated(2);
        let (once, _) = slap_cc(&x);
        let (twice, shift) = slap_cc(&once);
        assert_eq!(shift, CcShift::default());
        assert_eq!(twice, once);
    }
}

#[test]
fn cc_planes_on_reference_figure() {
    let text = "to_move: X\nlast: 5,3\n........\n........\n........\n...X....\n\
                ...XO...\n...O....\n........\n........\n";
    let base = encode_planes(&diagram::parse(text).unwrap());
    let (_, shift) = slap_cc(&base.truncated(2));
    assert_eq!(shift, CcShift { r_shift: -1, c_shift: 0 });
    let ext = extend_planes_cc(&base).unwrap();
    for ch in 0..2 {
        for r in 0..8 {
            for c in 0..8 {
                assert_eq!(ext.get(4 + ch, r, c), base.get(ch, (r + 1) % 8, c));
            }
        }
    }
}

#[test]
fn cc_collapses_translations() {
    // The same local pattern at several offsets with equal bounding-box parity.
    let pattern = [(0, 0, 0), (1, 1, 1), (0, 2, 1), (1, 0, 2)];
    let mut seen = None;
    for (dr, dc) in [(0, 0), (2, 2), (4, 0), (0, 4), (2, 4)] {
        let mut p = PlaneStack::zeros(2, 8);
        for &(ch, r, c) in &pattern {
            p.set(ch, r + dr, c + dc, 1.0);
        }
        let (centered, _) = slap_cc(&p);
        match &seen {
            None => seen = Some(centered),
            Some(first) => assert_eq!(&centered, first),
        }
    }
}

proptest! {
    #[test]
    fn policy_round_trip_preserves_values(
        raw in proptest::collection::vec(0.0f32..1.0, 64),
        g in 0usize..8,
    ) {
        let t = D4Transform::ALL[g];
        let moved = transform_policy(&raw, 8, t).unwrap();
        prop_assert_eq!(map_policy_back(&moved, 8, t).unwrap(), raw.clone());
        let mut a = moved.clone();
        let mut b = raw.clone();
        a.sort_by(f32::total_cmp);
        b.sort_by(f32::total_cmp);
        prop_assert_eq!(a, b);
    }
}

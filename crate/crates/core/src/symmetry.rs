//! The dihedral group of the square and lexicographic canonicalization.
//!
//! A transform is `rotation` counterclockwise quarter turns followed by an
//! optional left-right flip. One quarter turn sends `(r, c)` to
//! `(N-1-c, r)`; the flip sends `(r, c)` to `(r, N-1-c)`. Elements are
//! enumerated as `rotation + 4 * flip`, so index 0 is the identity.

use std::cmp::Ordering;
use std::sync::OnceLock;

use crate::board::{Cell, GameState};
use crate::error::ShapeError;
use crate::planes::PlaneStack;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct D4Transform {
    rotation: u8,
    flip: bool,
}

impl D4Transform {
    pub const IDENTITY: Self = Self::new(0, false);
    pub const ROT90: Self = Self::new(1, false);
    pub const ROT180: Self = Self::new(2, false);
    pub const ROT270: Self = Self::new(3, false);
    pub const FLIP: Self = Self::new(0, true);

    /// All eight elements in enumeration order.
    pub const ALL: [Self; 8] = [
        Self::new(0, false),
        Self::new(1, false),
        Self::new(2, false),
        Self::new(3, false),
        Self::new(0, true),
        Self::new(1, true),
        Self::new(2, true),
        Self::new(3, true),
    ];

    pub const fn new(rotation: u8, flip: bool) -> Self {
        Self {
            rotation: rotation % 4,
            flip,
        }
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn index(self) -> usize {
        self.rotation as usize + 4 * self.flip as usize
    }

    pub fn rotation(self) -> u8 {
        self.rotation
    }

    pub fn flip(self) -> bool {
        self.flip
    }

    pub fn is_identity(self) -> bool {
        self == Self::IDENTITY
    }

    /// Where the content of `(row, col)` ends up on an `n × n` board.
    pub fn map_point(self, row: usize, col: usize, n: usize) -> (usize, usize) {
        let (mut r, mut c) = (row, col);
        for _ in 0..self.rotation {
            (r, c) = (n - 1 - c, r);
        }
        if self.flip {
            c = n - 1 - c;
        }
        (r, c)
    }

    pub fn map_index(self, index: usize, n: usize) -> usize {
        let (r, c) = self.map_point(index / n, index % n, n);
        r * n + c
    }
}

/// `compose(g, h)` applies `h` first, then `g`.
pub fn compose(g: D4Transform, h: D4Transform) -> D4Transform {
    // F R^r = R^-r F, so F^a R^r F^b R^s = F^(a+b) R^(s + (-1)^b r).
    let rotation = if h.flip {
        h.rotation + 4 - g.rotation
    } else {
        h.rotation + g.rotation
    };
    D4Transform::new(rotation, g.flip ^ h.flip)
}

pub fn inverse(g: D4Transform) -> D4Transform {
    if g.flip {
        g
    } else {
        D4Transform::new(4 - g.rotation, false)
    }
}

/// Gather tables: `gather[g][dst]` is the source cell whose content lands on
/// `dst` under element `g`.
struct Tables {
    gather: [Vec<u16>; 8],
}

impl Tables {
    fn build(n: usize) -> Self {
        let area = n * n;
        let gather = std::array::from_fn(|g| {
            let t = D4Transform::ALL[g];
            let mut map = vec![0u16; area];
            for src in 0..area {
                map[t.map_index(src, n)] = src as u16;
            }
            map
        });
        Self { gather }
    }
}

const CACHED_SIZES: usize = 32;

fn with_tables<R>(n: usize, f: impl FnOnce(&Tables) -> R) -> R {
    static CACHE: OnceLock<Vec<OnceLock<Tables>>> = OnceLock::new();
    if n < CACHED_SIZES {
        let cache = CACHE.get_or_init(|| (0..CACHED_SIZES).map(|_| OnceLock::new()).collect());
        f(cache[n].get_or_init(|| Tables::build(n)))
    } else {
        f(&Tables::build(n))
    }
}

/// Applies `g` to every channel identically.
pub fn apply_transform(planes: &PlaneStack, g: D4Transform) -> PlaneStack {
    if g.is_identity() {
        return planes.clone();
    }
    let n = planes.size();
    let a = n * n;
    with_tables(n, |t| {
        let map = &t.gather[g.index()];
        let src = planes.data();
        let mut out = PlaneStack::zeros(planes.channels(), n);
        for (dst_plane, src_plane) in out.data_mut().chunks_exact_mut(a).zip(src.chunks_exact(a)) {
            for (d, &s) in dst_plane.iter_mut().zip(map.iter()) {
                *d = src_plane[s as usize];
            }
        }
        out
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlapResult {
    pub canonical: PlaneStack,
    /// The element that maps the input onto `canonical`.
    pub transform: D4Transform,
}

/// Lexicographic comparison of two variants of `data` without materializing
/// them. Channels are compared in order, each row-major; values use the IEEE
/// total order.
fn compare_variants(data: &[f32], a: usize, lhs: &[u16], rhs: &[u16]) -> Ordering {
    for plane in data.chunks_exact(a) {
        for (&l, &r) in lhs.iter().zip(rhs) {
            if l == r {
                continue;
            }
            match plane[l as usize].total_cmp(&plane[r as usize]) {
                Ordering::Equal => {}
                other => return other,
            }
        }
    }
    Ordering::Equal
}

/// Picks, among the eight variants of `planes`, the one whose flattened
/// sequence is lexicographically largest. Ties go to the lowest enumeration
/// index.
pub fn slap(planes: &PlaneStack) -> SlapResult {
    let n = planes.size();
    let a = n * n;
    let best = with_tables(n, |t| {
        let data = planes.data();
        let mut best = 0;
        for g in 1..8 {
            if compare_variants(data, a, &t.gather[g], &t.gather[best]) == Ordering::Greater {
                best = g;
            }
        }
        best
    });
    let transform = D4Transform::ALL[best];
    SlapResult {
        canonical: apply_transform(planes, transform),
        transform,
    }
}

fn check_policy_len(policy: &[f32], size: usize) -> Result<(), ShapeError> {
    if policy.len() != size * size {
        return Err(ShapeError::Length {
            expected: size * size,
            actual: policy.len(),
        });
    }
    Ok(())
}

/// Moves a flat `size × size` policy by `g`, the same way
/// [`apply_transform`] moves planes.
pub fn transform_policy(
    policy: &[f32],
    size: usize,
    g: D4Transform,
) -> Result<Vec<f32>, ShapeError> {
    check_policy_len(policy, size)?;
    if g.is_identity() {
        return Ok(policy.to_vec());
    }
    Ok(with_tables(size, |t| {
        t.gather[g.index()].iter().map(|&s| policy[s as usize]).collect()
    }))
}

/// Brings a policy computed on a canonical variant back to the frame of the
/// original input, given the transform [`slap`] reported.
pub fn map_policy_back(
    policy: &[f32],
    size: usize,
    transform: D4Transform,
) -> Result<Vec<f32>, ShapeError> {
    transform_policy(policy, size, inverse(transform))
}

/// One `(planes, policy)` pair per group element, in enumeration order, both
/// moved by the same element.
pub fn augment_8(
    planes: &PlaneStack,
    policy: &[f32],
) -> Result<Vec<(PlaneStack, Vec<f32>)>, ShapeError> {
    check_policy_len(policy, planes.size())?;
    D4Transform::ALL
        .iter()
        .map(|&g| Ok((apply_transform(planes, g), transform_policy(policy, planes.size(), g)?)))
        .collect()
}

/// Moves the stones and last move of a position by `g`.
pub fn transform_state(state: &GameState, g: D4Transform) -> GameState {
    let n = state.size();
    let mut cells = vec![Cell::Empty; n * n];
    for (i, &c) in state.cells().iter().enumerate() {
        cells[g.map_index(i, n)] = c;
    }
    let last = state.last_move().map(|i| g.map_index(i, n));
    GameState::from_cells(state.config(), cells, last)
        .expect("a symmetry of a valid position is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_hot(n: usize, r: usize, c: usize) -> PlaneStack {
        let mut p = PlaneStack::zeros(1, n);
        p.set(0, r, c, 1.0);
        p
    }

    fn position(p: &PlaneStack) -> (usize, usize) {
        let i = p.plane(0).iter().position(|&v| v == 1.0).unwrap();
        (i / p.size(), i % p.size())
    }

    #[test]
    fn point_maps() {
        assert_eq!(position(&apply_transform(&one_hot(8, 0, 0), D4Transform::ROT90)), (7, 0));
        assert_eq!(position(&apply_transform(&one_hot(8, 0, 0), D4Transform::FLIP)), (0, 7));
        assert_eq!(position(&apply_transform(&one_hot(8, 2, 5), D4Transform::IDENTITY)), (2, 5));
        assert_eq!(position(&apply_transform(&one_hot(8, 1, 2), D4Transform::ROT180)), (6, 5));
    }

    #[test]
    fn group_examples() {
        assert_eq!(compose(D4Transform::ROT90, D4Transform::ROT90), D4Transform::ROT180);
        assert_eq!(inverse(D4Transform::ROT90), D4Transform::ROT270);
        assert_eq!(inverse(D4Transform::FLIP), D4Transform::FLIP);
        for (i, g) in D4Transform::ALL.iter().enumerate() {
            assert_eq!(g.index(), i);
            assert_eq!(D4Transform::from_index(i), Some(*g));
        }
    }

    #[test]
    fn composition_matches_point_maps() {
        for g in D4Transform::ALL {
            for h in D4Transform::ALL {
                let gh = compose(g, h);
                for idx in 0..25 {
                    assert_eq!(gh.map_index(idx, 5), g.map_index(h.map_index(idx, 5), 5));
                }
            }
        }
    }

    #[test]
    fn slap_corner_stone_goes_top_left() {
        let mut p = PlaneStack::zeros(4, 8);
        p.set(0, 7, 7, 1.0);
        p.plane_mut(3).fill(1.0);
        let s = slap(&p);
        assert_eq!(s.transform, D4Transform::ROT180);
        assert_eq!(s.canonical.get(0, 0, 0), 1.0);
    }

    #[test]
    fn slap_symmetric_input_is_identity() {
        let mut p = PlaneStack::zeros(4, 8);
        p.plane_mut(3).fill(1.0);
        let s = slap(&p);
        assert_eq!(s.transform, D4Transform::IDENTITY);
        assert_eq!(s.canonical, p);
    }

    #[test]
    fn policy_back_mapping() {
        let mut policy = vec![0.0; 64];
        policy[0] = 1.0;
        let back = map_policy_back(&policy, 8, D4Transform::ROT180).unwrap();
        assert_eq!(back[63], 1.0);
        assert_eq!(map_policy_back(&policy, 8, D4Transform::IDENTITY).unwrap(), policy);
        assert!(map_policy_back(&policy[..63], 8, D4Transform::IDENTITY).is_err());
    }

    #[test]
    fn augmenting_empty_board_gives_identical_pairs() {
        let mut p = PlaneStack::zeros(4, 8);
        p.plane_mut(3).fill(1.0);
        let policy = vec![1.0 / 64.0; 64];
        let pairs = augment_8(&p, &policy).unwrap();
        assert_eq!(pairs.len(), 8);
        assert!(pairs.iter().all(|(q, pi)| *q == p && *pi == policy));
    }
}

//! Gomoku engine, network input planes and symmetry canonicalization.
//!
//! The symmetry side covers the eight rotations/reflections of the square
//! board ([`D4Transform`]), lexicographic canonicalization ([`slap`]),
//! mapping policies back to the original frame, ×8 augmentation, and the
//! bounding-box centering used for translation ([`slap_cc`]).

pub mod board;
pub mod centering;
pub mod diagram;
mod error;
pub mod planes;
pub mod symmetry;

pub use board::{new_game, BoardConfig, Cell, GameState, GameStatus, Player, WIN_LENGTH};
pub use centering::{extend_planes_cc, position_index_planes, slap_cc, CcShift};
pub use error::{GameError, ShapeError};
pub use planes::{encode_planes, encode_planes_for, PlaneStack, BASE_CHANNELS, CC_CHANNELS};
pub use symmetry::{
    apply_transform, augment_8, compose, inverse, map_policy_back, slap, transform_policy,
    transform_state,
    D4Transform, SlapResult,
};

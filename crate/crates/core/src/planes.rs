//! Network input feature planes.

use crate::board::{Cell, GameState, Player};
use crate::error::ShapeError;

/// Channels of the base encoding: current stones, opponent stones, last
/// action, colour.
pub const BASE_CHANNELS: usize = 4;
/// Channels with the centered stone planes and position-index planes added.
pub const CC_CHANNELS: usize = 8;

/// `channels × size × size` reals, channel-major then row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneStack {
    channels: usize,
    size: usize,
    data: Vec<f32>,
}

impl PlaneStack {
    pub fn zeros(channels: usize, size: usize) -> Self {
        Self {
            channels,
            size,
            data: vec![0.0; channels * size * size],
        }
    }

    /// Wraps `data` laid out as `channels × rows × cols`; the board must be
    /// square.
    pub fn from_shape(
        channels: usize,
        rows: usize,
        cols: usize,
        data: Vec<f32>,
    ) -> Result<Self, ShapeError> {
        if rows != cols {
            return Err(ShapeError::NotSquare { rows, cols });
        }
        Self::from_vec(channels, rows, data)
    }

    pub fn from_vec(channels: usize, size: usize, data: Vec<f32>) -> Result<Self, ShapeError> {
        let expected = channels * size * size;
        if data.len() != expected {
            return Err(ShapeError::Length {
                expected,
                actual: data.len(),
            });
        }
        Ok(Self {
            channels,
            size,
            data,
        })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn area(&self) -> usize {
        self.size * self.size
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn plane(&self, channel: usize) -> &[f32] {
        let a = self.area();
        &self.data[channel * a..(channel + 1) * a]
    }

    pub fn plane_mut(&mut self, channel: usize) -> &mut [f32] {
        let a = self.area();
        &mut self.data[channel * a..(channel + 1) * a]
    }

    pub fn get(&self, channel: usize, row: usize, col: usize) -> f32 {
        self.data[(channel * self.size + row) * self.size + col]
    }

    pub fn set(&mut self, channel: usize, row: usize, col: usize, value: f32) {
        self.data[(channel * self.size + row) * self.size + col] = value;
    }

    /// Copies of the first `count` channels.
    pub fn truncated(&self, count: usize) -> PlaneStack {
        let a = self.area();
        Self {
            channels: count,
            size: self.size,
            data: self.data[..count * a].to_vec(),
        }
    }

    /// Appends the channels of `other` (same board size) after ours.
    pub fn concat(&self, other: &PlaneStack) -> Result<PlaneStack, ShapeError> {
        if other.size != self.size {
            return Err(ShapeError::Length {
                expected: self.area(),
                actual: other.area(),
            });
        }
        let mut data = Vec::with_capacity(self.data.len() + other.data.len());
        data.extend_from_slice(&self.data);
        data.extend_from_slice(&other.data);
        Ok(Self {
            channels: self.channels + other.channels,
            size: self.size,
            data,
        })
    }
}

/// Four-plane encoding from the perspective of the player to move.
pub fn encode_planes(state: &GameState) -> PlaneStack {
    encode_planes_for(state, state.to_move())
}

/// Four-plane encoding with `perspective` treated as the current player.
pub fn encode_planes_for(state: &GameState, perspective: Player) -> PlaneStack {
    let n = state.size();
    let a = n * n;
    let mut planes = PlaneStack::zeros(BASE_CHANNELS, n);
    let data = planes.data_mut();
    for (i, cell) in state.cells().iter().enumerate() {
        match cell {
            Cell::Stone(p) if *p == perspective => data[i] = 1.0,
            Cell::Stone(_) => data[a + i] = 1.0,
            Cell::Empty => {}
        }
    }
    if let Some(last) = state.last_move() {
        data[2 * a + last] = 1.0;
    }
    if perspective == Player::Black {
        data[3 * a..4 * a].fill(1.0);
    }
    planes
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::board::{new_game, BoardConfig};
    use crate::diagram;

    #[test]
    fn empty_board_only_colour_plane_set() {
        let p = encode_planes(&new_game(BoardConfig::default()));
        assert!(p.data()[..192].iter().all(|&v| v == 0.0));
        assert!(p.plane(3).iter().all(|&v| v == 1.0));
    }

    #[test]
    fn after_one_black_move_white_perspective() {
        let g = new_game(BoardConfig::default()).play_move(27).unwrap();
        let p = encode_planes(&g);
        assert!(p.plane(0).iter().all(|&v| v == 0.0));
        assert_eq!(p.plane(1)[27], 1.0);
        assert_eq!(p.plane(1).iter().sum::<f32>(), 1.0);
        assert_eq!(p.plane(2)[27], 1.0);
        assert!(p.plane(3).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn perspective_swaps_stone_planes() {
        let g = diagram::parse(
            "to_move: O\nlast: 2,6\nXO......\n........\n......X.\n........\n\
             ........\n........\n........\n........\n",
        )
        .unwrap();
        let a = encode_planes_for(&g, Player::Black);
        let b = encode_planes_for(&g, Player::White);
        assert_eq!(a.plane(0), b.plane(1));
        assert_eq!(a.plane(1), b.plane(0));
        assert_eq!(a.plane(2), b.plane(2));
    }

    #[test]
    fn non_square_rejected() {
        assert_eq!(
            PlaneStack::from_shape(1, 2, 3, vec![0.0; 6]),
            Err(ShapeError::NotSquare { rows: 2, cols: 3 })
        );
    }
}

//! Freestyle Gomoku rules on an N×N board.
//!
//! Cells are addressed row-major from the top-left corner: the flat index of
//! `(row, col)` is `row * N + col`. Five or more stones in a horizontal,
//! vertical or diagonal line win; a full board without a line is a draw.

use crate::error::GameError;

/// Stones needed in a line to win. Overlines also win (freestyle rule).
pub const WIN_LENGTH: usize = 5;

/// Largest supported board edge.
pub const MAX_BOARD_SIZE: usize = 19;

/// Row/column steps of the four line directions: horizontal, vertical,
/// main diagonal and anti-diagonal.
pub const DIRECTIONS: [(isize, isize); 4] = [(0, 1), (1, 0), (1, 1), (1, -1)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BoardConfig {
    size: usize,
}

impl BoardConfig {
    pub fn new(size: usize) -> Result<Self, GameError> {
        if size < WIN_LENGTH || size > MAX_BOARD_SIZE {
            return Err(GameError::InvalidConfig(format!(
                "board size {size} outside {WIN_LENGTH}..={MAX_BOARD_SIZE}"
            )));
        }
        Ok(Self { size })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Number of cells, N².
    pub fn cells(&self) -> usize {
        self.size * self.size
    }

    pub fn win_length(&self) -> usize {
        WIN_LENGTH
    }
}

impl Default for BoardConfig {
    fn default() -> Self {
        Self { size: 8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Player {
    Black,
    White,
}

impl Player {
    pub fn opponent(self) -> Self {
        match self {
            Player::Black => Player::White,
            Player::White => Player::Black,
        }
    }

    /// Character used in board diagrams.
    pub fn symbol(self) -> char {
        match self {
            Player::Black => 'X',
            Player::White => 'O',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Cell {
    #[default]
    Empty,
    Stone(Player),
}

impl Cell {
    pub fn is_empty(self) -> bool {
        matches!(self, Cell::Empty)
    }

    pub fn is(self, player: Player) -> bool {
        self == Cell::Stone(player)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GameStatus {
    Ongoing,
    Win(Player),
    Draw,
}

impl GameStatus {
    pub fn is_terminal(self) -> bool {
        !matches!(self, GameStatus::Ongoing)
    }
}

/// A position plus the bookkeeping needed by the state encoder.
///
/// The status is maintained incrementally by [`GameState::apply`]; it only
/// checks lines through the stone just placed. [`GameState::full_scan_status`]
/// recomputes it from scratch.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GameState {
    config: BoardConfig,
    cells: Vec<Cell>,
    to_move: Player,
    last_move: Option<usize>,
    move_count: usize,
    status: GameStatus,
}

/// Empty board, black to move.
pub fn new_game(config: BoardConfig) -> GameState {
    GameState {
        config,
        cells: vec![Cell::Empty; config.cells()],
        to_move: Player::Black,
        last_move: None,
        move_count: 0,
        status: GameStatus::Ongoing,
    }
}

impl GameState {
    /// Builds a state from an arbitrary stone layout, validating the
    /// stone-count parity and last-move invariants. The player to move is
    /// implied by the counts; the status comes from a full scan.
    pub fn from_cells(
        config: BoardConfig,
        cells: Vec<Cell>,
        last_move: Option<usize>,
    ) -> Result<Self, GameError> {
        if cells.len() != config.cells() {
            return Err(GameError::InvalidState(format!(
                "expected {} cells, got {}",
                config.cells(),
                cells.len()
            )));
        }
        let black = cells.iter().filter(|c| c.is(Player::Black)).count();
        let white = cells.iter().filter(|c| c.is(Player::White)).count();
        let to_move = match black.checked_sub(white) {
            Some(0) => Player::Black,
            Some(1) => Player::White,
            _ => {
                return Err(GameError::InvalidState(format!(
                    "black has {black} stones and white {white}"
                )))
            }
        };
        if let Some(last) = last_move {
            if last >= cells.len() || !cells[last].is(to_move.opponent()) {
                return Err(GameError::InvalidState(format!(
                    "last move {last} is not a stone of the player who just moved"
                )));
            }
        }
        let mut state = Self {
            config,
            cells,
            to_move,
            last_move,
            move_count: black + white,
            status: GameStatus::Ongoing,
        };
        state.status = state.full_scan_status();
        Ok(state)
    }

    pub fn config(&self) -> BoardConfig {
        self.config
    }

    pub fn size(&self) -> usize {
        self.config.size
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn cell(&self, index: usize) -> Cell {
        self.cells[index]
    }

    pub fn at(&self, row: usize, col: usize) -> Cell {
        self.cells[row * self.config.size + col]
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.config.size + col
    }

    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index / self.config.size, index % self.config.size)
    }

    pub fn to_move(&self) -> Player {
        self.to_move
    }

    pub fn last_move(&self) -> Option<usize> {
        self.last_move
    }

    pub fn move_count(&self) -> usize {
        self.move_count
    }

    /// Status as tracked incrementally through the move history.
    pub fn status(&self) -> GameStatus {
        self.status
    }

    pub fn is_terminal(&self) -> bool {
        self.status.is_terminal()
    }

    pub fn is_legal(&self, index: usize) -> bool {
        !self.is_terminal() && index < self.cells.len() && self.cells[index].is_empty()
    }

    /// Empty cells in ascending index order; empty once the game is over.
    pub fn legal_moves(&self) -> Vec<usize> {
        if self.is_terminal() {
            return Vec::new();
        }
        self.empty_cells()
    }

    pub fn empty_cells(&self) -> Vec<usize> {
        (0..self.cells.len())
            .filter(|&i| self.cells[i].is_empty())
            .collect()
    }

    pub fn stone_count(&self, player: Player) -> usize {
        self.cells.iter().filter(|c| c.is(player)).count()
    }

    /// Returns the successor state, leaving `self` untouched.
    pub fn play_move(&self, index: usize) -> Result<GameState, GameError> {
        let mut next = self.clone();
        next.apply(index)?;
        Ok(next)
    }

    /// In-place variant of [`GameState::play_move`]. On error the state is
    /// unchanged.
    pub fn apply(&mut self, index: usize) -> Result<(), GameError> {
        if self.is_terminal() {
            return Err(GameError::GameOver);
        }
        if index >= self.cells.len() {
            return Err(GameError::IllegalMove {
                index,
                reason: "outside the board",
            });
        }
        if !self.cells[index].is_empty() {
            return Err(GameError::IllegalMove {
                index,
                reason: "cell is occupied",
            });
        }
        let mover = self.to_move;
        self.cells[index] = Cell::Stone(mover);
        self.last_move = Some(index);
        self.move_count += 1;
        self.to_move = mover.opponent();
        self.status = if self.line_through(index, mover) >= WIN_LENGTH {
            GameStatus::Win(mover)
        } else if self.move_count == self.cells.len() {
            GameStatus::Draw
        } else {
            GameStatus::Ongoing
        };
        Ok(())
    }

    /// Longest run of `player` stones through `index` over the four
    /// directions, counting `index` itself as that player's stone.
    pub fn line_through(&self, index: usize, player: Player) -> usize {
        let n = self.config.size as isize;
        let (r, c) = (index as isize / n, index as isize % n);
        let mut best = 0;
        for (dr, dc) in DIRECTIONS {
            let mut run = 1;
            for sign in [1, -1] {
                let (mut rr, mut cc) = (r + sign * dr, c + sign * dc);
                while rr >= 0 && rr < n && cc >= 0 && cc < n {
                    if !self.cells[(rr * n + cc) as usize].is(player) {
                        break;
                    }
                    run += 1;
                    rr += sign * dr;
                    cc += sign * dc;
                }
            }
            best = best.max(run);
        }
        best
    }

    /// Whether `player` placing at the empty cell `index` completes a line.
    pub fn wins_at(&self, index: usize, player: Player) -> bool {
        self.cells[index].is_empty() && self.line_through(index, player) >= WIN_LENGTH
    }

    /// Recomputes the status by scanning every window on the board.
    pub fn full_scan_status(&self) -> GameStatus {
        let n = self.config.size as isize;
        let w = WIN_LENGTH as isize;
        for r in 0..n {
            for c in 0..n {
                let Cell::Stone(p) = self.cells[(r * n + c) as usize] else {
                    continue;
                };
                for (dr, dc) in DIRECTIONS {
                    let (er, ec) = (r + (w - 1) * dr, c + (w - 1) * dc);
                    if er < 0 || er >= n || ec < 0 || ec >= n {
                        continue;
                    }
                    if (1..w).all(|k| self.cells[((r + k * dr) * n + c + k * dc) as usize].is(p)) {
                        return GameStatus::Win(p);
                    }
                }
            }
        }
        if self.cells.iter().all(|c| !c.is_empty()) {
            GameStatus::Draw
        } else {
            GameStatus::Ongoing
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn board8() -> BoardConfig {
        BoardConfig::new(8).unwrap()
    }

    #[test]
    fn config_bounds() {
        assert!(BoardConfig::new(4).is_err());
        assert!(BoardConfig::new(20).is_err());
        assert_eq!(BoardConfig::new(15).unwrap().cells(), 225);
        assert_eq!(BoardConfig::default().size(), 8);
    }

    #[test]
    fn new_game_is_empty_black_to_move() {
        let g = new_game(board8());
        assert_eq!(g.cells().len(), 64);
        assert!(g.cells().iter().all(|c| c.is_empty()));
        assert_eq!(g.to_move(), Player::Black);
        assert_eq!(g.last_move(), None);
        assert_eq!(g.status(), GameStatus::Ongoing);
        assert_eq!(new_game(BoardConfig::new(15).unwrap()).cells().len(), 225);
    }

    #[test]
    fn play_places_stone_and_flips_turn() {
        let g = new_game(board8());
        let idx = g.index(3, 3);
        let next = g.play_move(idx).unwrap();
        assert_eq!(next.at(3, 3), Cell::Stone(Player::Black));
        assert_eq!(next.to_move(), Player::White);
        assert_eq!(next.last_move(), Some(idx));
        assert_eq!(next.move_count(), 1);
        // original untouched
        assert!(g.at(3, 3).is_empty());
    }

    #[test]
    fn occupied_and_terminal_moves_rejected() {
        let g = new_game(board8()).play_move(0).unwrap();
        assert!(matches!(g.play_move(0), Err(GameError::IllegalMove { .. })));
        assert!(matches!(g.play_move(64), Err(GameError::IllegalMove { .. })));

        let mut g = new_game(board8());
        for col in 0..4 {
            g.apply(g.index(2, col)).unwrap();
            g.apply(g.index(5, col)).unwrap();
        }
        g.apply(g.index(2, 4)).unwrap();
        assert_eq!(g.status(), GameStatus::Win(Player::Black));
        assert_eq!(g.play_move(10), Err(GameError::GameOver));
    }

    #[test]
    fn four_in_a_row_is_ongoing_fifth_wins() {
        let mut g = new_game(board8());
        for col in 1..5 {
            g.apply(g.index(2, col)).unwrap();
            assert_eq!(g.status(), GameStatus::Ongoing);
            g.apply(g.index(6, col + 2)).unwrap();
        }
        assert_eq!(g.full_scan_status(), GameStatus::Ongoing);
        g.apply(g.index(2, 5)).unwrap();
        assert_eq!(g.status(), GameStatus::Win(Player::Black));
        assert_eq!(g.full_scan_status(), GameStatus::Win(Player::Black));
    }

    #[test]
    fn overline_counts_as_win() {
        let mut g = new_game(board8());
        // black: row 0 cols 0,1,2 and 4,5 ; then 3 fills to six in a row
        let black = [0, 1, 2, 4, 5];
        let white = [56, 57, 58, 60, 62];
        for (b, w) in black.iter().zip(white) {
            g.apply(*b).unwrap();
            g.apply(w).unwrap();
        }
        g.apply(3).unwrap();
        assert_eq!(g.line_through(3, Player::Black), 6);
        assert_eq!(g.status(), GameStatus::Win(Player::Black));
    }

    #[test]
    fn diagonal_wins_both_directions() {
        let mut g = new_game(board8());
        for k in 0..4 {
            g.apply(g.index(k + 1, k + 1)).unwrap();
            g.apply(g.index(k, 7 - k)).unwrap();
        }
        g.apply(g.index(5, 5)).unwrap();
        assert_eq!(g.status(), GameStatus::Win(Player::Black));

        let mut g = new_game(board8());
        g.apply(g.index(7, 7)).unwrap();
        for k in 0..4 {
            g.apply(g.index(k, 7 - k)).unwrap();
            g.apply(g.index(7, k)).unwrap();
        }
        g.apply(g.index(4, 3)).unwrap();
        assert_eq!(g.status(), GameStatus::Win(Player::White));
    }

    #[test]
    fn from_cells_validates_parity_and_last_move() {
        let cfg = board8();
        let mut cells = vec![Cell::Empty; 64];
        cells[0] = Cell::Stone(Player::White);
        assert!(GameState::from_cells(cfg, cells.clone(), None).is_err());
        cells[1] = Cell::Stone(Player::Black);
        let s = GameState::from_cells(cfg, cells.clone(), Some(0)).unwrap();
        assert_eq!(s.to_move(), Player::Black);
        assert!(GameState::from_cells(cfg, cells, Some(1)).is_err());
    }
}

//! Plain-text board diagrams used by fixtures and the terminal UI.
//!
//! ```text
//! to_move: X
//! last: 5,3
//! ........
//! ...X....
//! ```
//!
//! Two header lines (`to_move: X|O`, `last: r,c|none`) followed by N rows of
//! N characters from `.`, `X` (black) and `O` (white).

use crate::board::{BoardConfig, Cell, GameState, Player};
use crate::error::GameError;

fn parse_err(line: usize, msg: impl Into<String>) -> GameError {
    GameError::Parse {
        line,
        msg: msg.into(),
    }
}

pub fn parse(text: &str) -> Result<GameState, GameError> {
    let mut lines = text.lines().map(str::trim_end).filter(|l| !l.is_empty());

    let to_move = match lines.next().and_then(|l| l.strip_prefix("to_move:")) {
        Some(v) => match v.trim() {
            "X" => Player::Black,
            "O" => Player::White,
            other => return Err(parse_err(1, format!("unknown player {other:?}"))),
        },
        None => return Err(parse_err(1, "expected `to_move: X|O`")),
    };
    let last = match lines.next().and_then(|l| l.strip_prefix("last:")) {
        Some(v) if v.trim() == "none" => None,
        Some(v) => {
            let (r, c) = v
                .trim()
                .split_once(',')
                .ok_or_else(|| parse_err(2, "expected `last: r,c`"))?;
            let r: usize = r.trim().parse().map_err(|_| parse_err(2, "bad row"))?;
            let c: usize = c.trim().parse().map_err(|_| parse_err(2, "bad column"))?;
            Some((r, c))
        }
        None => return Err(parse_err(2, "expected `last: r,c|none`")),
    };

    let rows: Vec<&str> = lines.collect();
    let n = rows.len();
    let config = BoardConfig::new(n).map_err(|e| parse_err(3, e.to_string()))?;
    let mut cells = Vec::with_capacity(n * n);
    for (i, row) in rows.iter().enumerate() {
        if row.chars().count() != n {
            return Err(parse_err(i + 3, format!("row has {} cells, expected {n}", row.len())));
        }
        for ch in row.chars() {
            cells.push(match ch {
                '.' => Cell::Empty,
                'X' => Cell::Stone(Player::Black),
                'O' => Cell::Stone(Player::White),
                other => return Err(parse_err(i + 3, format!("unexpected {other:?}"))),
            });
        }
    }
    let last_move = match last {
        Some((r, c)) if r < n && c < n => Some(r * n + c),
        Some(_) => return Err(parse_err(2, "last move outside the board")),
        None => None,
    };
    let state = GameState::from_cells(config, cells, last_move)?;
    if state.to_move() != to_move {
        return Err(parse_err(1, "to_move disagrees with the stone counts"));
    }
    Ok(state)
}

pub fn render(state: &GameState) -> String {
    let n = state.size();
    let mut out = format!("to_move: {}\n", state.to_move().symbol());
    match state.last_move() {
        Some(i) => out.push_str(&format!("last: {},{}\n", i / n, i % n)),
        None => out.push_str("last: none\n"),
    }
    for r in 0..n {
        for c in 0..n {
            out.push(match state.at(r, c) {
                Cell::Empty => '.',
                Cell::Stone(p) => p.symbol(),
            });
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::board::{new_game, GameStatus};

    #[test]
    fn render_parse_round_trip() {
        let mut g = new_game(BoardConfig::default());
        for m in [27, 36, 35, 44] {
            g.apply(m).unwrap();
        }
        let text = render(&g);
        assert_eq!(parse(&text).unwrap(), g);
        assert!(text.starts_with("to_move: X\nlast: 5,4\n"));
    }

    #[test]
    fn parse_detects_win() {
        let text = "to_move: O\nlast: 2,5\n........\n........\n.XXXXX..\n........\n\
                    ........\n.OOOO...\n........\n........\n";
        assert_eq!(parse(text).unwrap().status(), GameStatus::Win(Player::Black));
    }

    #[test]
    fn rejects_malformed() {
        assert!(parse("to_move: Z\nlast: none\n").is_err());
        assert!(parse("to_move: X\nlast: none\n.....\n....\n.....\n.....\n.....\n").is_err());
        assert!(parse("to_move: O\nlast: none\n.....\n.....\n.....\n.....\n.....\n").is_err());
        assert!(parse("to_move: X\nlast: 9,9\n.....\n.....\n.....\n.....\n.....\n").is_err());
    }
}

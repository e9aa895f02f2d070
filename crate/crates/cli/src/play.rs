//! `play`: a human against a checkpoint in the terminal.

use std::fs;
use std::io::{self, BufRead, Write};

use anyhow::Context;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use slap_core::{diagram, new_game, BoardConfig, GameState, GameStatus, Player};
use slap_mcts::{Agent, NetAgent, SearchConfig};
use slap_train::seeds::{names, sub_seed};

use crate::config::RunConfig;
use crate::{PlayArgs, Usage};

fn parse_color(s: &str) -> Option<Player> {
    match s.to_ascii_lowercase().as_str() {
        "black" | "b" | "x" => Some(Player::Black),
        "white" | "w" | "o" => Some(Player::White),
        _ => None,
    }
}

/// Parses `r,c` into a legal cell index of `state`.
pub fn parse_move(input: &str, state: &GameState) -> Result<usize, String> {
    let n = state.size();
    let (r, c) = input
        .trim()
        .split_once(',')
        .ok_or_else(|| format!("expected r,c, got {:?}", input.trim()))?;
    let r: usize = r.trim().parse().map_err(|_| format!("bad row {:?}", r.trim()))?;
    let c: usize = c.trim().parse().map_err(|_| format!("bad column {:?}", c.trim()))?;
    if r >= n || c >= n {
        return Err(format!("{r},{c} is off the {n}x{n} board"));
    }
    let index = r * n + c;
    if !state.is_legal(index) {
        return Err(format!("{r},{c} is occupied"));
    }
    Ok(index)
}

fn player_name(p: Player) -> &'static str {
    match p {
        Player::Black => "black",
        Player::White => "white",
    }
}

/// Alternates human input and agent replies until the game ends or the
/// input is exhausted.
pub fn session(
    mut state: GameState,
    human: Player,
    agent: &mut dyn Agent,
    input: &mut impl BufRead,
    out: &mut impl Write,
) -> anyhow::Result<GameStatus> {
    let n = state.size();
    while !state.is_terminal() {
        write!(out, "{}", diagram::render(&state))?;
        if state.to_move() == human {
            let index = loop {
                write!(out, "your move ({}) as r,c: ", player_name(human))?;
                out.flush()?;
                let mut line = String::new();
                if input.read_line(&mut line)? == 0 {
                    writeln!(out)?;
                    writeln!(out, "input closed, session ended")?;
                    return Ok(GameStatus::Ongoing);
                }
                match parse_move(&line, &state) {
                    Ok(index) => break index,
                    Err(e) => writeln!(out, "invalid move: {e}")?,
                }
            };
            state.apply(index)?;
        } else {
            let index = agent.select_move(&state)?;
            state.apply(index)?;
            writeln!(out, "agent plays {},{}", index / n, index % n)?;
        }
    }
    write!(out, "{}", diagram::render(&state))?;
    match state.status() {
        GameStatus::Win(p) if p == human => writeln!(out, "{} wins: you win", player_name(p))?,
        GameStatus::Win(p) => writeln!(out, "{} wins: the agent wins", player_name(p))?,
        _ => writeln!(out, "draw")?,
    }
    Ok(state.status())
}

pub fn run(mut cfg: RunConfig, args: PlayArgs) -> anyhow::Result<()> {
    if let Some(mode) = args.mode {
        cfg.mode = mode;
    }
    if let Some(p) = args.playouts {
        cfg.eval.playouts = p;
    }
    let human = parse_color(&args.human_color)
        .ok_or_else(|| Usage(format!("unknown colour {:?}, expected black or white", args.human_color)))?;
    let ckpt = slap_net::load(&args.checkpoint)
        .with_context(|| format!("loading checkpoint {}", args.checkpoint.display()))?;
    let board = BoardConfig::new(ckpt.net.config().board_size)?;
    let state = match &args.start {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let s = diagram::parse(&text).map_err(|e| Usage(format!("invalid start diagram: {e}")))?;
            if s.size() != board.size() {
                return Err(Usage("start diagram and checkpoint board sizes differ".into()).into());
            }
            s
        }
        None => new_game(board),
    };
    let search = SearchConfig::evaluation(cfg.eval.playouts);
    let rng = ChaCha8Rng::seed_from_u64(sub_seed(cfg.seed, names::EVAL));
    let mut agent = NetAgent::new(ckpt.net, cfg.mode, search, rng).map_err(|e| Usage(e.to_string()))?;
    let stdin = io::stdin();
    let stdout = io::stdout();
    session(state, human, &mut agent, &mut stdin.lock(), &mut stdout.lock())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use slap_mcts::RandomAgent;

    fn random() -> RandomAgent<ChaCha8Rng> {
        RandomAgent {
            rng: ChaCha8Rng::seed_from_u64(1),
        }
    }

    #[test]
    fn move_parsing() {
        let mut s = new_game(BoardConfig::default());
        assert_eq!(parse_move("2,3\n", &s), Ok(19));
        assert_eq!(parse_move(" 7 , 7 ", &s), Ok(63));
        assert!(parse_move("8,0", &s).is_err());
        assert!(parse_move("a,b", &s).is_err());
        assert!(parse_move("3", &s).is_err());
        s.apply(19).unwrap();
        assert!(parse_move("2,3", &s).is_err());
    }

    #[test]
    fn bad_input_is_reprompted_and_a_win_announced() {
        let start = "to_move: X\nlast: none\nXXXX....\nOOOO....\n........\n........\n........\n........\n........\n........\n";
        let state = diagram::parse(start).unwrap();
        let mut input = "9,9\nhello\n1,0\n0,4\n".as_bytes();
        let mut out = Vec::new();
        let status = session(state, Player::Black, &mut random(), &mut input, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(status, GameStatus::Win(Player::Black));
        assert_eq!(text.matches("invalid move").count(), 3);
        assert!(text.ends_with("black wins: you win\n"));
    }

    #[test]
    fn eof_ends_the_session() {
        let mut out = Vec::new();
        let status = session(
            new_game(BoardConfig::default()),
            Player::White,
            &mut random(),
            &mut "".as_bytes(),
            &mut out,
        )
        .unwrap();
        assert_eq!(status, GameStatus::Ongoing);
        let text = String::from_utf8(out).unwrap();
        assert!(text.contains("agent plays"));
        assert!(text.ends_with("session ended\n"));
    }
}

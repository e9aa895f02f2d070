//! Matches between agents, tiered evaluation against pure MCTS and the
//! winning-rate confidence interval.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use slap_core::{new_game, BoardConfig, GameStatus, Player};
use slap_mcts::{Agent, PureMctsAgent};

use crate::seeds::{indexed_seed, names};

/// Standard normal quantile for a two-sided 95% interval.
pub const Z_95: f64 = 1.96;
pub const DEFAULT_TIERS: [usize; 3] = [1000, 3000, 5000];
pub const GAMES_PER_TIER: usize = 10;

/// `(wins + ties / 2) / games`.
pub fn winning_rate(wins: usize, ties: usize, games: usize) -> f64 {
    if games == 0 {
        return 0.0;
    }
    (wins as f64 + 0.5 * ties as f64) / games as f64
}

/// `p ± z·√(p(1−p)/n)` clamped to `[0, 1]`.
pub fn confidence_interval(p: f64, n: usize) -> (f64, f64) {
    let half = Z_95 * (p * (1.0 - p) / n as f64).sqrt();
    ((p - half).max(0.0), (p + half).min(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameRecord {
    pub game: usize,
    pub seed: u64,
    /// Whether the first agent played black.
    pub a_black: bool,
    pub moves: Vec<usize>,
    /// `"a"`, `"b"` or `"draw"`.
    pub result: String,
    /// Set when an agent failed or chose an illegal move and lost by it.
    pub forfeit: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub a_wins: usize,
    pub ties: usize,
    pub b_wins: usize,
    pub games: Vec<GameRecord>,
}

impl MatchResult {
    /// Rate of the first agent, ties counting half.
    pub fn rate(&self) -> f64 {
        winning_rate(self.a_wins, self.ties, self.games.len())
    }
}

/// Plays one game; an agent error or illegal move forfeits the game.
pub fn play_game(a: &mut dyn Agent, b: &mut dyn Agent, a_black: bool, board: BoardConfig) -> (Vec<usize>, Option<bool>, Option<String>) {
    let mut state = new_game(board);
    let mut moves = Vec::new();
    while !state.is_terminal() {
        let a_turn = (state.to_move() == Player::Black) == a_black;
        let agent: &mut dyn Agent = if a_turn { &mut *a } else { &mut *b };
        let chosen = agent.select_move(&state);
        match chosen {
            Ok(m) if state.is_legal(m) => {
                state.apply(m).expect("checked legal");
                moves.push(m);
            }
            other => {
                let why = match other {
                    Ok(m) => format!("{} chose illegal cell {m}", agent.name()),
                    Err(e) => format!("{} failed: {e}", agent.name()),
                };
                return (moves, Some(!a_turn), Some(why));
            }
        }
    }
    let a_won = match state.status() {
        GameStatus::Win(p) => Some((p == Player::Black) == a_black),
        _ => None,
    };
    (moves, a_won, None)
}

/// `n_games` games with colours alternating, the first agent black in even
/// games. Each game gets its own seed, so results do not depend on how the
/// games are spread over `workers` threads.
pub fn play_match<FA, FB>(
    make_a: FA,
    make_b: FB,
    n_games: usize,
    seed: u64,
    board: BoardConfig,
    workers: usize,
) -> MatchResult
where
    FA: Fn(u64) -> Box<dyn Agent> + Sync,
    FB: Fn(u64) -> Box<dyn Agent> + Sync,
{
    let play = |game: usize| {
        let gs = indexed_seed(seed, names::EVAL, game as u64);
        let mut a = make_a(gs);
        let mut b = make_b(gs ^ 0xb);
        let a_black = game % 2 == 0;
        let (moves, a_won, forfeit) = play_game(a.as_mut(), b.as_mut(), a_black, board);
        GameRecord {
            game,
            seed: gs,
            a_black,
            moves,
            result: match a_won {
                Some(true) => "a",
                Some(false) => "b",
                None => "draw",
            }
            .into(),
            forfeit,
        }
    };
    let workers = workers.clamp(1, n_games.max(1));
    let mut games: Vec<GameRecord> = if workers == 1 {
        (0..n_games).map(play).collect()
    } else {
        std::thread::scope(|s| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    let play = &play;
                    s.spawn(move || (w..n_games).step_by(workers).map(play).collect::<Vec<_>>())
                })
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("evaluation worker panicked"))
                .collect()
        })
    };
    games.sort_by_key(|g| g.game);
    let count = |r: &str| games.iter().filter(|g| g.result == r).count();
    MatchResult {
        a_wins: count("a"),
        ties: count("draw"),
        b_wins: count("b"),
        games,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TierResult {
    pub playouts: usize,
    pub wins: usize,
    pub ties: usize,
    pub losses: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub tiers: Vec<TierResult>,
    pub rate: f64,
    pub ci: [f64; 2],
    pub seed: u64,
    pub checkpoint: Option<String>,
}

impl EvalReport {
    /// Rate and interval recomputed from tier counts alone.
    pub fn from_tiers(tiers: Vec<TierResult>, seed: u64, checkpoint: Option<String>) -> Self {
        let wins: usize = tiers.iter().map(|t| t.wins).sum();
        let ties: usize = tiers.iter().map(|t| t.ties).sum();
        let games: usize = tiers.iter().map(|t| t.wins + t.ties + t.losses).sum();
        let rate = winning_rate(wins, ties, games);
        let (lo, hi) = confidence_interval(rate, games.max(1));
        Self {
            tiers,
            rate,
            ci: [lo, hi],
            seed,
            checkpoint,
        }
    }
}

/// `games_per_tier` games of the agent against pure MCTS at each playout
/// count. Returns the report and every game, tier by tier.
pub fn evaluate_tiers<F>(
    make_agent: F,
    tiers: &[usize],
    games_per_tier: usize,
    seed: u64,
    board: BoardConfig,
    workers: usize,
) -> (EvalReport, Vec<(usize, MatchResult)>)
where
    F: Fn(u64) -> Box<dyn Agent> + Sync,
{
    let mut results = Vec::new();
    let mut counts = Vec::new();
    for (i, &playouts) in tiers.iter().enumerate() {
        let tier_seed = indexed_seed(seed, "tier", i as u64);
        let m = play_match(
            &make_agent,
            |s| Box::new(PureMctsAgent::new(playouts, s)) as Box<dyn Agent>,
            games_per_tier,
            tier_seed,
            board,
            workers,
        );
        counts.push(TierResult {
            playouts,
            wins: m.a_wins,
            ties: m.ties,
            losses: m.b_wins,
        });
        results.push((playouts, m));
    }
    (EvalReport::from_tiers(counts, seed, None), results)
}

/// Portable replay trace: one header and one move line per game, moves as
/// `r,c` in play order.
pub fn move_log(board: BoardConfig, a_name: &str, b_name: &str, label: &str, games: &[GameRecord]) -> String {
    let n = board.size();
    let mut out = String::new();
    for g in games {
        let (black, white) = if g.a_black { (a_name, b_name) } else { (b_name, a_name) };
        let _ = writeln!(
            out,
            "# {label} game {} seed {} black {black} white {white} result {}{}",
            g.game,
            g.seed,
            g.result,
            g.forfeit.as_deref().map(|f| format!(" forfeit: {f}")).unwrap_or_default()
        );
        let moves: Vec<String> = g.moves.iter().map(|&m| format!("{},{}", m / n, m % n)).collect();
        let _ = writeln!(out, "{}", moves.join(" "));
    }
    out
}

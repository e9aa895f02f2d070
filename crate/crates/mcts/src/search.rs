//! PUCT tree search.
//!
//! Nodes live in one arena; the children of a node are contiguous. Each
//! edge stores the value from the point of view of the player who chose it,
//! so selection always maximizes. A fresh tree is built for every move.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use slap_core::{GameState, GameStatus};

use crate::config::SearchConfig;
use crate::error::MctsError;
use crate::evaluator::{Evaluation, Evaluator};

/// `Q + c · P · √ΣN / (1 + N)`.
pub fn puct_score(q: f64, prior: f64, visits: u32, parent_visits: u32, c: f64) -> f64 {
    q + c * prior * (parent_visits as f64).sqrt() / (1.0 + visits as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub action: usize,
    pub prior: f64,
    pub visits: u32,
    /// Sum of backed-up values, from the perspective of the player who
    /// played `action`.
    pub value_sum: f64,
    first_child: usize,
    num_children: usize,
    expanded: bool,
}

impl Node {
    fn new(action: usize, prior: f64) -> Self {
        Self {
            action,
            prior,
            visits: 0,
            value_sum: 0.0,
            first_child: 0,
            num_children: 0,
            expanded: false,
        }
    }

    /// Mean value, 0 before the first visit.
    pub fn q(&self) -> f64 {
        if self.visits == 0 {
            0.0
        } else {
            self.value_sum / self.visits as f64
        }
    }
}

#[derive(Debug, Clone)]
pub struct SearchTree {
    nodes: Vec<Node>,
    cells: usize,
}

/// Root statistics after a search.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    /// Child visit counts indexed by cell; zero on illegal cells.
    pub visits: Vec<u32>,
    pub root_visits: u32,
    /// Root priors after any noise, indexed by cell.
    pub priors: Vec<f32>,
    /// Mean value of each child from the root player's side, indexed by cell.
    pub q: Vec<f64>,
}

impl SearchTree {
    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }

    pub fn children(&self, node: usize) -> &[Node] {
        let n = &self.nodes[node];
        &self.nodes[n.first_child..n.first_child + n.num_children]
    }

    fn expand(&mut self, node: usize, state: &GameState, eval: &Evaluation) {
        let n = state.size();
        let mut children: Vec<(usize, usize)> = state
            .legal_moves()
            .into_iter()
            .map(|a| (eval.frame.map_index(a, n), a))
            .collect();
        children.sort_unstable();
        let first = self.nodes.len();
        for &(_, a) in &children {
            self.nodes.push(Node::new(a, eval.priors[a] as f64));
        }
        let parent = &mut self.nodes[node];
        parent.first_child = first;
        parent.num_children = children.len();
        parent.expanded = true;
    }

    fn select_child(&self, node: usize, c: f64) -> usize {
        let n = &self.nodes[node];
        let range = n.first_child..n.first_child + n.num_children;
        let total: u32 = self.nodes[range.clone()].iter().map(|ch| ch.visits).sum();
        let mut best = (range.start, f64::NEG_INFINITY);
        for i in range {
            let ch = &self.nodes[i];
            let u = puct_score(ch.q(), ch.prior, ch.visits, total, c);
            if u > best.1 {
                best = (i, u);
            }
        }
        best.0
    }

    fn result(&self) -> SearchResult {
        let mut visits = vec![0; self.cells];
        let mut priors = vec![0.0; self.cells];
        let mut q = vec![0.0; self.cells];
        for ch in self.children(0) {
            visits[ch.action] = ch.visits;
            priors[ch.action] = ch.prior as f32;
            q[ch.action] = ch.q();
        }
        SearchResult {
            visits,
            root_visits: self.nodes[0].visits,
            priors,
            q,
        }
    }
}

/// Mixes `Dir(alpha)` noise into the priors of the root's children.
fn add_root_noise(tree: &mut SearchTree, alpha: f64, eps: f64, rng: &mut impl Rng) {
    let gamma = Gamma::new(alpha, 1.0).expect("alpha validated positive");
    let root = tree.nodes[0].clone();
    let range = root.first_child..root.first_child + root.num_children;
    let draws: Vec<f64> = range.clone().map(|_| gamma.sample(rng)).collect();
    let total: f64 = draws.iter().sum();
    for (i, d) in range.zip(draws) {
        let eta = if total > 0.0 { d / total } else { 1.0 / root.num_children as f64 };
        let ch = &mut tree.nodes[i];
        ch.prior = (1.0 - eps) * ch.prior + eps * eta;
    }
}

/// Value of a finished game for the player to move in it.
fn terminal_value(state: &GameState) -> f64 {
    match state.status() {
        GameStatus::Win(p) if p == state.to_move() => 1.0,
        GameStatus::Win(_) => -1.0,
        _ => 0.0,
    }
}

/// Runs `cfg.n_playouts` playouts from `root`; the first one expands the
/// root. Root noise is drawn from `noise_rng` if `cfg.root_noise` is set.
pub fn run_playouts<E: Evaluator + ?Sized, R: Rng>(
    root: &GameState,
    evaluator: &mut E,
    cfg: &SearchConfig,
    noise_rng: Option<&mut R>,
) -> Result<(SearchTree, SearchResult), MctsError> {
    cfg.validate()?;
    if root.is_terminal() {
        return Err(MctsError::TerminalRoot);
    }
    let cells = root.config().cells();
    let mut tree = SearchTree {
        nodes: vec![Node::new(usize::MAX, 1.0)],
        cells,
    };
    let eval = checked(evaluator.evaluate(root)?, cells)?;
    tree.expand(0, root, &eval);
    // The root's own value is not used by selection.
    tree.nodes[0].visits = 1;
    if cfg.root_noise {
        if let Some(rng) = noise_rng {
            add_root_noise(&mut tree, cfg.dirichlet_alpha, cfg.dirichlet_epsilon, rng);
        }
    }

    let mut path = Vec::with_capacity(cells + 1);
    for _ in 1..cfg.n_playouts {
        path.clear();
        path.push(0);
        let mut node = 0;
        let mut state = root.clone();
        while tree.nodes[node].expanded && !state.is_terminal() {
            node = tree.select_child(node, cfg.c_puct);
            state.apply(tree.nodes[node].action)?;
            path.push(node);
        }
        // Value for the player to move at the leaf.
        let mut value = if state.is_terminal() {
            terminal_value(&state)
        } else {
            let eval = checked(evaluator.evaluate(&state)?, cells)?;
            tree.expand(node, &state, &eval);
            eval.value as f64
        };
        for &i in path.iter().rev() {
            let n = &mut tree.nodes[i];
            n.visits += 1;
            n.value_sum -= value;
            value = -value;
        }
    }
    let result = tree.result();
    Ok((tree, result))
}

fn checked(eval: Evaluation, cells: usize) -> Result<Evaluation, MctsError> {
    if eval.priors.len() != cells {
        return Err(MctsError::PriorLength {
            expected: cells,
            actual: eval.priors.len(),
        });
    }
    Ok(eval)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn puct_examples() {
        assert_eq!(puct_score(0.5, 0.2, 3, 16, 5.0), 1.5);
        assert_eq!(puct_score(0.0, 0.7, 0, 0, 5.0), 0.0);
        assert_eq!(puct_score(-0.3, 0.0, 4, 100, 5.0), -0.3);
    }
}

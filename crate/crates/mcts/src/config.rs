use serde::{Deserialize, Serialize};

use crate::error::MctsError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub c_puct: f64,
    /// Playouts per move, the root expansion included.
    pub n_playouts: usize,
    pub dirichlet_alpha: f64,
    pub dirichlet_epsilon: f64,
    pub temperature: f64,
    /// Mix Dirichlet noise into the root priors. On for self-play, off for
    /// evaluation.
    pub root_noise: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            c_puct: 5.0,
            n_playouts: 400,
            dirichlet_alpha: 0.3,
            dirichlet_epsilon: 0.25,
            temperature: 1.0,
            root_noise: true,
        }
    }
}

impl SearchConfig {
    /// Evaluation settings: no root noise and `n_playouts` playouts.
    pub fn evaluation(n_playouts: usize) -> Self {
        Self {
            n_playouts,
            root_noise: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), MctsError> {
        let bad = |m: &str| Err(MctsError::InvalidConfig(m.to_string()));
        if !(self.c_puct > 0.0) {
            return bad("c_puct must be positive");
        }
        if self.n_playouts == 0 {
            return bad("n_playouts must be positive");
        }
        if !(self.dirichlet_alpha > 0.0) || !(0.0..=1.0).contains(&self.dirichlet_epsilon) {
            return bad("dirichlet_alpha must be positive and dirichlet_epsilon in [0, 1]");
        }
        if !(self.temperature > 0.0) {
            return bad("temperature must be positive");
        }
        Ok(())
    }
}

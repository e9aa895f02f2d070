use serde::{Deserialize, Serialize};

use crate::error::NetError;

/// Shape of the policy-value network.
///
/// With `num_res_blocks == 0` the trunk is the plain `common_filters` stack of
/// 3×3 convolutions. Otherwise a bias-free 3×3 stem of `res_filters` channels
/// is followed by that many residual blocks, each two 3×3 convolutions with an
/// identity skip.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetConfig {
    pub in_channels: usize,
    pub board_size: usize,
    pub common_filters: Vec<usize>,
    pub num_res_blocks: usize,
    pub res_filters: usize,
    /// Adds a hidden layer between the policy convolution and the logits.
    pub extra_act_fc: bool,
    pub policy_filters: usize,
    pub policy_hidden: usize,
    pub value_filters: usize,
    pub value_hidden: usize,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self {
            in_channels: 4,
            board_size: 8,
            common_filters: vec![32, 64, 128],
            num_res_blocks: 0,
            res_filters: 256,
            extra_act_fc: false,
            policy_filters: 4,
            policy_hidden: 64,
            value_filters: 2,
            value_hidden: 64,
        }
    }
}

impl NetConfig {
    pub fn validate(&self) -> Result<(), NetError> {
        let bad = |msg: &str| Err(NetError::InvalidConfig(msg.to_string()));
        if self.in_channels == 0 {
            return bad("in_channels must be positive");
        }
        if self.board_size < 2 {
            return bad("board_size must be at least 2");
        }
        if self.num_res_blocks == 0 && self.common_filters.is_empty() {
            return bad("common_filters must not be empty");
        }
        if self.common_filters.contains(&0) || self.res_filters == 0 {
            return bad("filter counts must be positive");
        }
        if self.policy_filters == 0 || self.value_filters == 0 || self.value_hidden == 0 {
            return bad("head sizes must be positive");
        }
        if self.extra_act_fc && self.policy_hidden == 0 {
            return bad("policy_hidden must be positive");
        }
        Ok(())
    }

    pub fn area(&self) -> usize {
        self.board_size * self.board_size
    }

    /// Channel count coming out of the shared trunk.
    pub fn trunk_channels(&self) -> usize {
        if self.num_res_blocks > 0 {
            self.res_filters
        } else {
            *self.common_filters.last().expect("validated")
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Adam,
    Sgd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainHyper {
    pub optimizer: OptimizerKind,
    pub lr: f64,
    /// Weight decay, added to the gradient as an L2 penalty.
    pub l2: f64,
    pub dropout: f64,
    pub batch_size: usize,
    pub lr_multiplier: f64,
    pub autoclip: bool,
    pub clip_percentile: f64,
}

impl Default for TrainHyper {
    fn default() -> Self {
        Self {
            optimizer: OptimizerKind::Adam,
            lr: 1e-3,
            l2: 1e-4,
            dropout: 0.0,
            batch_size: 512,
            lr_multiplier: 1.0,
            autoclip: true,
            clip_percentile: 10.0,
        }
    }
}

impl TrainHyper {
    pub fn validate(&self) -> Result<(), NetError> {
        let bad = |msg: &str| Err(NetError::InvalidHyper(msg.to_string()));
        if !(self.lr * self.lr_multiplier > 0.0) {
            return bad("lr * lr_multiplier must be positive");
        }
        if !(self.l2 >= 0.0) {
            return bad("l2 must be non-negative");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must lie in [0, 1)");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if !(0.0..=100.0).contains(&self.clip_percentile) {
            return bad("clip_percentile must lie in [0, 100]");
        }
        Ok(())
    }

    /// Step size actually applied by the optimizer.
    pub fn effective_lr(&self) -> f64 {
        self.lr * self.lr_multiplier
    }
}

//! Run configuration file: every tunable of the commands, one TOML document.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};
use slap_core::BoardConfig;
use slap_mcts::{Mode, SearchConfig};
use slap_net::{NetConfig, OptimizerKind, TrainHyper};
use slap_train::seeds::{names, sub_seed};
use slap_train::selfplay::{PipelineConfig, RlSchedule};
use slap_train::supervised::SupervisedConfig;

use crate::Usage;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    /// Root seed; every random stream is derived from it by name.
    pub seed: u64,
    pub workers: usize,
    pub out: PathBuf,
    pub board_size: usize,
    pub mode: Mode,
    pub model: ModelConfig,
    pub net: NetShape,
    pub search: SearchConfig,
    pub schedule: RlSchedule,
    pub synth: SynthConfig,
    pub eval: EvalConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            seed: 0,
            workers: 1,
            out: PathBuf::from("runs"),
            board_size: 8,
            mode: Mode::Slap,
            model: ModelConfig::default(),
            net: NetShape::default(),
            search: SearchConfig::default(),
            schedule: RlSchedule::default(),
            synth: SynthConfig::default(),
            eval: EvalConfig::default(),
        }
    }
}

/// Hyperparameters under their grid names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub extra_act_fc: bool,
    #[serde(rename = "L2")]
    pub l2: f64,
    #[serde(rename = "Num_ResBlock")]
    pub num_res_block: usize,
    #[serde(rename = "SGD")]
    pub sgd: bool,
    pub lr: f64,
    pub dropout: f64,
    /// Unset: on for self-play training, off for synthetic runs.
    pub autoclip: Option<bool>,
    pub clip_percentile: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        let h = TrainHyper::default();
        Self {
            extra_act_fc: false,
            l2: h.l2,
            num_res_block: 0,
            sgd: false,
            lr: h.lr,
            dropout: h.dropout,
            autoclip: None,
            clip_percentile: h.clip_percentile,
        }
    }
}

/// Layer widths of the network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetShape {
    pub common_filters: Vec<usize>,
    pub res_filters: usize,
    pub policy_filters: usize,
    pub policy_hidden: usize,
    pub value_filters: usize,
    pub value_hidden: usize,
}

impl Default for NetShape {
    fn default() -> Self {
        let n = NetConfig::default();
        Self {
            common_filters: n.common_filters,
            res_filters: n.res_filters,
            policy_filters: n.policy_filters,
            policy_hidden: n.policy_hidden,
            value_filters: n.value_filters,
            value_hidden: n.value_hidden,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    /// One generated set per seed.
    pub seeds: Vec<u64>,
    pub split_seed: u64,
    /// A directory written by `synth build`; generated in memory when unset.
    pub dataset: Option<PathBuf>,
    /// Overrides `mode` for synthetic runs when set.
    pub use_slap: Option<bool>,
    pub iterations: u64,
    pub eval_every: u64,
    pub train_size: Option<usize>,
    pub stop_below: Option<f64>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seeds: (1..=8).collect(),
            split_seed: 0,
            dataset: None,
            use_slap: None,
            iterations: 1000,
            eval_every: 10,
            train_size: None,
            stop_below: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Pure-MCTS opponent playouts, one tier each.
    pub tiers: Vec<usize>,
    pub games_per_tier: usize,
    /// Playouts of the network agent.
    pub playouts: usize,
    /// Evaluate during training every this many games.
    pub every_games: Option<u64>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            tiers: slap_train::eval::DEFAULT_TIERS.to_vec(),
            games_per_tier: slap_train::eval::GAMES_PER_TIER,
            playouts: 400,
            every_games: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Usage(format!("invalid config: {e}")))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(Usage(format!(
                "unsupported schema_version {}, expected {SCHEMA_VERSION}",
                cfg.schema_version
            ))
            .into());
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    pub fn board(&self) -> anyhow::Result<BoardConfig> {
        BoardConfig::new(self.board_size).map_err(|e| Usage(e.to_string()).into())
    }

    pub fn net_config(&self, mode: Mode) -> NetConfig {
        NetConfig {
            in_channels: mode.in_channels(),
            board_size: self.board_size,
            common_filters: self.net.common_filters.clone(),
            num_res_blocks: self.model.num_res_block,
            res_filters: self.net.res_filters,
            extra_act_fc: self.model.extra_act_fc,
            policy_filters: self.net.policy_filters,
            policy_hidden: self.net.policy_hidden,
            value_filters: self.net.value_filters,
            value_hidden: self.net.value_hidden,
        }
    }

    pub fn hyper(&self, batch_size: usize, autoclip_default: bool) -> TrainHyper {
        TrainHyper {
            optimizer: if self.model.sgd { OptimizerKind::Sgd } else { OptimizerKind::Adam },
            lr: self.model.lr,
            l2: self.model.l2,
            dropout: self.model.dropout,
            batch_size,
            lr_multiplier: 1.0,
            autoclip: self.model.autoclip.unwrap_or(autoclip_default),
            clip_percentile: self.model.clip_percentile,
        }
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            mode: self.mode,
            net: self.net_config(self.mode),
            hyper: self.hyper(self.schedule.batch_size, true),
            search: self.search.clone(),
            schedule: self.schedule.clone(),
            seed: self.seed,
        }
    }

    pub fn synth_mode(&self) -> Mode {
        match self.synth.use_slap {
            Some(true) => Mode::Slap,
            Some(false) => Mode::Augment8,
            None => self.mode,
        }
    }

    pub fn supervised(&self) -> SupervisedConfig {
        let mode = self.synth_mode();
        SupervisedConfig {
            mode,
            net: self.net_config(mode),
            hyper: self.hyper(TrainHyper::default().batch_size, false),
            iterations: self.synth.iterations,
            eval_every: self.synth.eval_every,
            stop_below: self.synth.stop_below,
            train_size: self.synth.train_size,
            net_seed: sub_seed(self.seed, names::NET_INIT),
            sample_seed: sub_seed(self.seed, names::SAMPLING),
        }
    }

    /// Writes the effective configuration into a run directory.
    pub fn snapshot(&self, dir: &Path) -> anyhow::Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("config.toml"), self.to_toml())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips() {
        let cfg = RunConfig::default();
        assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn non_default_round_trips() {
        let mut cfg = RunConfig::default();
        cfg.mode = Mode::SlapCc;
        cfg.model.l2 = 1e-5;
        cfg.model.lr = 0.1;
        cfg.model.autoclip = Some(false);
        cfg.model.dropout = 0.3;
        cfg.search.dirichlet_alpha = 0.17;
        cfg.schedule = RlSchedule::stage2(Mode::SlapCc);
        cfg.synth.dataset = Some("data/synth".into());
        cfg.synth.stop_below = Some(2.9);
        cfg.synth.train_size = Some(2516);
        cfg.eval.every_games = Some(50);
        cfg.seed = u64::MAX >> 1;
        assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn grid_names_are_used_in_the_file() {
        let text = RunConfig::default().to_toml();
        for key in ["L2 =", "Num_ResBlock =", "SGD =", "extra_act_fc =", "dropout =", "lr ="] {
            assert!(text.contains(key), "{key} missing from\n{text}");
        }
    }

    #[test]
    fn unknown_keys_and_versions_are_rejected() {
        assert!(RunConfig::from_toml("schema_version = 1\nseeed = 3\n").is_err());
        assert!(RunConfig::from_toml("schema_version = 1\n[model]\nl2 = 0.1\n").is_err());
        assert!(RunConfig::from_toml("schema_version = 2\n").is_err());
        let partial = RunConfig::from_toml("seed = 7\n[model]\nL2 = 0.001\n").unwrap();
        assert_eq!((partial.seed, partial.model.l2), (7, 1e-3));
    }

    #[test]
    fn derived_configs_validate() {
        let mut cfg = RunConfig::default();
        for mode in [Mode::Augment8, Mode::Slap, Mode::SlapCc] {
            cfg.mode = mode;
            cfg.pipeline().validate().unwrap();
            cfg.supervised().validate().unwrap();
            assert!(cfg.pipeline().hyper.autoclip);
            assert!(!cfg.supervised().hyper.autoclip);
        }
        cfg.synth.use_slap = Some(false);
        assert_eq!(cfg.supervised().mode, Mode::Augment8);
    }
}

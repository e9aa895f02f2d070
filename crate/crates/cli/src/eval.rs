//! `eval`: a checkpoint against pure MCTS tiers.

use std::fs;
use std::path::Path;

use anyhow::Context;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use slap_core::BoardConfig;
use slap_mcts::{Agent, Mode, NetAgent, SearchConfig};
use slap_net::Network;
use slap_train::eval::{evaluate_tiers, move_log, EvalReport};
use slap_train::seeds::{names, sub_seed};
use slap_train::TrainError;

use crate::config::RunConfig;
use crate::{EvalArgs, Usage};

/// Plays the configured tiers and writes `<label>.json` plus one move log per
/// tier into `dir`.
pub fn evaluate_network(
    cfg: &RunConfig,
    net: &Network,
    mode: Mode,
    dir: &Path,
    label: &str,
    checkpoint: Option<String>,
) -> Result<EvalReport, TrainError> {
    let board = BoardConfig::new(net.config().board_size)?;
    let search = SearchConfig::evaluation(cfg.eval.playouts);
    // Fails early on a mode the network cannot take.
    NetAgent::new(net, mode, search.clone(), ChaCha8Rng::seed_from_u64(0))?;
    let make = |seed: u64| {
        let agent = NetAgent::new(net.clone(), mode, search.clone(), ChaCha8Rng::seed_from_u64(seed))
            .expect("checked above");
        Box::new(agent) as Box<dyn Agent>
    };
    let seed = sub_seed(cfg.seed, names::EVAL);
    let (mut report, games) = evaluate_tiers(make, &cfg.eval.tiers, cfg.eval.games_per_tier, seed, board, cfg.workers);
    report.checkpoint = checkpoint;
    fs::create_dir_all(dir)?;
    fs::write(dir.join(format!("{label}.json")), serde_json::to_vec_pretty(&report)?)?;
    for (playouts, m) in &games {
        let tier = format!("tier-{playouts}");
        let log = move_log(board, "net", &format!("pure-{playouts}"), &tier, &m.games);
        fs::write(dir.join(format!("{label}-{tier}.moves")), log)?;
    }
    Ok(report)
}

pub fn run(mut cfg: RunConfig, args: EvalArgs) -> anyhow::Result<()> {
    if let Some(mode) = args.mode {
        cfg.mode = mode;
    }
    if let Some(tiers) = args.tiers {
        cfg.eval.tiers = tiers;
    }
    if let Some(g) = args.games_per_tier {
        cfg.eval.games_per_tier = g;
    }
    if let Some(p) = args.playouts {
        cfg.eval.playouts = p;
    }
    if cfg.eval.tiers.is_empty() || cfg.eval.games_per_tier == 0 {
        return Err(Usage("eval needs at least one tier and one game per tier".into()).into());
    }
    cfg.search.validate().map_err(|e| Usage(e.to_string()))?;
    let ckpt = slap_net::load(&args.checkpoint)
        .with_context(|| format!("loading checkpoint {}", args.checkpoint.display()))?;
    if ckpt.net.config().in_channels != cfg.mode.in_channels() {
        return Err(Usage(format!(
            "checkpoint takes {} input planes, mode {} needs {}",
            ckpt.net.config().in_channels,
            cfg.mode.name(),
            cfg.mode.in_channels()
        ))
        .into());
    }
    cfg.board_size = ckpt.net.config().board_size;
    let label = args
        .checkpoint
        .file_stem()
        .map_or("report".into(), |s| s.to_string_lossy().into_owned());
    let dir = cfg.out.join("eval");
    let report = evaluate_network(
        &cfg,
        &ckpt.net,
        cfg.mode,
        &dir,
        &label,
        Some(args.checkpoint.display().to_string()),
    )?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

//! `train`: self-play policy iteration into a run directory.

use anyhow::Context;
use slap_train::selfplay::Pipeline;
use slap_train::synth::{build_dataset, evaluation_batch};

use crate::config::RunConfig;
use crate::{eval, TrainArgs, Usage};

pub fn run(mut cfg: RunConfig, args: TrainArgs) -> anyhow::Result<()> {
    if let Some(mode) = args.mode {
        cfg.mode = mode;
    }
    if let Some(games) = args.games {
        cfg.schedule.games = games;
    }
    if let Some(p) = args.playouts {
        cfg.search.n_playouts = p;
    }
    let pipeline_cfg = cfg.pipeline();
    pipeline_cfg.validate().map_err(|e| Usage(e.to_string()))?;
    if cfg.eval.every_games == Some(0) {
        return Err(Usage("eval.every_games must be positive".into()).into());
    }

    // Validation positions for learning-rate adaptation come from the
    // synthetic generator.
    let ds = build_dataset(cfg.board()?, &cfg.synth.seeds, cfg.synth.split_seed)?;
    let validation = evaluation_batch(&ds.validation, cfg.mode)?;

    let dir = cfg.out.clone();
    cfg.snapshot(&dir)?;
    let mut pipeline = match &args.resume {
        Some(path) => Pipeline::resume(pipeline_cfg, path, Some(validation))
            .with_context(|| format!("resuming from {}", path.display()))?,
        None => Pipeline::new(pipeline_cfg, Some(validation))?,
    };
    let mode = cfg.mode;
    let eval_dir = dir.join("eval");
    pipeline.run(Some(&dir), |p, m| {
        eprintln!(
            "game {} moves {} buffer {} step {} loss {}",
            m.game,
            m.moves,
            m.buffer_size,
            m.step,
            m.loss.map_or("-".into(), |l| format!("{l:.4}"))
        );
        if let Some(k) = cfg.eval.every_games {
            if m.game % k == 0 {
                let label = format!("game-{:06}", m.game);
                let report = eval::evaluate_network(&cfg, &p.net, mode, &eval_dir, &label, None)?;
                eprintln!("eval {label} rate {:.3}", report.rate);
            }
        }
        Ok(())
    })?;
    println!(
        "{} games, {} steps, run directory {}",
        pipeline.games_played(),
        pipeline.step(),
        dir.display()
    );
    Ok(())
}

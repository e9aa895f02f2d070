//! `synth build|train|grid` over the about-to-win dataset.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::Context;
use slap_train::datafile::{read_dataset, write_dataset};
use slap_train::grid::{run_grid, GridSpec};
use slap_train::supervised::{prepare, supervised_run, THRESHOLDS};
use slap_train::synth::{build_dataset, Dataset};

use crate::config::RunConfig;
use crate::{SynthCommand, SynthTrainArgs, Usage};

pub fn run(cfg: RunConfig, cmd: SynthCommand) -> anyhow::Result<()> {
    match cmd {
        SynthCommand::Build { seeds, split_seed } => build(cfg, seeds, split_seed),
        SynthCommand::Train(args) => train(cfg, args),
        SynthCommand::Grid { spec, dataset, iterations } => grid(cfg, &spec, dataset, iterations),
    }
}

fn build(mut cfg: RunConfig, seeds: Option<Vec<u64>>, split_seed: Option<u64>) -> anyhow::Result<()> {
    if let Some(s) = seeds {
        cfg.synth.seeds = s;
    }
    if let Some(s) = split_seed {
        cfg.synth.split_seed = s;
    }
    let ds = build_dataset(cfg.board()?, &cfg.synth.seeds, cfg.synth.split_seed)
        .map_err(|e| Usage(e.to_string()))?;
    cfg.snapshot(&cfg.out)?;
    let manifest = write_dataset(&cfg.out.join("dataset"), &ds)?;
    println!("{}", serde_json::to_string_pretty(&manifest)?);
    Ok(())
}

fn load_dataset(cfg: &RunConfig) -> anyhow::Result<Dataset> {
    match &cfg.synth.dataset {
        Some(dir) => read_dataset(dir).with_context(|| format!("reading dataset {}", dir.display())),
        None => Ok(build_dataset(cfg.board()?, &cfg.synth.seeds, cfg.synth.split_seed)
            .map_err(|e| Usage(e.to_string()))?),
    }
}

fn train(mut cfg: RunConfig, args: SynthTrainArgs) -> anyhow::Result<()> {
    if args.use_slap.is_some() {
        cfg.synth.use_slap = args.use_slap;
    }
    if let Some(d) = args.dataset {
        cfg.synth.dataset = Some(d);
    }
    if let Some(n) = args.iterations {
        cfg.synth.iterations = n;
    }
    if let Some(n) = args.train_size {
        cfg.synth.train_size = Some(n);
    }
    if let Some(t) = args.stop_below {
        cfg.synth.stop_below = Some(t);
    }
    let sup = cfg.supervised();
    sup.validate().map_err(|e| Usage(e.to_string()))?;
    let ds = load_dataset(&cfg)?;
    let data = prepare(&ds, sup.mode, sup.train_size).map_err(|e| Usage(e.to_string()))?;
    cfg.snapshot(&cfg.out)?;

    let mut curve = BufWriter::new(File::create(cfg.out.join("curve.jsonl"))?);
    let mut write_err = None;
    let label = format!("{}-seed{}", sup.mode.name(), cfg.seed);
    let record = supervised_run(&sup, &data, &label, |p| {
        eprintln!("iteration {} validation {:.4}", p.iteration, p.validation_loss);
        if write_err.is_none() {
            let line = serde_json::to_string(p).expect("curve point serializes");
            if let Err(e) = writeln!(curve, "{line}") {
                write_err = Some(e);
            }
        }
    })?;
    if let Some(e) = write_err {
        return Err(e.into());
    }
    curve.flush()?;
    fs::write(cfg.out.join("record.json"), serde_json::to_vec_pretty(&record)?)?;
    for t in THRESHOLDS {
        match record.iterations_to(t) {
            Some(i) => println!("{label}: validation loss {t} reached at iteration {i}"),
            None => println!("{label}: validation loss {t} not reached"),
        }
    }
    if let Some(l) = record.final_validation_loss {
        println!("{label}: final validation loss {l:.4} after {} iterations", record.iterations_run);
    }
    if let Some(f) = &record.failed {
        println!("{label}: failed: {f}");
    }
    Ok(())
}

fn read_spec(path: &Path) -> anyhow::Result<GridSpec> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let spec: GridSpec = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| Usage(format!("invalid grid spec: {e}")))?
    } else {
        toml::from_str(&text).map_err(|e| Usage(format!("invalid grid spec: {e}")))?
    };
    spec.validate().map_err(|e| Usage(e.to_string()))?;
    Ok(spec)
}

fn grid(mut cfg: RunConfig, spec: &Path, dataset: Option<std::path::PathBuf>, iterations: Option<u64>) -> anyhow::Result<()> {
    let spec = read_spec(spec)?;
    if let Some(d) = dataset {
        cfg.synth.dataset = Some(d);
    }
    if let Some(n) = iterations {
        cfg.synth.iterations = n;
    }
    let base = cfg.supervised();
    base.validate().map_err(|e| Usage(e.to_string()))?;
    let ds = load_dataset(&cfg)?;
    cfg.snapshot(&cfg.out)?;
    let total = spec.cardinality();
    let results = run_grid(&spec, &base, &ds, Some(&cfg.out.join("grid")), |i, r| {
        eprintln!(
            "[{}/{total}] {} final {}",
            i + 1,
            r.record.label,
            r.record.final_validation_loss.map_or("-".into(), |l| format!("{l:.4}"))
        );
    })?;
    for r in results.iter().take(10) {
        println!(
            "{} {}",
            r.record.label,
            r.record.final_validation_loss.map_or("failed".into(), |l| format!("{l:.4}"))
        );
    }
    Ok(())
}

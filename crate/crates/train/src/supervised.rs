//! Supervised training on the synthetic dataset and its convergence record.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use slap_mcts::Mode;
use slap_net::{LabeledBatch, NetConfig, NetError, Network, TrainHyper};

use crate::error::TrainError;
use crate::synth::{evaluation_batch, training_batch, Dataset};

/// Validation-loss levels whose first crossing is reported.
pub const THRESHOLDS: [f64; 2] = [3.0, 2.9];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SupervisedConfig {
    pub mode: Mode,
    pub net: NetConfig,
    pub hyper: TrainHyper,
    pub iterations: u64,
    /// Validation loss is measured every this many iterations.
    pub eval_every: u64,
    /// Stop as soon as validation loss is at or below this value.
    pub stop_below: Option<f64>,
    /// Use only the first this many training states.
    pub train_size: Option<usize>,
    pub net_seed: u64,
    pub sample_seed: u64,
}

impl Default for SupervisedConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Slap,
            net: NetConfig::default(),
            hyper: TrainHyper {
                autoclip: false,
                ..TrainHyper::default()
            },
            iterations: 1000,
            eval_every: 10,
            stop_below: None,
            train_size: None,
            net_seed: 0,
            sample_seed: 1,
        }
    }
}

impl SupervisedConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        self.net.validate()?;
        self.hyper.validate()?;
        if self.net.in_channels != self.mode.in_channels() {
            return Err(TrainError::InvalidConfig(format!(
                "mode {} needs in_channels = {}, got {}",
                self.mode.name(),
                self.mode.in_channels(),
                self.net.in_channels
            )));
        }
        if self.eval_every == 0 {
            return Err(TrainError::InvalidConfig("eval_every must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub iteration: u64,
    pub validation_loss: f64,
    /// Mean training loss over the iterations since the previous point.
    pub train_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdHit {
    pub threshold: f64,
    pub iteration: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRecord {
    pub label: String,
    pub mode: Mode,
    pub train_states: usize,
    pub train_entries: usize,
    pub iterations_run: u64,
    pub curve: Vec<CurvePoint>,
    pub thresholds: Vec<ThresholdHit>,
    pub final_validation_loss: Option<f64>,
    /// Why the run stopped early, if it failed.
    pub failed: Option<String>,
}

impl ConvergenceRecord {
    /// First recorded iteration with validation loss at or below `threshold`.
    pub fn iterations_to(&self, threshold: f64) -> Option<u64> {
        iterations_to(&self.curve, threshold)
    }
}

pub fn iterations_to(curve: &[CurvePoint], threshold: f64) -> Option<u64> {
    curve
        .iter()
        .find(|p| p.validation_loss <= threshold)
        .map(|p| p.iteration)
}

/// How much faster the first arm reached `threshold`: `iters_b / iters_a - 1`.
pub fn speedup(a: &ConvergenceRecord, b: &ConvergenceRecord, threshold: f64) -> Option<f64> {
    let ia = a.iterations_to(threshold)? as f64;
    let ib = b.iterations_to(threshold)? as f64;
    Some(ib / ia - 1.0)
}

/// A prepared supervised problem: training store and validation inputs in
/// the frame of one mode.
pub struct Prepared {
    pub mode: Mode,
    pub train_states: usize,
    pub train: LabeledBatch,
    pub validation: LabeledBatch,
}

pub fn prepare(dataset: &Dataset, mode: Mode, train_size: Option<usize>) -> Result<Prepared, TrainError> {
    let states = train_size.unwrap_or(dataset.train.len());
    if states == 0 || states > dataset.train.len() {
        return Err(TrainError::InvalidConfig(format!(
            "train size {states} outside 1..={}",
            dataset.train.len()
        )));
    }
    Ok(Prepared {
        mode,
        train_states: states,
        train: training_batch(&dataset.train[..states], mode)?,
        validation: evaluation_batch(&dataset.validation, mode)?,
    })
}

/// One train step per iteration on a batch drawn with replacement,
/// validation every `eval_every` iterations (and once before training).
/// `observe` sees each curve point as it is recorded.
pub fn supervised_run(
    cfg: &SupervisedConfig,
    data: &Prepared,
    label: &str,
    mut observe: impl FnMut(&CurvePoint),
) -> Result<ConvergenceRecord, TrainError> {
    cfg.validate()?;
    if data.mode != cfg.mode {
        return Err(TrainError::InvalidConfig("prepared data is for another mode".into()));
    }
    let mut net: Network = Network::new(cfg.net.clone(), cfg.net_seed)?;
    let mut trainer = slap_net::Trainer::new(cfg.hyper.clone(), &net, cfg.net_seed ^ 0x5eed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.sample_seed);
    let n = data.train.len();

    let mut record = ConvergenceRecord {
        label: label.to_string(),
        mode: cfg.mode,
        train_states: data.train_states,
        train_entries: n,
        iterations_run: 0,
        curve: Vec::new(),
        thresholds: Vec::new(),
        final_validation_loss: None,
        failed: None,
    };
    let first = CurvePoint {
        iteration: 0,
        validation_loss: net.evaluate_loss(&data.validation)?.loss,
        train_loss: None,
    };
    observe(&first);
    record.curve.push(first);

    let mut window = Vec::with_capacity(cfg.eval_every as usize);
    let mut indices = vec![0usize; cfg.hyper.batch_size];
    for it in 1..=cfg.iterations {
        indices.iter_mut().for_each(|i| *i = rng.random_range(0..n));
        let batch = data.train.select(&indices);
        match trainer.train_step(&mut net, &batch) {
            Ok(m) => window.push(m.loss),
            Err(e @ NetError::NonFinite { .. }) => {
                record.failed = Some(e.to_string());
                break;
            }
            Err(e) => return Err(e.into()),
        }
        record.iterations_run = it;
        if it % cfg.eval_every == 0 || it == cfg.iterations {
            let loss = net.evaluate_loss(&data.validation)?.loss;
            let point = CurvePoint {
                iteration: it,
                validation_loss: loss,
                train_loss: Some(window.iter().sum::<f64>() / window.len() as f64),
            };
            window.clear();
            observe(&point);
            record.curve.push(point);
            if !loss.is_finite() {
                record.failed = Some(format!("non-finite validation loss at iteration {it}"));
                break;
            }
            if cfg.stop_below.is_some_and(|t| loss <= t) {
                break;
            }
        }
    }
    record.final_validation_loss = record.curve.last().map(|p| p.validation_loss);
    record.thresholds = THRESHOLDS
        .iter()
        .map(|&t| ThresholdHit {
            threshold: t,
            iteration: record.iterations_to(t),
        })
        .collect();
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(iteration: u64, validation_loss: f64) -> CurvePoint {
        CurvePoint {
            iteration,
            validation_loss,
            train_loss: None,
        }
    }

    #[test]
    fn threshold_is_first_point_at_or_below() {
        let curve = vec![point(0, 4.0), point(10, 3.0), point(20, 3.1), point(30, 2.5)];
        assert_eq!(iterations_to(&curve, 3.0), Some(10));
        assert_eq!(iterations_to(&curve, 2.9), Some(30));
        assert_eq!(iterations_to(&curve, 2.0), None);
    }
}

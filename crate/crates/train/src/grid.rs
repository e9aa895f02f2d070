//! Hyperparameter grid over the supervised experiment.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use slap_mcts::Mode;
use slap_net::OptimizerKind;

use crate::error::TrainError;
use crate::supervised::{prepare, supervised_run, ConvergenceRecord, SupervisedConfig};
use crate::synth::Dataset;

/// Lists of values per hyperparameter; the grid is their product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub use_slap: Vec<bool>,
    pub extra_act_fc: Vec<bool>,
    #[serde(rename = "L2")]
    pub l2: Vec<f64>,
    #[serde(rename = "Num_ResBlock")]
    pub num_res_block: Vec<usize>,
    #[serde(rename = "SGD")]
    pub sgd: Vec<bool>,
    pub lr: Vec<f64>,
    pub dropout: Vec<f64>,
}

impl GridSpec {
    /// The full preliminary grid of 2400 combinations.
    pub fn full() -> Self {
        Self {
            use_slap: vec![true, false],
            extra_act_fc: vec![true, false],
            l2: vec![1e-3, 1e-4, 1e-5],
            num_res_block: vec![0, 5, 10, 20],
            sgd: vec![true, false],
            lr: vec![1e-1, 1e-2, 1e-3, 1e-4, 1e-5],
            dropout: vec![0.0, 0.1, 0.2, 0.3, 0.4],
        }
    }

    pub fn cardinality(&self) -> usize {
        self.use_slap.len()
            * self.extra_act_fc.len()
            * self.l2.len()
            * self.num_res_block.len()
            * self.sgd.len()
            * self.lr.len()
            * self.dropout.len()
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        if self.cardinality() == 0 {
            return Err(TrainError::InvalidConfig("every grid axis needs at least one value".into()));
        }
        if self.lr.iter().any(|&v| !(v > 0.0)) || self.l2.iter().any(|&v| !(v >= 0.0)) {
            return Err(TrainError::InvalidConfig("lr must be positive and L2 non-negative".into()));
        }
        if self.dropout.iter().any(|d| !(0.0..1.0).contains(d)) {
            return Err(TrainError::InvalidConfig("dropout must lie in [0, 1)".into()));
        }
        Ok(())
    }

    /// Every combination, in row-major order over the axes as declared.
    pub fn points(&self) -> Vec<GridPoint> {
        let mut out = Vec::with_capacity(self.cardinality());
        for &use_slap in &self.use_slap {
            for &extra_act_fc in &self.extra_act_fc {
                for &l2 in &self.l2 {
                    for &num_res_block in &self.num_res_block {
                        for &sgd in &self.sgd {
                            for &lr in &self.lr {
                                for &dropout in &self.dropout {
                                    out.push(GridPoint {
                                        use_slap,
                                        extra_act_fc,
                                        l2,
                                        num_res_block,
                                        sgd,
                                        lr,
                                        dropout,
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub use_slap: bool,
    pub extra_act_fc: bool,
    #[serde(rename = "L2")]
    pub l2: f64,
    #[serde(rename = "Num_ResBlock")]
    pub num_res_block: usize,
    #[serde(rename = "SGD")]
    pub sgd: bool,
    pub lr: f64,
    pub dropout: f64,
}

impl GridPoint {
    pub fn mode(&self) -> Mode {
        if self.use_slap {
            Mode::Slap
        } else {
            Mode::Augment8
        }
    }

    /// `s`/`n` for SLAP or not, then the residual block count and the rest.
    pub fn label(&self) -> String {
        format!(
            "{}{}_{}_fc{}_l2-{:e}_lr-{:e}_do-{}",
            if self.use_slap { 's' } else { 'n' },
            self.num_res_block,
            if self.sgd { "sgd" } else { "adam" },
            self.extra_act_fc as u8,
            self.l2,
            self.lr,
            self.dropout
        )
    }

    /// `base` with this point's hyperparameters applied.
    pub fn apply(&self, base: &SupervisedConfig) -> SupervisedConfig {
        let mut cfg = base.clone();
        cfg.mode = self.mode();
        cfg.net.in_channels = self.mode().in_channels();
        cfg.net.extra_act_fc = self.extra_act_fc;
        cfg.net.num_res_blocks = self.num_res_block;
        cfg.hyper.l2 = self.l2;
        cfg.hyper.optimizer = if self.sgd { OptimizerKind::Sgd } else { OptimizerKind::Adam };
        cfg.hyper.lr = self.lr;
        cfg.hyper.dropout = self.dropout;
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub point: GridPoint,
    pub record: ConvergenceRecord,
}

/// Best final validation loss first; failed or unfinished runs last.
pub fn rank(results: &mut [GridResult]) {
    let key = |r: &GridResult| match (&r.record.failed, r.record.final_validation_loss) {
        (None, Some(l)) if l.is_finite() => l,
        _ => f64::INFINITY,
    };
    results.sort_by(|a, b| key(a).total_cmp(&key(b)));
}

/// Runs every grid point on `dataset` for `base.iterations` iterations.
/// Records are written to `out/records/<label>.json` as they finish and the
/// ranking to `out/ranking.json`. A failing point is recorded, not fatal.
pub fn run_grid(
    spec: &GridSpec,
    base: &SupervisedConfig,
    dataset: &Dataset,
    out: Option<&Path>,
    mut progress: impl FnMut(usize, &GridResult),
) -> Result<Vec<GridResult>, TrainError> {
    spec.validate()?;
    if let Some(dir) = out {
        fs::create_dir_all(dir.join("records"))?;
    }
    let mut prepared: Vec<(Mode, crate::supervised::Prepared)> = Vec::new();
    let mut results = Vec::new();
    for (i, point) in spec.points().into_iter().enumerate() {
        let cfg = point.apply(base);
        if !prepared.iter().any(|(m, _)| *m == cfg.mode) {
            prepared.push((cfg.mode, prepare(dataset, cfg.mode, cfg.train_size)?));
        }
        let data = &prepared.iter().find(|(m, _)| *m == cfg.mode).expect("prepared above").1;
        let label = point.label();
        let record = supervised_run(&cfg, data, &label, |_| {}).unwrap_or_else(|e| ConvergenceRecord {
            label: label.clone(),
            mode: cfg.mode,
            train_states: data.train_states,
            train_entries: data.train.len(),
            iterations_run: 0,
            curve: Vec::new(),
            thresholds: Vec::new(),
            final_validation_loss: None,
            failed: Some(e.to_string()),
        });
        let result = GridResult { point, record };
        if let Some(dir) = out {
            let path = dir.join("records").join(format!("{label}.json"));
            fs::write(path, serde_json::to_vec_pretty(&result)?)?;
        }
        progress(i, &result);
        results.push(result);
    }
    rank(&mut results);
    if let Some(dir) = out {
        let ranking: Vec<_> = results
            .iter()
            .map(|r| (r.record.label.clone(), r.record.final_validation_loss))
            .collect();
        fs::write(dir.join("ranking.json"), serde_json::to_vec_pretty(&ranking)?)?;
    }
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_grid_has_2400_points() {
        let g = GridSpec::full();
        assert_eq!(g.cardinality(), 2400);
        let points = g.points();
        assert_eq!(points.len(), 2400);
        let mut labels: Vec<String> = points.iter().map(GridPoint::label).collect();
        labels.sort();
        labels.dedup();
        assert_eq!(labels.len(), 2400);
    }

    #[test]
    fn best_configs_are_in_the_grid() {
        let best: Vec<GridPoint> = GridSpec::full()
            .points()
            .into_iter()
            .filter(|p| !p.sgd && p.lr == 1e-3 && p.dropout == 0.0 && p.num_res_block == 0 && !p.extra_act_fc)
            .collect();
        assert_eq!(best.len(), 6);
    }

    #[test]
    fn empty_axis_is_rejected() {
        let mut g = GridSpec::full();
        g.dropout.clear();
        assert!(g.validate().is_err());
    }
}

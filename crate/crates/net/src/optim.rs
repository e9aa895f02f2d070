//! Optimizers, percentile gradient clipping and the training step.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::batch::LabeledBatch;
use crate::config::{OptimizerKind, TrainHyper};
use crate::error::NetError;
use crate::fpenv::FlushSubnormals;
use crate::network::Network;
use crate::real::Real;

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

/// Percentile with linear interpolation between closest ranks, over an
/// ascending slice.
pub fn percentile(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let rank = q / 100.0 * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * (rank - lo as f64))
}

/// Clips the global gradient norm to a percentile of every norm seen so far,
/// the current one included.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AutoClip {
    percentile: f64,
    /// Kept sorted.
    history: Vec<f64>,
}

impl AutoClip {
    pub fn new(percentile: f64) -> Self {
        Self {
            percentile,
            history: Vec::new(),
        }
    }

    /// Records `norm` and returns the threshold for this step.
    pub fn observe(&mut self, norm: f64) -> f64 {
        let at = self.history.partition_point(|&h| h < norm);
        self.history.insert(at, norm);
        percentile(&self.history, self.percentile).expect("history is non-empty")
    }

    pub fn len(&self) -> usize {
        self.history.len()
    }

    pub fn is_empty(&self) -> bool {
        self.history.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepMetrics {
    pub step: u64,
    pub loss: f64,
    pub value_loss: f64,
    pub policy_loss: f64,
    pub entropy: f64,
    /// Global gradient norm after clipping.
    pub grad_norm: f64,
    pub raw_grad_norm: f64,
    pub lr_multiplier: f64,
}

/// Optimizer state plus the clipping history for one network.
#[derive(Debug, Clone)]
pub struct Trainer<T: Real = f32> {
    pub hyper: TrainHyper,
    step: u64,
    clip: AutoClip,
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
    rng: ChaCha8Rng,
}

impl<T: Real> Trainer<T> {
    /// `seed` drives the dropout masks.
    pub fn new(hyper: TrainHyper, net: &Network<T>, seed: u64) -> Result<Self, NetError> {
        hyper.validate()?;
        let zeros = || net.parameters().iter().map(|p| vec![T::zero(); p.len()]).collect();
        Ok(Self {
            clip: AutoClip::new(hyper.clip_percentile),
            hyper,
            step: 0,
            m: zeros(),
            v: zeros(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn clip_history_len(&self) -> usize {
        self.clip.len()
    }

    /// One update on `batch`. Fails without touching the parameters if the
    /// loss or the gradient norm is not finite.
    pub fn train_step(&mut self, net: &mut Network<T>, batch: &LabeledBatch) -> Result<StepMetrics, NetError> {
        let _fp = FlushSubnormals::new();
        let parts = net.compute_gradients(batch, self.hyper.dropout, &mut self.rng)?;
        let step = self.step;
        if !parts.loss.is_finite() {
            return Err(NetError::NonFinite { step, what: format!("loss {}", parts.loss) });
        }
        let mut grads = net.gradients();
        let raw: f64 = grads
            .iter()
            .flat_map(|g| g.iter())
            .map(|&x| x.as_f64() * x.as_f64())
            .sum::<f64>()
            .sqrt();
        if !raw.is_finite() {
            return Err(NetError::NonFinite { step, what: format!("gradient norm {raw}") });
        }
        let mut norm = raw;
        if self.hyper.autoclip {
            let threshold = self.clip.observe(raw);
            if raw > threshold {
                let s = T::from_f64(threshold / raw);
                grads.iter_mut().for_each(|g| g.iter_mut().for_each(|x| *x *= s));
                norm = threshold;
            }
        }
        drop(grads);
        self.apply_update(net);
        self.step += 1;
        Ok(StepMetrics {
            step,
            loss: parts.loss,
            value_loss: parts.value_loss,
            policy_loss: parts.policy_loss,
            entropy: parts.entropy,
            grad_norm: norm,
            raw_grad_norm: raw,
            lr_multiplier: self.hyper.lr_multiplier,
        })
    }

    fn apply_update(&mut self, net: &mut Network<T>) {
        let lr = self.hyper.effective_lr();
        let l2 = T::from_f64(self.hyper.l2);
        let t = (self.step + 1) as i32;
        let bc1 = 1.0 - BETA1.powi(t);
        let bc2 = 1.0 - BETA2.powi(t);
        let step_size = T::from_f64(lr / bc1);
        let bc2_sqrt = T::from_f64(bc2.sqrt());
        let (b1, b2, eps) = (T::from_f64(BETA1), T::from_f64(BETA2), T::from_f64(EPS));
        let lr_t = T::from_f64(lr);
        let kind = self.hyper.optimizer;
        for (i, (p, g)) in net.params_and_grads().into_iter().enumerate() {
            let (m, v) = (&mut self.m[i], &mut self.v[i]);
            for j in 0..p.len() {
                let grad = g[j] + l2 * p[j];
                match kind {
                    OptimizerKind::Sgd => p[j] -= lr_t * grad,
                    OptimizerKind::Adam => {
                        m[j] = b1 * m[j] + (T::one() - b1) * grad;
                        v[j] = b2 * v[j] + (T::one() - b2) * grad * grad;
                        let denom = v[j].sqrt() / bc2_sqrt + eps;
                        p[j] -= step_size * m[j] / denom;
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_element_history_threshold() {
        let mut c = AutoClip::new(10.0);
        assert_eq!(c.observe(1.0), 1.0);
    }

    #[test]
    fn two_element_history_interpolates() {
        let mut c = AutoClip::new(10.0);
        c.observe(4.0);
        assert!((c.observe(2.0) - 2.2).abs() < 1e-12);
    }

    #[test]
    fn percentile_brute_force() {
        // Against the closest-ranks definition evaluated by hand.
        let xs = [1.0, 2.0, 3.0, 4.0, 10.0];
        assert_eq!(percentile(&xs, 0.0), Some(1.0));
        assert_eq!(percentile(&xs, 100.0), Some(10.0));
        assert_eq!(percentile(&xs, 50.0), Some(3.0));
        assert!((percentile(&xs, 90.0).unwrap() - 7.6).abs() < 1e-12);
        assert_eq!(percentile(&[], 10.0), None);
    }
}

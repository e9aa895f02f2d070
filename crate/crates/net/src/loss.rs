//! Squared value error plus policy cross-entropy, averaged over the batch.

use serde::Serialize;

use crate::error::NetError;
use crate::real::Real;

/// Probabilities are clamped to this before taking the logarithm.
pub const LOG_CLAMP: f64 = 1e-10;

/// Batch means of the loss and its parts. `entropy` is the entropy of the
/// predicted policy; it is reported but not optimized.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct LossParts {
    pub loss: f64,
    pub value_loss: f64,
    pub policy_loss: f64,
    pub entropy: f64,
}

impl LossParts {
    pub(crate) fn add(&mut self, other: &LossParts) {
        self.loss += other.loss;
        self.value_loss += other.value_loss;
        self.policy_loss += other.policy_loss;
        self.entropy += other.entropy;
    }

    pub(crate) fn scaled(self, s: f64) -> Self {
        Self {
            loss: self.loss * s,
            value_loss: self.value_loss * s,
            policy_loss: self.policy_loss * s,
            entropy: self.entropy * s,
        }
    }
}

/// Loss of predictions `probs` (`B × A`) and `values` against targets.
pub fn loss(probs: &[f32], values: &[f32], pi: &[f32], z: &[f32]) -> Result<LossParts, NetError> {
    let b = values.len();
    if b == 0 || z.len() != b || probs.len() != pi.len() || probs.len() % b != 0 {
        return Err(NetError::Shape(format!(
            "loss inputs: {} probs, {} values, {} targets, {} outcomes",
            probs.len(),
            values.len(),
            pi.len(),
            z.len()
        )));
    }
    let all = probs.iter().chain(values).chain(pi).chain(z);
    if all.into_iter().any(|v| !v.is_finite()) {
        return Err(NetError::Numeric("non-finite loss input".into()));
    }
    let a = probs.len() / b;
    let mut sum = LossParts::default();
    for i in 0..b {
        let row = &probs[i * a..(i + 1) * a];
        let target = &pi[i * a..(i + 1) * a];
        sum.add(&sample_loss(row, values[i], target, z[i], None));
    }
    Ok(sum.scaled(1.0 / b as f64))
}

/// Loss of one sample. When `grad` is given it receives
/// `(dL/dlogits * scale, dL/d(value pre-activation) * scale)`.
pub(crate) fn sample_loss<T: Real>(
    probs: &[T],
    value: T,
    pi: &[T],
    z: T,
    grad: Option<(T, &mut [T], &mut T)>,
) -> LossParts {
    let (v, zf) = (value.as_f64(), z.as_f64());
    let value_loss = (v - zf).powi(2);
    let mut policy_loss = 0.0;
    let mut entropy = 0.0;
    let mut unclamped_mass = T::zero();
    for (&p, &t) in probs.iter().zip(pi) {
        let pf = p.as_f64();
        if pf > 0.0 {
            entropy -= pf * pf.ln();
        }
        if t != T::zero() {
            policy_loss -= t.as_f64() * pf.max(LOG_CLAMP).ln();
        }
        if pf >= LOG_CLAMP {
            unclamped_mass += t;
        }
    }
    if let Some((scale, dlogits, dvalue)) = grad {
        // d/dl_k of -sum_{j unclamped} pi_j ln p_j = -pi_k [k unclamped] + p_k * unclamped mass
        for ((d, &p), &t) in dlogits.iter_mut().zip(probs).zip(pi) {
            let own = if p.as_f64() >= LOG_CLAMP { t } else { T::zero() };
            *d = (p * unclamped_mass - own) * scale;
        }
        let two = T::from_f64(2.0);
        *dvalue = two * (value - z) * (T::one() - value * value) * scale;
    }
    LossParts {
        loss: value_loss + policy_loss,
        value_loss,
        policy_loss,
        entropy,
    }
}

/// Row-wise softmax with max subtraction, in place.
pub(crate) fn softmax_rows<T: Real>(logits: &mut [T], width: usize) {
    for row in logits.chunks_exact_mut(width) {
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let mut sum = T::zero();
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        let inv = T::one() / sum;
        row.iter_mut().for_each(|v| *v *= inv);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_prediction_is_zero() {
        let mut p = vec![0.0f32; 64];
        p[9] = 1.0;
        let l = loss(&p, &[1.0], &p, &[1.0]).unwrap();
        assert_eq!(l.loss, 0.0);
    }

    #[test]
    fn half_probability_and_unit_value_miss() {
        let mut p = vec![0.5 / 63.0; 64];
        p[3] = 0.5;
        let mut pi = vec![0.0; 64];
        pi[3] = 1.0;
        let l = loss(&p, &[0.0], &pi, &[1.0]).unwrap();
        assert!((l.loss - (1.0 + 2f64.ln())).abs() < 1e-6);
        assert!((l.loss - 1.6931).abs() < 1e-4);
    }

    #[test]
    fn uniform_against_uniform() {
        let u = vec![1.0 / 64.0; 64];
        let l = loss(&u, &[0.3], &u, &[0.3]).unwrap();
        assert!((l.loss - 64f64.ln()).abs() < 1e-6);
        assert!((l.entropy - 64f64.ln()).abs() < 1e-6);
    }

    #[test]
    fn zero_probability_is_clamped() {
        let mut p = vec![0.0f32; 4];
        p[0] = 1.0;
        let pi = [0.0, 1.0, 0.0, 0.0];
        let l = loss(&p, &[0.0], &pi, &[0.0]).unwrap();
        assert!((l.policy_loss + LOG_CLAMP.ln()).abs() < 1e-9);
    }

    #[test]
    fn nan_is_an_error() {
        let u = vec![0.25f32; 4];
        assert!(matches!(loss(&u, &[f32::NAN], &u, &[0.0]), Err(NetError::Numeric(_))));
        assert!(loss(&u, &[0.0, 0.0], &u, &[0.0]).is_err());
    }

    #[test]
    fn softmax_sums_to_one_under_large_logits() {
        let mut l = vec![1000.0f64, 999.0, -1000.0, 0.0];
        softmax_rows(&mut l, 4);
        assert!((l.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(l.iter().all(|v| v.is_finite()));
    }
}

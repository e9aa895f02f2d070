//! Turning root visit counts into a move distribution and a move.

use rand::Rng;

use crate::error::MctsError;

/// `π(a) ∝ N(a)^(1/temperature)`. A temperature of zero gives the one-hot
/// argmax with ties at the lowest index.
pub fn move_probs(counts: &[u32], temperature: f64) -> Result<Vec<f32>, MctsError> {
    let total: u64 = counts.iter().map(|&c| c as u64).sum();
    if total == 0 {
        return Err(MctsError::ZeroVisits);
    }
    if temperature == 0.0 {
        let best = argmax(counts.iter().map(|&c| c as f64));
        let mut pi = vec![0.0; counts.len()];
        pi[best] = 1.0;
        return Ok(pi);
    }
    if temperature == 1.0 {
        return Ok(counts.iter().map(|&c| (c as f64 / total as f64) as f32).collect());
    }
    // Powers relative to the largest count stay finite for small temperatures.
    let max = *counts.iter().max().expect("non-empty") as f64;
    let weights: Vec<f64> = counts
        .iter()
        .map(|&c| if c == 0 { 0.0 } else { (c as f64 / max).powf(1.0 / temperature) })
        .collect();
    let sum: f64 = weights.iter().sum();
    Ok(weights.iter().map(|w| (w / sum) as f32).collect())
}

/// Index of the largest value; the first one on ties.
fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

pub fn greedy_move(pi: &[f32]) -> usize {
    argmax(pi.iter().map(|&p| p as f64))
}

/// Samples an index with probability `pi[i]`.
pub fn sample_move(pi: &[f32], rng: &mut impl Rng) -> usize {
    let total: f64 = pi.iter().map(|&p| p as f64).sum();
    let mut u = rng.random::<f64>() * total;
    let mut last = 0;
    for (i, &p) in pi.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        last = i;
        u -= p as f64;
        if u < 0.0 {
            return i;
        }
    }
    last
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn proportional_counts() {
        assert_eq!(move_probs(&[2, 6], 1.0).unwrap(), vec![0.25, 0.75]);
        assert_eq!(move_probs(&[1, 1, 2], 1.0).unwrap(), vec![0.25, 0.25, 0.5]);
        assert_eq!(move_probs(&[2, 6], 0.0).unwrap(), vec![0.0, 1.0]);
        assert!(matches!(move_probs(&[0, 0], 1.0), Err(MctsError::ZeroVisits)));
    }

    #[test]
    fn low_temperature_sharpens() {
        let pi = move_probs(&[2, 6, 0], 0.5).unwrap();
        assert!((pi[0] - 0.1).abs() < 1e-6);
        assert!((pi[1] - 0.9).abs() < 1e-6);
        assert_eq!(pi[2], 0.0);
        let cold = move_probs(&[2, 6], 1e-3).unwrap();
        assert!(cold[1] > 0.999999);
    }

    #[test]
    fn greedy_ties_and_examples() {
        assert_eq!(greedy_move(&[0.0, 1.0, 0.0]), 1);
        assert_eq!(greedy_move(&[0.5, 0.5]), 0);
        assert_eq!(greedy_move(&move_probs(&[3, 5], 1.0).unwrap()), 1);
    }

    #[test]
    fn sampling_frequencies() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pi = [0.25, 0.75];
        let hits = (0..10_000).filter(|_| sample_move(&pi, &mut rng) == 1).count();
        assert!((hits as f64 / 10_000.0 - 0.75).abs() < 0.02);
        let one_hot = [0.0, 0.0, 1.0, 0.0];
        assert!((0..100).all(|_| sample_move(&one_hot, &mut rng) == 2));
    }

    #[test]
    fn seeded_sampling_is_reproducible() {
        let pi = [0.25f32; 4];
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..50).map(|_| sample_move(&pi, &mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(9), draw(9));
        assert_ne!(draw(9), draw(10));
    }
}

use crate::error::NetError;

/// Training examples laid out sample-major: `states` is `B × C × N × N`,
/// `policies` is `B × N²`, `values` has one outcome per sample.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabeledBatch {
    pub channels: usize,
    pub size: usize,
    pub states: Vec<f32>,
    pub policies: Vec<f32>,
    pub values: Vec<f32>,
}

impl LabeledBatch {
    pub fn new(channels: usize, size: usize) -> Self {
        Self {
            channels,
            size,
            ..Self::default()
        }
    }

    pub fn with_capacity(channels: usize, size: usize, samples: usize) -> Self {
        let a = size * size;
        Self {
            channels,
            size,
            states: Vec::with_capacity(samples * channels * a),
            policies: Vec::with_capacity(samples * a),
            values: Vec::with_capacity(samples),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn area(&self) -> usize {
        self.size * self.size
    }

    pub fn state_len(&self) -> usize {
        self.channels * self.area()
    }

    pub fn push(&mut self, state: &[f32], policy: &[f32], value: f32) -> Result<(), NetError> {
        if state.len() != self.state_len() || policy.len() != self.area() {
            return Err(NetError::Shape(format!(
                "sample has {} state and {} policy values, batch expects {} and {}",
                state.len(),
                policy.len(),
                self.state_len(),
                self.area()
            )));
        }
        self.states.extend_from_slice(state);
        self.policies.extend_from_slice(policy);
        self.values.push(value);
        Ok(())
    }

    pub fn state(&self, i: usize) -> &[f32] {
        let s = self.state_len();
        &self.states[i * s..(i + 1) * s]
    }

    pub fn policy(&self, i: usize) -> &[f32] {
        let a = self.area();
        &self.policies[i * a..(i + 1) * a]
    }

    /// Copies the samples at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Self {
        let mut out = Self::with_capacity(self.channels, self.size, indices.len());
        for &i in indices {
            out.states.extend_from_slice(self.state(i));
            out.policies.extend_from_slice(self.policy(i));
            out.values.push(self.values[i]);
        }
        out
    }

    /// Checks the array lengths, that every target policy is a distribution
    /// within `1e-6`, that it puts no mass on a cell occupied in the first two
    /// channels, and that outcomes lie in `[-1, 1]`.
    pub fn validate(&self) -> Result<(), NetError> {
        let n = self.len();
        if self.states.len() != n * self.state_len() || self.policies.len() != n * self.area() {
            return Err(NetError::Shape("batch arrays disagree on sample count".into()));
        }
        let a = self.area();
        for i in 0..n {
            let pi = self.policy(i);
            let sum: f64 = pi.iter().map(|&v| v as f64).sum();
            if (sum - 1.0).abs() > 1e-6 || pi.iter().any(|&v| !(v >= 0.0)) {
                return Err(NetError::Shape(format!("policy {i} is not a distribution (sum {sum})")));
            }
            let state = self.state(i);
            let stones = self.channels.min(2);
            for c in 0..stones {
                let plane = &state[c * a..(c + 1) * a];
                if plane.iter().zip(pi).any(|(&s, &p)| s != 0.0 && p != 0.0) {
                    return Err(NetError::Shape(format!("policy {i} puts mass on an occupied cell")));
                }
            }
            let z = self.values[i];
            if !(-1.0..=1.0).contains(&z) {
                return Err(NetError::Shape(format!("outcome {i} is {z}")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn push_select_validate() {
        let mut b = LabeledBatch::new(1, 2);
        b.push(&[1.0, 0.0, 0.0, 0.0], &[0.0, 0.5, 0.5, 0.0], 1.0).unwrap();
        b.push(&[0.0; 4], &[0.25; 4], -1.0).unwrap();
        assert!(b.push(&[0.0; 3], &[0.25; 4], 0.0).is_err());
        b.validate().unwrap();
        let s = b.select(&[1, 1, 0]);
        assert_eq!(s.len(), 3);
        assert_eq!(s.values, vec![-1.0, -1.0, 1.0]);
        assert_eq!(s.state(2), b.state(0));
    }

    #[test]
    fn validate_rejects_mass_on_stones() {
        let mut b = LabeledBatch::new(1, 2);
        b.push(&[1.0, 0.0, 0.0, 0.0], &[0.25; 4], 0.0).unwrap();
        assert!(b.validate().is_err());
        let mut b = LabeledBatch::new(1, 2);
        b.push(&[0.0; 4], &[0.3; 4], 0.0).unwrap();
        assert!(b.validate().is_err());
    }
}

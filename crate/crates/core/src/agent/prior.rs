use std::collections::HashMap;

use crate::env::StateKey;
use crate::error::{Error, Result};
use crate::simplex::{kl, ActionDistribution};

pub const DEFAULT_LEARNING_RATE: f64 = 0.1;

/// `π_θ(·|x) = softmax(logits[x])`, one logit vector per visited state.
/// Unseen states have zero logits, i.e. the uniform prior.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularSoftmaxPrior {
    logits: HashMap<StateKey, Vec<f64>>,
    num_actions: usize,
    learning_rate: f64,
}

impl TabularSoftmaxPrior {
    pub fn new(num_actions: usize, learning_rate: f64) -> Result<Self> {
        if num_actions == 0 {
            return Err(Error::domain("empty action set"));
        }
        if !(learning_rate > 0.0 && learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {learning_rate}"
            )));
        }
        Ok(Self {
            logits: HashMap::new(),
            num_actions,
            learning_rate,
        })
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    pub fn logits(&self, key: StateKey) -> Vec<f64> {
        self.logits
            .get(&key)
            .cloned()
            .unwrap_or_else(|| vec![0.0; self.num_actions])
    }

    pub fn set_logits(&mut self, key: StateKey, logits: Vec<f64>) -> Result<()> {
        if logits.len() != self.num_actions {
            return Err(Error::DimensionMismatch {
                expected: self.num_actions,
                got: logits.len(),
            });
        }
        if let Some(a) = logits.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain_at(a, "non-finite logit"));
        }
        self.logits.insert(key, logits);
        Ok(())
    }

    pub fn prior(&self, key: StateKey) -> ActionDistribution {
        match self.logits.get(&key) {
            Some(logits) => softmax(logits),
            None => ActionDistribution::uniform(self.num_actions),
        }
    }

    /// One gradient step on `KL(target, π_θ(·|key))`. Returns the loss
    /// before the step.
    pub fn learn_step(&mut self, key: StateKey, target: &ActionDistribution) -> Result<f64> {
        if target.len() != self.num_actions {
            return Err(Error::DimensionMismatch {
                expected: self.num_actions,
                got: target.len(),
            });
        }
        let eta = self.learning_rate;
        let logits = self
            .logits
            .entry(key)
            .or_insert_with(|| vec![0.0; target.len()]);
        let loss = softmax_kl(target, logits)?;
        let grad = softmax_kl_gradient(target, logits);
        for (l, g) in logits.iter_mut().zip(grad) {
            *l -= eta * g;
        }
        Ok(loss)
    }
}

/// Max-shifted softmax. Finite logits give a strictly positive result
/// unless their spread exceeds the exponent range.
pub fn softmax(logits: &[f64]) -> ActionDistribution {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    ActionDistribution::from_weights(weights).expect("softmax of finite logits")
}

pub fn softmax_kl(target: &ActionDistribution, logits: &[f64]) -> Result<f64> {
    kl(target, &softmax(logits))
}

/// `∂/∂logits KL(target, softmax(logits)) = softmax(logits) − target`.
pub fn softmax_kl_gradient(target: &ActionDistribution, logits: &[f64]) -> Vec<f64> {
    softmax(logits)
        .probs()
        .iter()
        .zip(target.probs())
        .map(|(p, t)| p - t)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unseen_states_are_uniform() {
        let prior = TabularSoftmaxPrior::new(4, 0.1).unwrap();
        assert_eq!(prior.prior(7).probs(), &[0.25; 4]);
    }

    #[test]
    fn fixed_point_target_leaves_logits() {
        let mut prior = TabularSoftmaxPrior::new(3, 0.5).unwrap();
        prior.set_logits(1, vec![0.2, -1.0, 0.7]).unwrap();
        let target = prior.prior(1);
        prior.learn_step(1, &target).unwrap();
        let after = prior.logits(1);
        for (a, b) in after.iter().zip([0.2, -1.0, 0.7]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn loss_decreases_toward_peaked_target() {
        let mut prior = TabularSoftmaxPrior::new(4, 0.1).unwrap();
        let target = ActionDistribution::new(vec![0.97, 0.01, 0.01, 0.01]).unwrap();
        let mut last = f64::INFINITY;
        for _ in 0..100 {
            let loss = prior.learn_step(0, &target).unwrap();
            assert!(loss <= last + 1e-12);
            last = loss;
        }
        assert!(softmax_kl(&target, &prior.logits(0)).unwrap() < last);
    }

    #[test]
    fn extreme_logits_stay_positive() {
        let p = softmax(&[0.0, -700.0]);
        assert!(p.is_strictly_positive());
        let mut prior = TabularSoftmaxPrior::new(2, 1.0).unwrap();
        assert!(prior
            .learn_step(0, &ActionDistribution::uniform(3))
            .is_err());
    }
}

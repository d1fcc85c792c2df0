use rand::{Rng, RngCore};

use super::{Environment, StateKey, Transition};
use crate::error::{Error, Result};
use crate::simplex::argmax;

/// One-step bandit: a single decision at state 0, then termination with a
/// deterministic reward.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditEnv {
    true_values: Vec<f64>,
}

impl BanditEnv {
    pub fn new(true_values: Vec<f64>) -> Result<Self> {
        if true_values.is_empty() {
            return Err(Error::domain("bandit needs at least one arm"));
        }
        if let Some(a) = true_values.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain_at(a, "non-finite arm value"));
        }
        Ok(Self { true_values })
    }

    /// Arm values drawn uniformly from `[0, 1)`.
    pub fn random<R: Rng + ?Sized>(num_actions: usize, rng: &mut R) -> Result<Self> {
        Self::new((0..num_actions).map(|_| rng.random::<f64>()).collect())
    }

    pub fn true_values(&self) -> &[f64] {
        &self.true_values
    }

    pub fn best_arm(&self) -> usize {
        argmax(&self.true_values)
    }
}

impl Environment for BanditEnv {
    /// 0 before the pull, 1 after.
    type State = u8;

    fn num_actions(&self) -> usize {
        self.true_values.len()
    }

    fn initial_state(&self, _rng: &mut dyn RngCore) -> u8 {
        0
    }

    fn step(&self, state: &u8, action: usize) -> Result<Transition<u8>> {
        if *state != 0 {
            return Err(Error::Logic("bandit episode already finished".into()));
        }
        let reward = *self
            .true_values
            .get(action)
            .ok_or_else(|| Error::domain_at(action, "arm out of range"))?;
        Ok(Transition {
            next_state: 1,
            reward,
            terminal: true,
        })
    }

    fn state_key(&self, state: &u8) -> StateKey {
        *state as StateKey
    }

    fn discount(&self) -> f64 {
        1.0
    }
}

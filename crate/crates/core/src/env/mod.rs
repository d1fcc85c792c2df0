//! Deterministic desk-scale environments.
//!
//! Every environment doubles as the search model: `step` is a pure function
//! of `(state, action)`, so the tree search simulates the true dynamics.

mod bandit;
mod chain;
pub mod factorized;

use rand::RngCore;

use crate::error::Result;

pub use bandit::BanditEnv;
pub use chain::{ChainMdp, ChainState};
pub use factorized::{FactorizedActionSpace, FactorizedBanditEnv};

pub type StateKey = u64;

#[derive(Debug, Clone, PartialEq)]
pub struct Transition<S> {
    pub next_state: S,
    pub reward: f64,
    pub terminal: bool,
}

pub trait Environment {
    type State: Clone;

    fn num_actions(&self) -> usize;

    /// Start state of an episode. Environments with a fixed start ignore `rng`.
    fn initial_state(&self, rng: &mut dyn RngCore) -> Self::State;

    fn step(&self, state: &Self::State, action: usize) -> Result<Transition<Self::State>>;

    /// Key for tabular function approximation.
    fn state_key(&self, state: &Self::State) -> StateKey;

    fn discount(&self) -> f64;

    /// Value estimate handed to the search at newly expanded nodes.
    fn value_estimate(&self, _state: &Self::State) -> f64 {
        0.0
    }
}

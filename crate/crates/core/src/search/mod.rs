//! Monte-Carlo tree search with PUCT, prior-weighted UCT and π̄-sampling
//! selection.

mod node;
mod select;
mod tree;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::Environment;
use crate::error::{Error, Result};
use crate::simplex::ActionDistribution;
use crate::solver::SolverConfig;

pub use node::{empirical_policy, NodeId, NodeStats};
pub use select::{
    node_regularized_policy, puct_scores, select, select_action_alphazero, select_action_pibar,
    select_action_uct, uct_scores, SelectionRule,
};
pub use tree::{SearchTree, SelectionEvent};

/// Prior and value produced for a freshly expanded state.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub prior: ActionDistribution,
    pub value: f64,
}

pub trait Evaluator<S> {
    fn evaluate(&self, state: &S) -> Result<Evaluation>;
}

impl<S, F> Evaluator<S> for F
where
    F: Fn(&S) -> Result<Evaluation>,
{
    fn evaluate(&self, state: &S) -> Result<Evaluation> {
        self(state)
    }
}

/// Uniform prior and zero value everywhere.
pub fn uniform_evaluator<S>(num_actions: usize) -> impl Fn(&S) -> Result<Evaluation> {
    move |_: &S| {
        Ok(Evaluation {
            prior: ActionDistribution::uniform(num_actions),
            value: 0.0,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub n_sim: usize,
    pub selection: SelectionRule,
    pub solver: SolverConfig,
    pub rng_seed: u64,
    /// Feed min-max normalized Q-values to the selection rules. Raw values
    /// are used otherwise.
    pub normalize_q: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            n_sim: 50,
            selection: SelectionRule::AlphaZeroPuct,
            solver: SolverConfig::default(),
            rng_seed: 0,
            normalize_q: true,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_sim == 0 {
            return Err(Error::Config("n_sim must be at least 1".into()));
        }
        self.solver.validate()
    }
}

/// Root statistics after a search.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub q: Vec<f64>,
    pub q_norm: Vec<f64>,
    pub n: Vec<u64>,
    pub prior: ActionDistribution,
    pub pihat: ActionDistribution,
    pub pibar: ActionDistribution,
    pub value: f64,
    /// Multiplier behind `pibar`; 0 when the root has no visits.
    pub lambda: f64,
}

impl SearchResult {
    fn from_tree<S: Clone>(tree: &SearchTree<S>, config: &SearchConfig) -> Result<Self> {
        let root = tree
            .root()
            .ok_or_else(|| Error::Logic("search ran no simulation".into()))?;
        let stats = tree.node(root);
        let q_norm = if config.normalize_q {
            tree.normalize_q(&stats.q)
        } else {
            stats.q.clone()
        };
        let lambda = if stats.total_visits() == 0 {
            0.0
        } else {
            config.solver.multiplier(&stats.n)?.value()
        };
        Ok(Self {
            pihat: stats.empirical_policy(),
            pibar: node_regularized_policy(stats, &config.solver, &q_norm)?,
            q: stats.q.clone(),
            q_norm,
            n: stats.n.clone(),
            prior: stats.prior.clone(),
            value: stats.v,
            lambda,
        })
    }
}

/// Runs `config.n_sim` simulations from `root_state` on a fresh tree.
///
/// The first simulation expands the root, so the root counts sum to
/// `n_sim − 1`.
pub fn run_search<E, V>(
    env: &E,
    root_state: E::State,
    config: &SearchConfig,
    evaluator: &V,
) -> Result<SearchResult>
where
    E: Environment,
    V: Evaluator<E::State>,
{
    run_search_observed(env, root_state, config, evaluator, &mut |_| {})
}

/// [`run_search`] with a callback on every in-tree selection.
pub fn run_search_observed<E, V>(
    env: &E,
    root_state: E::State,
    config: &SearchConfig,
    evaluator: &V,
    observer: &mut dyn FnMut(&SelectionEvent<'_>),
) -> Result<SearchResult>
where
    E: Environment,
    V: Evaluator<E::State>,
{
    config.validate()?;
    let mut tree = SearchTree::new(root_state, env.discount())?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    for simulation in 0..config.n_sim {
        tree.simulate(env, evaluator, config, &mut rng, observer)
            .map_err(|source| Error::Simulation {
                simulation,
                source: Box::new(source),
            })?;
    }
    SearchResult::from_tree(&tree, config)
}

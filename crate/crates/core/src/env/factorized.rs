//! Discretized continuous actions with one Q-table per action dimension.
//!
//! A joint action picks one of `K` bins in each of `m` dimensions. Search
//! keeps `m` tables of `K` entries instead of one table of `K^m`: every
//! component is selected independently with the flat rule and every table is
//! updated with the same scalar target. The per-dimension tables hold running
//! means of their targets, which makes them the visit-weighted marginals of
//! the joint table.

use std::collections::BTreeMap;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Environment, StateKey, Transition};
use crate::error::{Error, Result};
use crate::search::{
    empirical_policy, node_regularized_policy, select, NodeStats, SearchConfig, SelectionRule,
};
use crate::simplex::{argmax, kl, ActionDistribution};
use crate::solver::SolverConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FactorizedActionSpace {
    dims: usize,
    bins: usize,
    num_joint: usize,
}

impl FactorizedActionSpace {
    pub fn new(dims: usize, bins: usize) -> Result<Self> {
        if dims == 0 || bins == 0 {
            return Err(Error::domain(format!(
                "factorized space needs m ≥ 1 and K ≥ 1, got m={dims}, K={bins}"
            )));
        }
        let num_joint = u32::try_from(dims)
            .ok()
            .and_then(|m| bins.checked_pow(m))
            .ok_or_else(|| Error::domain(format!("K^m overflows for m={dims}, K={bins}")))?;
        Ok(Self {
            dims,
            bins,
            num_joint,
        })
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn num_joint(&self) -> usize {
        self.num_joint
    }

    /// Effective branching factor `m·K`.
    pub fn branching(&self) -> usize {
        self.dims * self.bins
    }

    /// Atomic action value of a bin, evenly spaced in `[−1, 1]`.
    pub fn bin_value(&self, bin: usize) -> f64 {
        if self.bins == 1 {
            0.0
        } else {
            -1.0 + 2.0 * bin as f64 / (self.bins - 1) as f64
        }
    }

    pub fn bin_values(&self) -> Vec<f64> {
        (0..self.bins).map(|b| self.bin_value(b)).collect()
    }

    /// Joint index with dimension 0 as the most significant digit.
    pub fn encode(&self, joint: &[usize]) -> Result<usize> {
        if joint.len() != self.dims {
            return Err(Error::DimensionMismatch {
                expected: self.dims,
                got: joint.len(),
            });
        }
        joint.iter().try_fold(0usize, |acc, &a| {
            if a >= self.bins {
                Err(Error::domain_at(
                    a,
                    format!("bin out of range for K={}", self.bins),
                ))
            } else {
                Ok(acc * self.bins + a)
            }
        })
    }

    pub fn decode(&self, index: usize) -> Result<Vec<usize>> {
        if index >= self.num_joint {
            return Err(Error::domain_at(index, "joint action out of range"));
        }
        let mut joint = vec![0; self.dims];
        let mut rest = index;
        for slot in joint.iter_mut().rev() {
            *slot = rest % self.bins;
            rest /= self.bins;
        }
        Ok(joint)
    }
}

/// One-step bandit over a factorized action space with additively separable
/// reward `Σ_i table_i[a_i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorizedBanditEnv {
    space: FactorizedActionSpace,
    tables: Vec<Vec<f64>>,
}

impl FactorizedBanditEnv {
    pub fn new(space: FactorizedActionSpace, tables: Vec<Vec<f64>>) -> Result<Self> {
        if tables.len() != space.dims() {
            return Err(Error::DimensionMismatch {
                expected: space.dims(),
                got: tables.len(),
            });
        }
        for table in &tables {
            if table.len() != space.bins() {
                return Err(Error::DimensionMismatch {
                    expected: space.bins(),
                    got: table.len(),
                });
            }
            if let Some(a) = table.iter().position(|v| !v.is_finite()) {
                return Err(Error::domain_at(a, "non-finite reward entry"));
            }
        }
        Ok(Self { space, tables })
    }

    /// Reward `−Σ_i (x_i − t_i)²` for atomic values `x_i` and targets `t_i`.
    pub fn quadratic(space: FactorizedActionSpace, targets: &[f64]) -> Result<Self> {
        let tables = targets
            .iter()
            .map(|t| {
                space
                    .bin_values()
                    .iter()
                    .map(|x| -(x - t).powi(2))
                    .collect()
            })
            .collect();
        Self::new(space, tables)
    }

    /// Quadratic reward with targets drawn uniformly from `[−1, 1]`.
    pub fn random<R: Rng + ?Sized>(space: FactorizedActionSpace, rng: &mut R) -> Result<Self> {
        let targets: Vec<f64> = (0..space.dims())
            .map(|_| rng.random_range(-1.0..=1.0))
            .collect();
        Self::quadratic(space, &targets)
    }

    pub fn space(&self) -> &FactorizedActionSpace {
        &self.space
    }

    pub fn reward(&self, joint: &[usize]) -> Result<f64> {
        self.space.encode(joint)?;
        Ok(joint.iter().zip(&self.tables).map(|(&a, t)| t[a]).sum())
    }

    pub fn best_joint_action(&self) -> Vec<usize> {
        self.tables.iter().map(|t| argmax(t)).collect()
    }
}

impl Environment for FactorizedBanditEnv {
    type State = u8;

    fn num_actions(&self) -> usize {
        self.space.num_joint()
    }

    fn initial_state(&self, _rng: &mut dyn RngCore) -> u8 {
        0
    }

    fn step(&self, state: &u8, action: usize) -> Result<Transition<u8>> {
        if *state != 0 {
            return Err(Error::Logic("bandit episode already finished".into()));
        }
        let joint = self.space.decode(action)?;
        Ok(Transition {
            next_state: 1,
            reward: self.reward(&joint)?,
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

/// Per-dimension search statistics of one node. Dimension `i` is stored as
/// flat [`NodeStats`] over its `K` bins so the flat selection rules apply
/// unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorizedNodeStats {
    pub dims: Vec<NodeStats>,
    pub v: f64,
}

impl FactorizedNodeStats {
    pub fn new(priors: Vec<ActionDistribution>, value: f64, q_init: f64) -> Self {
        Self {
            dims: priors
                .into_iter()
                .map(|p| NodeStats::new(p, value, q_init))
                .collect(),
            v: value,
        }
    }

    pub fn num_dims(&self) -> usize {
        self.dims.len()
    }

    /// Simulations backed up through this node; equal in every dimension.
    pub fn total_visits(&self) -> u64 {
        self.dims.first().map_or(0, NodeStats::total_visits)
    }

    pub fn q_tables(&self) -> Vec<Vec<f64>> {
        self.dims.iter().map(|d| d.q.clone()).collect()
    }

    pub fn count_tables(&self) -> Vec<Vec<u64>> {
        self.dims.iter().map(|d| d.n.clone()).collect()
    }

    fn check_dims(&self, got: usize) -> Result<()> {
        if got != self.dims.len() {
            return Err(Error::DimensionMismatch {
                expected: self.dims.len(),
                got,
            });
        }
        Ok(())
    }
}

/// Selects every component independently with `rule` on its own tables.
pub fn factorized_select<R: Rng + ?Sized>(
    stats: &FactorizedNodeStats,
    rule: SelectionRule,
    solver: &SolverConfig,
    q_norm: &[Vec<f64>],
    rng: &mut R,
) -> Result<Vec<usize>> {
    stats.check_dims(q_norm.len())?;
    stats
        .dims
        .iter()
        .zip(q_norm)
        .map(|(dim, q)| {
            if q.len() != dim.num_actions() {
                return Err(Error::DimensionMismatch {
                    expected: dim.num_actions(),
                    got: q.len(),
                });
            }
            select(rule, dim, solver, q, rng)
        })
        .collect()
}

/// Pushes the target `reward + γ·child_value` into entry `a_i` of every
/// dimension and returns it.
pub fn factorized_backup(
    stats: &mut FactorizedNodeStats,
    joint: &[usize],
    reward: f64,
    child_value: f64,
    discount: f64,
) -> Result<f64> {
    stats.check_dims(joint.len())?;
    for (dim, &a) in stats.dims.iter().zip(joint) {
        if a >= dim.num_actions() {
            return Err(Error::domain_at(a, "bin out of range"));
        }
    }
    let target = reward + discount * child_value;
    let total = stats.total_visits() as f64;
    stats.v = (stats.v * total + target) / (1.0 + total);
    for (dim, &a) in stats.dims.iter_mut().zip(joint) {
        let visits = dim.n[a] as f64;
        dim.q[a] = if dim.n[a] == 0 {
            target
        } else {
            (dim.q[a] * visits + target) / (visits + 1.0)
        };
        dim.n[a] += 1;
        dim.v = stats.v;
    }
    Ok(target)
}

/// Independent per-dimension targets: π̄_i with `learn_with_pibar`, π̂_i otherwise.
pub fn factorized_learn_target(
    stats: &FactorizedNodeStats,
    solver: &SolverConfig,
    q_norm: &[Vec<f64>],
    learn_with_pibar: bool,
) -> Result<Vec<ActionDistribution>> {
    stats.check_dims(q_norm.len())?;
    stats
        .dims
        .iter()
        .zip(q_norm)
        .map(|(dim, q)| {
            if learn_with_pibar {
                node_regularized_policy(dim, solver, q)
            } else {
                Ok(empirical_policy(&dim.n))
            }
        })
        .collect()
}

/// `Σ_i KL(target_i, prior_i)`, the KL of the product distributions.
pub fn factorized_kl(targets: &[ActionDistribution], priors: &[ActionDistribution]) -> Result<f64> {
    if targets.len() != priors.len() {
        return Err(Error::DimensionMismatch {
            expected: priors.len(),
            got: targets.len(),
        });
    }
    targets.iter().zip(priors).map(|(t, p)| kl(t, p)).sum()
}

/// Per-dimension priors and a value for a freshly expanded state.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorizedEvaluation {
    pub priors: Vec<ActionDistribution>,
    pub value: f64,
}

pub trait FactorizedEvaluator<S> {
    fn evaluate(&self, state: &S) -> Result<FactorizedEvaluation>;
}

impl<S, F> FactorizedEvaluator<S> for F
where
    F: Fn(&S) -> Result<FactorizedEvaluation>,
{
    fn evaluate(&self, state: &S) -> Result<FactorizedEvaluation> {
        self(state)
    }
}

/// A backup of one joint action at one node.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorizedBackupEvent {
    pub node: usize,
    pub joint: Vec<usize>,
    pub target: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorizedSearchResult {
    pub q: Vec<Vec<f64>>,
    pub q_norm: Vec<Vec<f64>>,
    pub n: Vec<Vec<u64>>,
    pub priors: Vec<ActionDistribution>,
    pub pihat: Vec<ActionDistribution>,
    pub pibar: Vec<ActionDistribution>,
    pub value: f64,
}

#[derive(Debug, Clone)]
struct FactorizedNode<S> {
    stats: FactorizedNodeStats,
    state: S,
    terminal: bool,
    // joint index → (child node, reward)
    children: BTreeMap<usize, (usize, f64)>,
}

struct FactorizedTree<S> {
    nodes: Vec<FactorizedNode<S>>,
    q_bounds: Option<(f64, f64)>,
    discount: f64,
}

impl<S: Clone> FactorizedTree<S> {
    fn observe_q(&mut self, value: f64) {
        self.q_bounds = Some(match self.q_bounds {
            None => (value, value),
            Some((lo, hi)) => (lo.min(value), hi.max(value)),
        });
    }

    fn normalize(&self, tables: &[Vec<f64>], normalize_q: bool) -> Vec<Vec<f64>> {
        let (lo, hi) = self.q_bounds.unwrap_or((0.0, 0.0));
        tables
            .iter()
            .map(|t| {
                t.iter()
                    .map(|&q| match (normalize_q, hi > lo) {
                        (false, _) => q,
                        (true, true) => (q - lo) / (hi - lo),
                        (true, false) => 0.5,
                    })
                    .collect()
            })
            .collect()
    }

    fn push<V: FactorizedEvaluator<S>>(
        &mut self,
        space: &FactorizedActionSpace,
        state: S,
        terminal: bool,
        evaluator: &V,
    ) -> Result<usize> {
        let evaluation = if terminal {
            FactorizedEvaluation {
                priors: vec![ActionDistribution::uniform(space.bins()); space.dims()],
                value: 0.0,
            }
        } else {
            let e = evaluator.evaluate(&state)?;
            if !e.value.is_finite() {
                return Err(Error::domain(format!(
                    "evaluator returned non-finite value {}",
                    e.value
                )));
            }
            if e.priors.len() != space.dims() {
                return Err(Error::DimensionMismatch {
                    expected: space.dims(),
                    got: e.priors.len(),
                });
            }
            for prior in &e.priors {
                if prior.len() != space.bins() {
                    return Err(Error::DimensionMismatch {
                        expected: space.bins(),
                        got: prior.len(),
                    });
                }
                if let Some(a) = prior.probs().iter().position(|&p| p <= 0.0) {
                    return Err(Error::domain_at(
                        a,
                        "evaluator prior is not strictly positive",
                    ));
                }
            }
            e
        };
        let q_init = self.q_bounds.map_or(0.0, |(lo, _)| lo);
        self.observe_q(q_init);
        self.nodes.push(FactorizedNode {
            stats: FactorizedNodeStats::new(evaluation.priors, evaluation.value, q_init),
            state,
            terminal,
            children: BTreeMap::new(),
        });
        Ok(self.nodes.len() - 1)
    }
}

/// Tree search over a factorized action space. Mirrors the flat search:
/// the first simulation expands the root, new nodes start from the
/// tree-wide minimum Q, and Q-values are min-max normalized per config.
pub fn run_factorized_search<E, V>(
    env: &E,
    space: &FactorizedActionSpace,
    root_state: E::State,
    config: &SearchConfig,
    evaluator: &V,
    observer: &mut dyn FnMut(&FactorizedBackupEvent),
) -> Result<FactorizedSearchResult>
where
    E: Environment,
    V: FactorizedEvaluator<E::State>,
{
    config.validate()?;
    if env.num_actions() != space.num_joint() {
        return Err(Error::DimensionMismatch {
            expected: space.num_joint(),
            got: env.num_actions(),
        });
    }
    let mut tree = FactorizedTree {
        nodes: Vec::new(),
        q_bounds: None,
        discount: env.discount(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    for simulation in 0..config.n_sim {
        simulate(
            env,
            space,
            &mut tree,
            root_state.clone(),
            config,
            evaluator,
            &mut rng,
            observer,
        )
        .map_err(|source| Error::Simulation {
            simulation,
            source: Box::new(source),
        })?;
    }

    let root = &tree.nodes[0].stats;
    let q = root.q_tables();
    let q_norm = tree.normalize(&q, config.normalize_q);
    let pibar = factorized_learn_target(root, &config.solver, &q_norm, true)?;
    let pihat = factorized_learn_target(root, &config.solver, &q_norm, false)?;
    Ok(FactorizedSearchResult {
        q,
        q_norm,
        n: root.count_tables(),
        priors: root.dims.iter().map(|d| d.prior.clone()).collect(),
        pihat,
        pibar,
        value: root.v,
    })
}

#[allow(clippy::too_many_arguments)]
fn simulate<E, V, R>(
    env: &E,
    space: &FactorizedActionSpace,
    tree: &mut FactorizedTree<E::State>,
    root_state: E::State,
    config: &SearchConfig,
    evaluator: &V,
    rng: &mut R,
    observer: &mut dyn FnMut(&FactorizedBackupEvent),
) -> Result<()>
where
    E: Environment,
    V: FactorizedEvaluator<E::State>,
    R: Rng + ?Sized,
{
    if tree.nodes.is_empty() {
        tree.push(space, root_state, false, evaluator)?;
        return Ok(());
    }

    let mut path: Vec<(usize, Vec<usize>, f64)> = Vec::new();
    let mut current = 0;
    let leaf_value = loop {
        let node = &tree.nodes[current];
        if node.terminal {
            break node.stats.v;
        }
        let q_norm = tree.normalize(&node.stats.q_tables(), config.normalize_q);
        let joint = factorized_select(&node.stats, config.selection, &config.solver, &q_norm, rng)?;
        let index = space.encode(&joint)?;
        match node.children.get(&index) {
            Some(&(child, reward)) => {
                path.push((current, joint, reward));
                current = child;
            }
            None => {
                let transition = env.step(&node.state, index)?;
                if !transition.reward.is_finite() {
                    return Err(Error::domain_at(index, "non-finite reward"));
                }
                let child =
                    tree.push(space, transition.next_state, transition.terminal, evaluator)?;
                tree.nodes[current]
                    .children
                    .insert(index, (child, transition.reward));
                path.push((current, joint, transition.reward));
                break tree.nodes[child].stats.v;
            }
        }
    };

    let mut child_value = leaf_value;
    for (node, joint, reward) in path.into_iter().rev() {
        let discount = tree.discount;
        let stats = &mut tree.nodes[node].stats;
        let target = factorized_backup(stats, &joint, reward, child_value, discount)?;
        child_value = stats.v;
        tree.observe_q(target);
        observer(&FactorizedBackupEvent {
            node,
            joint,
            target,
        });
    }
    Ok(())
}

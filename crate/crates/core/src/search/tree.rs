use rand::Rng;

use super::node::{NodeId, NodeStats};
use super::select::{select, SelectionRule};
use super::{Evaluation, Evaluator, SearchConfig};
use crate::env::Environment;
use crate::error::{Error, Result};
use crate::simplex::ActionDistribution;

#[derive(Debug, Clone)]
struct Node<S> {
    stats: NodeStats,
    state: S,
    terminal: bool,
}

/// Emitted for every in-tree selection, with the statistics the rule saw.
#[derive(Debug)]
pub struct SelectionEvent<'a> {
    pub node: NodeId,
    pub stats: &'a NodeStats,
    pub q_norm: &'a [f64],
    pub rule: SelectionRule,
    pub action: usize,
}

/// A search tree over the states of one environment, grown one simulation
/// at a time. The root is expanded by the first simulation.
#[derive(Debug, Clone)]
pub struct SearchTree<S> {
    nodes: Vec<Node<S>>,
    root_state: S,
    // extremes over every Q entry ever stored, including initializations
    q_bounds: Option<(f64, f64)>,
    discount: f64,
}

impl<S: Clone> SearchTree<S> {
    pub fn new(root_state: S, discount: f64) -> Result<Self> {
        if !(discount > 0.0 && discount <= 1.0) {
            return Err(Error::domain(format!(
                "discount must be in (0, 1], got {discount}"
            )));
        }
        Ok(Self {
            nodes: Vec::new(),
            root_state,
            q_bounds: None,
            discount,
        })
    }

    /// The root handle once the first simulation has expanded it.
    pub fn root(&self) -> Option<NodeId> {
        (!self.nodes.is_empty()).then_some(NodeId(0))
    }

    pub fn node(&self, id: NodeId) -> &NodeStats {
        &self.nodes[id.0].stats
    }

    pub fn state(&self, id: NodeId) -> &S {
        &self.nodes[id.0].state
    }

    pub fn is_terminal(&self, id: NodeId) -> bool {
        self.nodes[id.0].terminal
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    /// Smallest stored Q-value; 0 for an empty tree.
    pub fn q_min(&self) -> f64 {
        self.q_bounds.map_or(0.0, |(lo, _)| lo)
    }

    pub fn q_max(&self) -> f64 {
        self.q_bounds.map_or(0.0, |(_, hi)| hi)
    }

    fn observe_q(&mut self, value: f64) {
        self.q_bounds = Some(match self.q_bounds {
            None => (value, value),
            Some((lo, hi)) => (lo.min(value), hi.max(value)),
        });
    }

    /// Min-max normalization by the tree-wide extremes. A flat tree maps
    /// everything to 0.5.
    pub fn normalize_q(&self, q_raw: &[f64]) -> Vec<f64> {
        let (lo, hi) = (self.q_min(), self.q_max());
        if hi > lo {
            q_raw.iter().map(|q| (q - lo) / (hi - lo)).collect()
        } else {
            vec![0.5; q_raw.len()]
        }
    }

    fn push_node(&mut self, state: S, evaluation: Evaluation, terminal: bool) -> NodeId {
        // pessimistic initialization from the tree-wide minimum
        let q_init = self.q_min();
        self.observe_q(q_init);
        let id = NodeId(self.nodes.len());
        self.nodes.push(Node {
            stats: NodeStats::new(evaluation.prior, evaluation.value, q_init),
            state,
            terminal,
        });
        id
    }

    fn evaluate<V: Evaluator<S>>(
        state: &S,
        num_actions: usize,
        evaluator: &V,
    ) -> Result<Evaluation> {
        let evaluation = evaluator.evaluate(state)?;
        if !evaluation.value.is_finite() {
            return Err(Error::domain(format!(
                "evaluator returned non-finite value {}",
                evaluation.value
            )));
        }
        if evaluation.prior.len() != num_actions {
            return Err(Error::DimensionMismatch {
                expected: num_actions,
                got: evaluation.prior.len(),
            });
        }
        if let Some(a) = evaluation.prior.probs().iter().position(|&p| p <= 0.0) {
            return Err(Error::domain_at(
                a,
                "evaluator prior is not strictly positive",
            ));
        }
        Ok(evaluation)
    }

    pub fn expand_root<V: Evaluator<S>>(
        &mut self,
        num_actions: usize,
        evaluator: &V,
    ) -> Result<NodeId> {
        if !self.nodes.is_empty() {
            return Err(Error::Logic("root already expanded".into()));
        }
        let evaluation = Self::evaluate(&self.root_state, num_actions, evaluator)?;
        Ok(self.push_node(self.root_state.clone(), evaluation, false))
    }

    /// Steps the model from `leaf` with `action` and appends the child.
    /// Terminal children get value 0 and are never evaluated.
    pub fn expand<E, V>(
        &mut self,
        env: &E,
        leaf: NodeId,
        action: usize,
        evaluator: &V,
    ) -> Result<NodeId>
    where
        E: Environment<State = S>,
        V: Evaluator<S>,
    {
        let num_actions = env.num_actions();
        if self.nodes[leaf.0].terminal {
            return Err(Error::Logic("cannot expand below a terminal node".into()));
        }
        if action >= self.nodes[leaf.0].stats.num_actions() {
            return Err(Error::domain_at(action, "action out of range"));
        }
        if self.nodes[leaf.0].stats.children[action].is_some() {
            return Err(Error::Logic(format!(
                "child for action {action} of node {} already exists",
                leaf.0
            )));
        }
        let transition = env.step(&self.nodes[leaf.0].state, action)?;
        if !transition.reward.is_finite() {
            return Err(Error::domain_at(action, "non-finite reward"));
        }
        let evaluation = if transition.terminal {
            Evaluation {
                prior: ActionDistribution::uniform(num_actions),
                value: 0.0,
            }
        } else {
            Self::evaluate(&transition.next_state, num_actions, evaluator)?
        };
        let child = self.push_node(transition.next_state, evaluation, transition.terminal);
        let parent = &mut self.nodes[leaf.0].stats;
        parent.r[action] = transition.reward;
        parent.children[action] = Some(child);
        Ok(child)
    }

    /// Updates statistics bottom-up along `path` (root first):
    ///
    /// ```text
    /// V(x)   ← (V(x)·Σn + R(x,a) + γ·V(child)) / (1 + Σn)
    /// Q(x,a) ← R(x,a) + γ·V(child)
    /// n(x,a) ← n(x,a) + 1
    /// ```
    ///
    /// An empty path only sets the root value.
    pub fn backup(&mut self, path: &[(NodeId, usize)], leaf_value: f64) {
        if path.is_empty() {
            if let Some(root) = self.nodes.first_mut() {
                root.stats.v = leaf_value;
            }
            return;
        }
        let mut child_value = leaf_value;
        for &(id, action) in path.iter().rev() {
            let target = {
                let stats = &mut self.nodes[id.0].stats;
                let target = stats.r[action] + self.discount * child_value;
                let total = stats.total_visits() as f64;
                stats.v = (stats.v * total + target) / (1.0 + total);
                stats.q[action] = target;
                stats.n[action] += 1;
                child_value = stats.v;
                target
            };
            self.observe_q(target);
        }
    }

    /// Runs one selection → expansion → backup cycle.
    pub fn simulate<E, V, R>(
        &mut self,
        env: &E,
        evaluator: &V,
        config: &SearchConfig,
        rng: &mut R,
        observer: &mut dyn FnMut(&SelectionEvent<'_>),
    ) -> Result<()>
    where
        E: Environment<State = S>,
        V: Evaluator<S>,
        R: Rng + ?Sized,
    {
        let Some(root) = self.root() else {
            let root = self.expand_root(env.num_actions(), evaluator)?;
            let value = self.nodes[root.0].stats.v;
            self.backup(&[], value);
            return Ok(());
        };

        let mut path = Vec::new();
        let mut current = root;
        let leaf_value = loop {
            if self.nodes[current.0].terminal {
                break self.nodes[current.0].stats.v;
            }
            let stats = &self.nodes[current.0].stats;
            let q_norm = if config.normalize_q {
                self.normalize_q(&stats.q)
            } else {
                stats.q.clone()
            };
            let action = select(config.selection, stats, &config.solver, &q_norm, rng)?;
            observer(&SelectionEvent {
                node: current,
                stats,
                q_norm: &q_norm,
                rule: config.selection,
                action,
            });
            path.push((current, action));
            match stats.children[action] {
                Some(child) => current = child,
                None => {
                    let child = self.expand(env, current, action, evaluator)?;
                    break self.nodes[child.0].stats.v;
                }
            }
        };
        self.backup(&path, leaf_value);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{BanditEnv, ChainMdp, ChainState};
    use crate::search::uniform_evaluator;

    fn flat(k: usize, value: f64) -> impl Fn(&u8) -> Result<Evaluation> {
        move |_: &u8| {
            Ok(Evaluation {
                prior: ActionDistribution::uniform(k),
                value,
            })
        }
    }

    #[test]
    fn empty_tree_initializes_at_zero() {
        let env = BanditEnv::new(vec![1.0, 2.0]).unwrap();
        let mut tree = SearchTree::new(0u8, 1.0).unwrap();
        let root = tree.expand_root(2, &flat(2, 0.3)).unwrap();
        assert_eq!(tree.node(root).q, vec![0.0, 0.0]);
        assert_eq!(tree.node(root).v, 0.3);
        let child = tree.expand(&env, root, 1, &flat(2, 0.0)).unwrap();
        assert!(tree.is_terminal(child));
        assert_eq!(tree.node(root).r[1], 2.0);
        assert!(matches!(
            tree.expand(&env, root, 1, &flat(2, 0.0)),
            Err(Error::Logic(_))
        ));
    }

    #[test]
    fn pessimistic_init_uses_running_minimum() {
        let env = ChainMdp::new(6, 1.0, false).unwrap();
        let eval = |_: &ChainState| -> Result<Evaluation> {
            Ok(Evaluation {
                prior: ActionDistribution::uniform(2),
                value: 0.0,
            })
        };
        let mut tree = SearchTree::new(
            ChainState {
                position: 0,
                steps: 0,
            },
            1.0,
        )
        .unwrap();
        let root = tree.expand_root(2, &eval).unwrap();
        let child = tree.expand(&env, root, 1, &eval).unwrap();
        tree.backup(&[(root, 1)], -3.0);
        assert_eq!(tree.q_min(), -3.0);
        let grandchild = tree.expand(&env, child, 1, &eval).unwrap();
        assert_eq!(tree.node(grandchild).q, vec![-3.0, -3.0]);
    }

    #[test]
    fn non_finite_evaluations_are_rejected() {
        let mut tree = SearchTree::new(0u8, 1.0).unwrap();
        assert!(matches!(
            tree.expand_root(2, &flat(2, f64::NAN)),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn backup_substitution() {
        let env = ChainMdp::new(5, 1.0, false).unwrap();
        let eval = uniform_evaluator(2);
        let mut tree = SearchTree::new(
            ChainState {
                position: 0,
                steps: 0,
            },
            0.5,
        )
        .unwrap();
        let root = tree.expand_root(2, &eval).unwrap();
        tree.expand(&env, root, 1, &eval).unwrap();
        tree.nodes[root.0].stats.r[1] = 1.0;
        tree.backup(&[(root, 1)], 2.0);
        let stats = tree.node(root);
        assert_eq!(stats.q[1], 2.0);
        assert_eq!(stats.n, vec![0, 1]);
        assert_eq!(stats.v, 2.0);
    }

    #[test]
    fn two_backups_average_the_value() {
        let env = ChainMdp::new(5, 1.0, false).unwrap();
        let eval = uniform_evaluator(2);
        let mut tree = SearchTree::new(
            ChainState {
                position: 0,
                steps: 0,
            },
            1.0,
        )
        .unwrap();
        let root = tree.expand_root(2, &eval).unwrap();
        tree.expand(&env, root, 0, &eval).unwrap();
        tree.expand(&env, root, 1, &eval).unwrap();
        tree.backup(&[(root, 0)], 4.0);
        tree.backup(&[(root, 1)], 1.0);
        // V: 4 after the first, (4·1 + 1)/2 after the second
        let stats = tree.node(root);
        assert_eq!(stats.v, 2.5);
        assert_eq!(stats.q, vec![4.0, 1.0]);
        tree.backup(&[(root, 0)], 1.0);
        let stats = tree.node(root);
        assert_eq!(stats.n, vec![2, 1]);
        assert_eq!(stats.v, (2.5 * 2.0 + 1.0) / 3.0);
    }

    #[test]
    fn empty_path_sets_root_value() {
        let mut tree = SearchTree::new(0u8, 1.0).unwrap();
        tree.backup(&[], 5.0);
        let root = tree.expand_root(2, &flat(2, 0.0)).unwrap();
        tree.backup(&[], 5.0);
        assert_eq!(tree.node(root).v, 5.0);
        assert_eq!(tree.node(root).n, vec![0, 0]);
    }

    #[test]
    fn normalization_examples() {
        let mut tree = SearchTree::new(0u8, 1.0).unwrap();
        assert_eq!(tree.normalize_q(&[1.0, 2.0]), vec![0.5, 0.5]);
        tree.observe_q(0.0);
        tree.observe_q(10.0);
        assert_eq!(tree.normalize_q(&[0.0, 5.0, 10.0]), vec![0.0, 0.5, 1.0]);
    }
}

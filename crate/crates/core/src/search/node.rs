use crate::simplex::ActionDistribution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub(crate) usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Per-node search statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeStats {
    /// Search Q-values, in return units.
    pub q: Vec<f64>,
    pub n: Vec<u64>,
    /// Running value estimate of the node.
    pub v: f64,
    /// Immediate reward of each expanded action.
    pub r: Vec<f64>,
    pub prior: ActionDistribution,
    pub children: Vec<Option<NodeId>>,
}

impl NodeStats {
    pub fn new(prior: ActionDistribution, value: f64, q_init: f64) -> Self {
        let k = prior.len();
        Self {
            q: vec![q_init; k],
            n: vec![0; k],
            v: value,
            r: vec![0.0; k],
            prior,
            children: vec![None; k],
        }
    }

    pub fn num_actions(&self) -> usize {
        self.q.len()
    }

    pub fn total_visits(&self) -> u64 {
        self.n.iter().sum()
    }

    pub fn empirical_policy(&self) -> ActionDistribution {
        empirical_policy(&self.n)
    }
}

/// `π̂(a) = (1 + n_a) / (|A| + Σ_b n_b)`, with one extra visit per action.
pub fn empirical_policy(counts: &[u64]) -> ActionDistribution {
    assert!(
        !counts.is_empty(),
        "empirical policy over an empty action set"
    );
    let denom = counts.len() as f64 + counts.iter().sum::<u64>() as f64;
    ActionDistribution::new(counts.iter().map(|&n| (1.0 + n as f64) / denom).collect())
        .expect("pseudo-count policy is a distribution")
}

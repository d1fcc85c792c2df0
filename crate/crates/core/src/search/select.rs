//! In-tree action selection.
//!
//! All deterministic rules break ties toward the lowest action index. At a
//! node with no visits the count-based bonuses vanish and the q-values are
//! the shared pessimistic initialization, so every rule falls back to the
//! prior: argmax for the deterministic rules, a draw for π̄ sampling.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::node::NodeStats;
use crate::error::{Error, Result};
use crate::simplex::{argmax, ActionDistribution};
use crate::solver::{solve_regularized, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionRule {
    /// `argmax q + c·π_θ·√N/(1 + n)`.
    #[serde(rename = "alphazero_puct")]
    AlphaZeroPuct,
    /// `argmax q + c·√(π_θ·log N/(1 + n))`.
    PriorUct,
    /// Sample from the regularized policy π̄.
    PibarSampling,
}

impl SelectionRule {
    pub fn as_str(self) -> &'static str {
        match self {
            SelectionRule::AlphaZeroPuct => "alphazero_puct",
            SelectionRule::PriorUct => "prior_uct",
            SelectionRule::PibarSampling => "pibar_sampling",
        }
    }
}

impl fmt::Display for SelectionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SelectionRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "alphazero_puct" => Ok(SelectionRule::AlphaZeroPuct),
            "prior_uct" => Ok(SelectionRule::PriorUct),
            "pibar_sampling" => Ok(SelectionRule::PibarSampling),
            other => Err(Error::Config(format!("unknown selection rule `{other}`"))),
        }
    }
}

/// Scores of the AlphaZero rule, `q_a + c·π_θ(a)·√N/(1 + n_a)`.
pub fn puct_scores(stats: &NodeStats, c: f64, q_norm: &[f64]) -> Vec<f64> {
    let sqrt_total = (stats.total_visits() as f64).sqrt();
    q_norm
        .iter()
        .zip(stats.prior.probs())
        .zip(&stats.n)
        .map(|((&q, &p), &n)| q + c * p * sqrt_total / (1.0 + n as f64))
        .collect()
}

pub fn select_action_alphazero(stats: &NodeStats, c: f64, q_norm: &[f64]) -> usize {
    if stats.total_visits() == 0 {
        return stats.prior.argmax();
    }
    argmax(&puct_scores(stats, c, q_norm))
}

/// Scores of the prior-weighted UCT rule, `q_a + c·√(π_θ(a)·log N/(1 + n_a))`.
pub fn uct_scores(stats: &NodeStats, c: f64, q_norm: &[f64]) -> Vec<f64> {
    let log_total = (stats.total_visits() as f64).ln();
    q_norm
        .iter()
        .zip(stats.prior.probs())
        .zip(&stats.n)
        .map(|((&q, &p), &n)| q + c * (p * log_total / (1.0 + n as f64)).sqrt())
        .collect()
}

pub fn select_action_uct(stats: &NodeStats, c: f64, q_norm: &[f64]) -> usize {
    if stats.total_visits() == 0 {
        return stats.prior.argmax();
    }
    argmax(&uct_scores(stats, c, q_norm))
}

/// π̄ at a node from its (normalized) q-values and visit counts. A node
/// without visits carries no q information and returns its prior.
pub fn node_regularized_policy(
    stats: &NodeStats,
    solver: &SolverConfig,
    q: &[f64],
) -> Result<ActionDistribution> {
    if stats.total_visits() == 0 {
        return Ok(stats.prior.clone());
    }
    let lambda = solver.multiplier(&stats.n)?;
    Ok(solve_regularized(q, &stats.prior, lambda.value(), solver.kind, solver)?.policy)
}

pub fn select_action_pibar<R: Rng + ?Sized>(
    stats: &NodeStats,
    solver: &SolverConfig,
    q_norm: &[f64],
    rng: &mut R,
) -> Result<usize> {
    Ok(node_regularized_policy(stats, solver, q_norm)?.sample(rng))
}

pub fn select<R: Rng + ?Sized>(
    rule: SelectionRule,
    stats: &NodeStats,
    solver: &SolverConfig,
    q_norm: &[f64],
    rng: &mut R,
) -> Result<usize> {
    match rule {
        SelectionRule::AlphaZeroPuct => Ok(select_action_alphazero(stats, solver.c, q_norm)),
        SelectionRule::PriorUct => Ok(select_action_uct(stats, solver.c, q_norm)),
        SelectionRule::PibarSampling => select_action_pibar(stats, solver, q_norm, rng),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::search::node::empirical_policy;
    use crate::solver::compute_lambda;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn stats(q: &[f64], n: &[u64], prior: &[f64]) -> NodeStats {
        let mut s = NodeStats::new(ActionDistribution::prior(prior.to_vec()).unwrap(), 0.0, 0.0);
        s.q = q.to_vec();
        s.n = n.to_vec();
        s
    }

    #[test]
    fn puct_hand_example() {
        // 1 + 1.25·0.5·√10/11 ≈ 1.1797 versus 1.25·0.5·√10 ≈ 1.9764
        let s = stats(&[1.0, 0.0], &[10, 0], &[0.5, 0.5]);
        let scores = puct_scores(&s, 1.25, &s.q);
        assert!((scores[0] - (1.0 + 0.625 * 10f64.sqrt() / 11.0)).abs() < 1e-12);
        assert!((scores[1] - 0.625 * 10f64.sqrt()).abs() < 1e-12);
        assert_eq!(select_action_alphazero(&s, 1.25, &s.q), 1);
    }

    #[test]
    fn unvisited_nodes_follow_the_prior() {
        let s = stats(&[0.5; 3], &[0; 3], &[0.2, 0.5, 0.3]);
        assert_eq!(select_action_alphazero(&s, 1.25, &s.q), 1);
        assert_eq!(select_action_uct(&s, 1.25, &s.q), 1);
        let flat = stats(&[0.5; 3], &[0; 3], &[1.0 / 3.0; 3]);
        assert_eq!(select_action_alphazero(&flat, 1.25, &flat.q), 0);
    }

    #[test]
    fn symmetric_uct_picks_lowest_index() {
        let s = stats(&[0.3; 4], &[2; 4], &[0.25; 4]);
        assert_eq!(select_action_uct(&s, 1.0, &s.q), 0);
    }

    #[test]
    fn uct_bonus_eventually_wins_for_unvisited_action() {
        let mut s = stats(&[0.0, 1.0], &[0, 10], &[0.5, 0.5]);
        let mut picked = false;
        for total in [10u64, 100, 1_000, 100_000, 10_000_000] {
            s.n = vec![0, total];
            if select_action_uct(&s, 1.0, &s.q) == 0 {
                picked = true;
                break;
            }
        }
        assert!(picked);
    }

    #[test]
    fn puct_equals_multiplier_form() {
        // q + λ_N·π_θ/π̂ with π̂ from pseudo-counts
        let s = stats(&[0.2, 0.9, 0.4], &[3, 5, 0], &[0.5, 0.2, 0.3]);
        let lam = compute_lambda(1.25, &s.n).unwrap().value();
        let pihat = empirical_policy(&s.n);
        let alt: Vec<f64> = (0..3)
            .map(|a| s.q[a] + lam * s.prior[a] / pihat[a])
            .collect();
        let direct = puct_scores(&s, 1.25, &s.q);
        for a in 0..3 {
            assert!((alt[a] - direct[a]).abs() < 1e-12);
        }
    }

    #[test]
    fn pibar_sampling_is_seeded_and_degenerates_to_greedy() {
        let s = stats(&[0.1, 0.8, 0.3], &[4, 4, 4], &[0.2, 0.3, 0.5]);
        let solver = SolverConfig::default();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..32)
                .map(|_| select_action_pibar(&s, &solver, &s.q, &mut rng).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(11), draw(11));

        // the multiplier vanishes as c → 0
        let greedy = SolverConfig {
            c: 1e-300,
            ..solver
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            assert_eq!(select_action_pibar(&s, &greedy, &s.q, &mut rng).unwrap(), 1);
        }
    }

    #[test]
    fn rule_names_parse() {
        for rule in [
            SelectionRule::AlphaZeroPuct,
            SelectionRule::PriorUct,
            SelectionRule::PibarSampling,
        ] {
            assert_eq!(rule.as_str().parse::<SelectionRule>().unwrap(), rule);
        }
    }
}

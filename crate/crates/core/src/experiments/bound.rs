//! The 1/t tracking bound for a constant target.
//!
//! With `p_t(a) = (n_t(a) + 1)/(|A| + t)` after `t` rounds, any selector that
//! only picks actions with `p_{t−1}(a) ≤ π(a)` keeps
//! `‖π − p_t‖_∞ ≤ (|A| − 1)/(|A| + t)`. Such an action always exists because
//! both vectors sum to one; the max-deficit selector picks the largest
//! `π(a) − p_{t−1}(a)`. The violating selector picks the most
//! over-represented action instead and serves as a negative control.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{derive_seed, par_map, resolve_workers, CsvRow, RunConfig};
use crate::error::Result;
use crate::simplex::argmax;

const BOUND_TAG: u64 = 0x0062_6f75_6e64;
const SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundSelector {
    MaxDeficit,
    Violating,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BoundOutcome {
    /// `max_t ‖π − p_t‖_∞ · (|A| + t)/(|A| − 1)`; 0 for a single action.
    pub max_ratio: f64,
    pub bound_violations: usize,
    pub assumption_violations: usize,
}

/// Runs `horizon` rounds of the counting process against target `pi`.
pub fn bound_process(pi: &[f64], horizon: usize, selector: BoundSelector) -> BoundOutcome {
    let k = pi.len();
    let mut counts = vec![0u64; k];
    let mut outcome = BoundOutcome::default();
    for t in 1..=horizon {
        let denom = (k + t - 1) as f64;
        let deficit: Vec<f64> = pi
            .iter()
            .zip(&counts)
            .map(|(&p, &n)| p - (n as f64 + 1.0) / denom)
            .collect();
        let action = match selector {
            BoundSelector::MaxDeficit => argmax(&deficit),
            BoundSelector::Violating => argmax(&deficit.iter().map(|d| -d).collect::<Vec<_>>()),
        };
        if deficit[action] < -SLACK {
            outcome.assumption_violations += 1;
        }
        counts[action] += 1;

        let denom = (k + t) as f64;
        let error = pi
            .iter()
            .zip(&counts)
            .map(|(&p, &n)| (p - (n as f64 + 1.0) / denom).abs())
            .fold(0.0, f64::max);
        let bound = (k - 1) as f64 / denom;
        if error > bound + SLACK {
            outcome.bound_violations += 1;
        }
        let ratio = if k == 1 { 0.0 } else { error / bound };
        outcome.max_ratio = outcome.max_ratio.max(ratio);
    }
    outcome
}

/// Smallest `2(|A| + t)·|π(a) − (n + 1)/(|A| + t)|` over rounds `t ≤ horizon`,
/// `k ≤ 10` and all `n`, for `π(a) = (1/2 + k)/(|A| + t)`. At least 1: no
/// count process gets closer than `1/(2(|A| + t))`.
pub fn tightness_gap(num_actions: usize, horizon: usize) -> f64 {
    let mut gap = f64::INFINITY;
    for t in 1..=horizon {
        let denom = (num_actions + t) as f64;
        for k in 0..=10u32 {
            let pi = (0.5 + f64::from(k)) / denom;
            // the nearest counts are n + 1 ∈ {k, k + 1}; check a neighbourhood
            for n in k.saturating_sub(2)..=k + 2 {
                let p = (f64::from(n) + 1.0) / denom;
                gap = gap.min(2.0 * denom * (pi - p).abs());
            }
        }
    }
    gap
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundRow {
    pub scenario: String,
    pub num_actions: usize,
    pub seed: u64,
    pub rounds: usize,
    /// Worst normalized error for the bound scenarios, smallest normalized
    /// gap for `tightness`.
    pub statistic: f64,
    pub bound_violations: usize,
    pub assumption_violations: usize,
}

impl CsvRow for BoundRow {
    const HEADER: &'static [&'static str] = &[
        "scenario",
        "num_actions",
        "seed",
        "rounds",
        "statistic",
        "bound_violations",
        "assumption_violations",
    ];
}

impl BoundRow {
    /// Whether the row counts against the command's exit status. The
    /// violating selector is expected to break the assumption.
    pub fn failed(&self) -> bool {
        match self.scenario.as_str() {
            "violating" => self.assumption_violations == 0 && self.num_actions > 1,
            "tightness" => self.statistic < 1.0 - 1e-9,
            _ => self.bound_violations > 0 || self.assumption_violations > 0,
        }
    }
}

fn random_target<R: Rng>(num_actions: usize, rng: &mut R) -> Vec<f64> {
    let weights: Vec<f64> = (0..num_actions)
        .map(|_| rng.random_range(0.05..1.0))
        .collect();
    let total: f64 = weights.iter().sum();
    weights.iter().map(|w| w / total).collect()
}

pub fn cmd_bound(config: &RunConfig) -> Result<Vec<BoundRow>> {
    config.validate()?;
    let items: Vec<(usize, u64)> = config
        .action_counts
        .iter()
        .flat_map(|&k| config.seeds.iter().map(move |&s| (k, s)))
        .collect();
    let workers = resolve_workers(config.workers)?;
    let rows = par_map(workers, &items, |&(k, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[BOUND_TAG, k as u64]));
        let random = random_target(k, &mut rng);
        let uniform = vec![1.0 / k as f64; k];
        let row = |scenario: &str, outcome: BoundOutcome| BoundRow {
            scenario: scenario.into(),
            num_actions: k,
            seed,
            rounds: config.horizon,
            statistic: outcome.max_ratio,
            bound_violations: outcome.bound_violations,
            assumption_violations: outcome.assumption_violations,
        };
        Ok(vec![
            row(
                "uniform",
                bound_process(&uniform, config.horizon, BoundSelector::MaxDeficit),
            ),
            row(
                "random",
                bound_process(&random, config.horizon, BoundSelector::MaxDeficit),
            ),
            row(
                "violating",
                bound_process(&random, config.horizon, BoundSelector::Violating),
            ),
            BoundRow {
                statistic: tightness_gap(k, config.horizon),
                ..row("tightness", BoundOutcome::default())
            },
        ])
    })?;
    Ok(rows.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_action_has_zero_error() {
        let outcome = bound_process(&[1.0], 100, BoundSelector::MaxDeficit);
        assert_eq!(outcome, BoundOutcome::default());
    }

    #[test]
    fn uniform_four_holds_for_ten_thousand_rounds() {
        let outcome = bound_process(&[0.25; 4], 10_000, BoundSelector::MaxDeficit);
        assert_eq!(outcome.bound_violations, 0);
        assert_eq!(outcome.assumption_violations, 0);
        assert!(outcome.max_ratio <= 1.0);
    }

    #[test]
    fn violating_selector_is_detected() {
        let outcome = bound_process(&[0.7, 0.2, 0.1], 200, BoundSelector::Violating);
        assert!(outcome.assumption_violations > 0);
        assert!(outcome.bound_violations > 0);
    }

    #[test]
    fn tightness_gap_is_at_least_one() {
        let gap = tightness_gap(4, 500);
        assert!(gap >= 1.0 - 1e-9, "{gap}");
        assert!(gap <= 1.0 + 1e-9, "{gap}");
    }
}

//! Probability vectors on the action simplex and the f-divergences used by
//! the selection rules and the regularized solver.
//!
//! An f-divergence is `D_f(p, q) = Σ_b q(b) · f(p(b) / q(b))` for a convex
//! generator `f` with `f(1) = 0`. Three generators are supported:
//!
//! | kind         | f(x)         | f′(x)      | D_f(p, q)            |
//! |--------------|--------------|------------|----------------------|
//! | `ReverseKl`  | −log x       | −1/x       | KL(q, p)             |
//! | `ForwardKl`  | x·log x      | log x + 1  | KL(p, q)             |
//! | `Hellinger`  | 2 − 2√x      | −1/√x      | 2 − 2·Σ √(p·q)       |

use std::fmt;
use std::ops::Index;
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Inputs whose mass deviates from 1 by at most this much are renormalized.
pub const RENORMALIZE_TOLERANCE: f64 = 1e-6;

/// A probability vector over a finite action set.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionDistribution {
    probs: Vec<f64>,
}

impl ActionDistribution {
    /// Validates `probs` as a point of the simplex. Float drift up to
    /// [`RENORMALIZE_TOLERANCE`] is absorbed by renormalizing.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("empty action set".into()));
        }
        for (a, &p) in probs.iter().enumerate() {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::InvalidDistribution(format!(
                    "weight {p} at action {a} is not a finite non-negative number"
                )));
            }
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > RENORMALIZE_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        let mut probs = probs;
        if total != 1.0 {
            probs.iter_mut().for_each(|p| *p /= total);
        }
        Ok(Self { probs })
    }

    /// Like [`ActionDistribution::new`] but also requires every weight to be
    /// strictly positive, as needed for a search prior.
    pub fn prior(probs: Vec<f64>) -> Result<Self> {
        let dist = Self::new(probs)?;
        if let Some(a) = dist.probs.iter().position(|&p| p <= 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "prior weight at action {a} is not strictly positive"
            )));
        }
        Ok(dist)
    }

    /// Normalizes arbitrary non-negative weights with positive total mass.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "weights have total mass {total}"
            )));
        }
        Self::new(weights.into_iter().map(|w| w / total).collect())
    }

    pub fn uniform(num_actions: usize) -> Self {
        assert!(num_actions > 0, "uniform distribution over an empty set");
        Self {
            probs: vec![1.0 / num_actions as f64; num_actions],
        }
    }

    pub fn one_hot(num_actions: usize, action: usize) -> Self {
        assert!(action < num_actions, "one-hot index out of range");
        let mut probs = vec![0.0; num_actions];
        probs[action] = 1.0;
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.probs.iter().all(|&p| p > 0.0)
    }

    pub fn l1_distance(&self, other: &Self) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .sum()
    }

    pub fn linf_distance(&self, other: &Self) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Draws an action index with probability proportional to its weight.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        // weights are validated at construction so this cannot fail
        WeightedIndex::new(&self.probs)
            .expect("validated distribution")
            .sample(rng)
    }

    /// Lowest index among the maximal weights.
    pub fn argmax(&self) -> usize {
        argmax(&self.probs)
    }
}

impl Index<usize> for ActionDistribution {
    type Output = f64;

    fn index(&self, index: usize) -> &f64 {
        &self.probs[index]
    }
}

/// Lowest index of the maximum. NaN entries never win.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DivergenceKind {
    /// `f(x) = −log x`; yields the AlphaZero selection rule.
    ReverseKl,
    /// `f(x) = x·log x`; the regularized solution is a softmax.
    ForwardKl,
    /// `f(x) = 2 − 2√x`; yields the prior-weighted UCT rule.
    Hellinger,
}

impl DivergenceKind {
    pub const ALL: [DivergenceKind; 3] = [
        DivergenceKind::ReverseKl,
        DivergenceKind::ForwardKl,
        DivergenceKind::Hellinger,
    ];

    pub fn generator(self, x: f64) -> f64 {
        match self {
            DivergenceKind::ReverseKl => -x.ln(),
            DivergenceKind::ForwardKl => {
                if x == 0.0 {
                    0.0
                } else {
                    x * x.ln()
                }
            }
            DivergenceKind::Hellinger => 2.0 - 2.0 * x.sqrt(),
        }
    }

    pub fn derivative(self, x: f64) -> f64 {
        match self {
            DivergenceKind::ReverseKl => -1.0 / x,
            DivergenceKind::ForwardKl => x.ln() + 1.0,
            DivergenceKind::Hellinger => -1.0 / x.sqrt(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DivergenceKind::ReverseKl => "reverse_kl",
            DivergenceKind::ForwardKl => "forward_kl",
            DivergenceKind::Hellinger => "hellinger",
        }
    }
}

impl fmt::Display for DivergenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DivergenceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reverse_kl" => Ok(DivergenceKind::ReverseKl),
            "forward_kl" => Ok(DivergenceKind::ForwardKl),
            "hellinger" => Ok(DivergenceKind::Hellinger),
            other => Err(Error::Config(format!(
                "unknown divergence `{other}` (expected reverse_kl, forward_kl or hellinger)"
            ))),
        }
    }
}

fn check_reference(p: &ActionDistribution, q: &ActionDistribution) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: q.len(),
            got: p.len(),
        });
    }
    if let Some(b) = q.probs().iter().position(|&w| w <= 0.0) {
        return Err(Error::domain_at(b, "reference distribution has zero mass"));
    }
    Ok(())
}

/// `D_f(p, q) = Σ_b q(b) · f(p(b) / q(b))`. Requires `q > 0`.
pub fn f_divergence(
    kind: DivergenceKind,
    p: &ActionDistribution,
    q: &ActionDistribution,
) -> Result<f64> {
    check_reference(p, q)?;
    Ok(p.probs()
        .iter()
        .zip(q.probs())
        .map(|(&pb, &qb)| qb * kind.generator(pb / qb))
        .sum())
}

/// `KL(p, q) = Σ_a p(a) · log(p(a) / q(a))` with `0 · log 0 = 0`.
pub fn kl(p: &ActionDistribution, q: &ActionDistribution) -> Result<f64> {
    check_reference(p, q)?;
    Ok(p.probs()
        .iter()
        .zip(q.probs())
        .filter(|(&pa, _)| pa > 0.0)
        .map(|(&pa, &qa)| pa * (pa / qa).ln())
        .sum())
}

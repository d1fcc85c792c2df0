//! Exact regularized policies.
//!
//! For search Q-values `q`, a strictly positive prior `π_θ` and a multiplier
//! `λ > 0`, the regularized policy is
//!
//! ```text
//! π̄_f = argmax_{y ∈ simplex}  qᵀy − λ · Σ_a π_θ(a) f(y(a) / π_θ(a))
//! ```
//!
//! Stationarity gives `q − λ f′(π̄ / π_θ) = α·1` for a scalar `α`. For the
//! reverse KL (AlphaZero) this is `π̄ = λ π_θ / (α − q)`; for the Hellinger
//! generator (UCT) it is `π̄ = π_θ (λ / (α − q))²`. In both cases the total
//! mass is strictly decreasing in `α` on `α > max q`, and `α` is bracketed by
//!
//! ```text
//! α_min = max_b (q[b] + λ g(π_θ[b]))   α_max = max_b q[b] + λ
//! ```
//!
//! with `g(p) = p` (reverse KL) or `g(p) = √p` (Hellinger), so the normalizer
//! is found by bisection. The forward KL has the closed form
//! `π̄ ∝ π_θ · exp(q / λ)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simplex::{argmax, ActionDistribution, DivergenceKind};

pub const DEFAULT_EXPLORATION: f64 = 1.25;
pub const DEFAULT_BISECTION_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_BISECTION_ITERS: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Exploration constant `c` of the selection rules.
    pub c: f64,
    pub kind: DivergenceKind,
    /// Absolute tolerance on `Σ π_α − 1`.
    pub bisection_tol: f64,
    pub max_bisection_iters: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            c: DEFAULT_EXPLORATION,
            kind: DivergenceKind::ReverseKl,
            bisection_tol: DEFAULT_BISECTION_TOL,
            max_bisection_iters: DEFAULT_MAX_BISECTION_ITERS,
        }
    }
}

impl SolverConfig {
    pub fn with_kind(kind: DivergenceKind) -> Self {
        Self {
            kind,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::Config(format!("c must be positive, got {}", self.c)));
        }
        if self.bisection_tol.is_nan() || self.bisection_tol <= 0.0 {
            return Err(Error::Config(format!(
                "bisection_tol must be positive, got {}",
                self.bisection_tol
            )));
        }
        if self.max_bisection_iters == 0 {
            return Err(Error::Config(
                "max_bisection_iters must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// The multiplier matching this config's divergence for the given counts.
    pub fn multiplier(&self, visit_counts: &[u64]) -> Result<Multiplier> {
        multiplier_for(self.kind, self.c, visit_counts)
    }

    pub fn solve(
        &self,
        q: &[f64],
        prior: &ActionDistribution,
        lambda: &Multiplier,
    ) -> Result<RegularizedPolicy> {
        solve_regularized(q, prior, lambda.value(), self.kind, self)
    }
}

/// Count-dependent regularization weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Multiplier {
    value: f64,
    total_visits: u64,
    num_actions: usize,
}

impl Multiplier {
    /// A multiplier with an explicit value, not derived from visit counts
    /// (`total_visits` is reported as 0).
    pub fn fixed(value: f64, num_actions: usize) -> Result<Self> {
        if !(value >= 0.0 && value.is_finite()) {
            return Err(Error::domain(format!(
                "multiplier must be finite and non-negative, got {value}"
            )));
        }
        if num_actions == 0 {
            return Err(Error::domain("empty action set"));
        }
        Ok(Self {
            value,
            total_visits: 0,
            num_actions,
        })
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn total_visits(&self) -> u64 {
        self.total_visits
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }
}

fn visit_total(c: f64, visit_counts: &[u64]) -> Result<u64> {
    if visit_counts.is_empty() {
        return Err(Error::domain("empty action set"));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::domain(format!(
            "exploration constant must be positive, got {c}"
        )));
    }
    Ok(visit_counts.iter().sum())
}

/// `λ_N = c · √N / (|A| + N)`, the AlphaZero multiplier.
pub fn compute_lambda(c: f64, visit_counts: &[u64]) -> Result<Multiplier> {
    let n = visit_total(c, visit_counts)?;
    let num_actions = visit_counts.len();
    let nf = n as f64;
    Ok(Multiplier {
        value: c * nf.sqrt() / (num_actions as f64 + nf),
        total_visits: n,
        num_actions,
    })
}

/// `λ_N^UCT = c · √(log N / (|A| + N))`. Undefined for `N = 0`.
pub fn compute_lambda_uct(c: f64, visit_counts: &[u64]) -> Result<Multiplier> {
    let n = visit_total(c, visit_counts)?;
    if n == 0 {
        return Err(Error::domain(
            "UCT multiplier needs at least one visit (log 0)",
        ));
    }
    let num_actions = visit_counts.len();
    let nf = n as f64;
    Ok(Multiplier {
        value: c * (nf.ln() / (num_actions as f64 + nf)).sqrt(),
        total_visits: n,
        num_actions,
    })
}

/// `c / √N`, the multiplier whose forward-KL selection rule is
/// `q_a + c/√N · log(π_θ(a) / (n_a + 1))`. Undefined for `N = 0`.
pub fn compute_lambda_forward_kl(c: f64, visit_counts: &[u64]) -> Result<Multiplier> {
    let n = visit_total(c, visit_counts)?;
    if n == 0 {
        return Err(Error::domain(
            "forward-KL multiplier needs at least one visit",
        ));
    }
    Ok(Multiplier {
        value: c / (n as f64).sqrt(),
        total_visits: n,
        num_actions: visit_counts.len(),
    })
}

pub fn multiplier_for(kind: DivergenceKind, c: f64, visit_counts: &[u64]) -> Result<Multiplier> {
    match kind {
        DivergenceKind::ReverseKl => compute_lambda(c, visit_counts),
        DivergenceKind::Hellinger => compute_lambda_uct(c, visit_counts),
        DivergenceKind::ForwardKl => compute_lambda_forward_kl(c, visit_counts),
    }
}

/// Final state of the bisection on the normalizer `α`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DichotomySearchState {
    pub alpha_lo: f64,
    pub alpha_hi: f64,
    pub alpha: f64,
    /// `Σ π_α − 1` at `alpha`, before renormalization.
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegularizedPolicy {
    pub policy: ActionDistribution,
    /// The normalizer `α`, when the solution has one (`λ > 0`).
    pub alpha: Option<f64>,
    /// Present when the solution came from bisection.
    pub search: Option<DichotomySearchState>,
}

fn validate_inputs(q: &[f64], prior: &ActionDistribution) -> Result<()> {
    if q.len() != prior.len() {
        return Err(Error::DimensionMismatch {
            expected: prior.len(),
            got: q.len(),
        });
    }
    if let Some(a) = q.iter().position(|v| !v.is_finite()) {
        return Err(Error::domain_at(a, format!("non-finite q-value {}", q[a])));
    }
    if let Some(a) = prior.probs().iter().position(|&p| p <= 0.0) {
        return Err(Error::domain_at(a, "prior is not strictly positive"));
    }
    Ok(())
}

/// Mass of `π_α` where `α = max q + offset`, for the bisected kinds.
fn mass_at(
    kind: DivergenceKind,
    shifted_q: &[f64],
    prior: &[f64],
    lambda: f64,
    offset: f64,
) -> f64 {
    shifted_q
        .iter()
        .zip(prior)
        .map(|(&q, &p)| weight(kind, q, p, lambda, offset))
        .sum()
}

#[inline]
fn weight(kind: DivergenceKind, shifted_q: f64, prior: f64, lambda: f64, offset: f64) -> f64 {
    let gap = offset - shifted_q;
    match kind {
        DivergenceKind::ReverseKl => lambda * prior / gap,
        DivergenceKind::Hellinger => prior * (lambda / gap).powi(2),
        DivergenceKind::ForwardKl => unreachable!("forward KL is solved in closed form"),
    }
}

/// Solves for the regularized policy of the given divergence.
///
/// `λ = 0` returns the greedy one-hot policy (lowest index on ties).
pub fn solve_regularized(
    q: &[f64],
    prior: &ActionDistribution,
    lambda: f64,
    kind: DivergenceKind,
    config: &SolverConfig,
) -> Result<RegularizedPolicy> {
    validate_inputs(q, prior)?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::domain(format!(
            "multiplier must be non-negative, got {lambda}"
        )));
    }
    if lambda == 0.0 {
        return Ok(RegularizedPolicy {
            policy: ActionDistribution::one_hot(q.len(), argmax(q)),
            alpha: None,
            search: None,
        });
    }

    // Work with α offset from max q: the bracket then scales with λ and keeps
    // full relative precision when λ is tiny.
    let q_max = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let shifted: Vec<f64> = q.iter().map(|v| v - q_max).collect();
    let prior = prior.probs();

    if kind == DivergenceKind::ForwardKl {
        let weights: Vec<f64> = shifted
            .iter()
            .zip(prior)
            .map(|(&s, &p)| p * (s / lambda).exp())
            .collect();
        let total: f64 = weights.iter().sum();
        let policy = ActionDistribution::from_weights(weights)?;
        // q − λ(log(y/π) + 1) = α
        let alpha = q_max - lambda * (1.0 - total.ln());
        return Ok(RegularizedPolicy {
            policy,
            alpha: Some(alpha),
            search: None,
        });
    }

    let scale = |p: f64| match kind {
        DivergenceKind::Hellinger => p.sqrt(),
        _ => p,
    };
    let mut lo = shifted
        .iter()
        .zip(prior)
        .map(|(&s, &p)| s + lambda * scale(p))
        .fold(f64::NEG_INFINITY, f64::max);
    let mut hi = lambda;

    let mut offset = lo;
    let mut residual = mass_at(kind, &shifted, prior, lambda, offset) - 1.0;
    let mut iterations = 0;
    if residual.abs() > config.bisection_tol {
        let hi_residual = mass_at(kind, &shifted, prior, lambda, hi) - 1.0;
        if hi_residual.abs() <= config.bisection_tol {
            offset = hi;
            residual = hi_residual;
        } else {
            let mut collapsed = false;
            while iterations < config.max_bisection_iters {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    collapsed = true;
                    break;
                }
                iterations += 1;
                offset = mid;
                residual = mass_at(kind, &shifted, prior, lambda, mid) - 1.0;
                if residual.abs() <= config.bisection_tol {
                    break;
                }
                if residual > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            // A bracket squeezed to adjacent floats is as converged as it gets.
            if residual.abs() > config.bisection_tol && !collapsed {
                return Err(Error::NoConvergence {
                    iterations,
                    residual,
                });
            }
        }
    }

    let weights: Vec<f64> = shifted
        .iter()
        .zip(prior)
        .map(|(&s, &p)| weight(kind, s, p, lambda, offset))
        .collect();
    let policy = ActionDistribution::from_weights(weights)?;
    let alpha = q_max + offset;
    Ok(RegularizedPolicy {
        policy,
        alpha: Some(alpha),
        search: Some(DichotomySearchState {
            alpha_lo: q_max + lo,
            alpha_hi: q_max + hi,
            alpha,
            residual,
            iterations,
        }),
    })
}

/// `π̄ = argmax_y qᵀy − λ·KL(π_θ, y)` with default tolerances.
pub fn solve_pibar(
    q: &[f64],
    prior: &ActionDistribution,
    lambda: &Multiplier,
) -> Result<ActionDistribution> {
    solve_pibar_f(q, prior, lambda, DivergenceKind::ReverseKl)
}

/// The regularized policy for an arbitrary supported f-divergence.
pub fn solve_pibar_f(
    q: &[f64],
    prior: &ActionDistribution,
    lambda: &Multiplier,
    kind: DivergenceKind,
) -> Result<ActionDistribution> {
    let config = SolverConfig::with_kind(kind);
    Ok(solve_regularized(q, prior, lambda.value(), kind, &config)?.policy)
}

/// Spread of the stationarity vector `s = q − λ f′(candidate / π_θ)`:
/// `max_a |s[a] − mean(s)|`. Zero exactly at the regularized policy.
pub fn kkt_residual(
    q: &[f64],
    prior: &ActionDistribution,
    lambda: &Multiplier,
    candidate: &ActionDistribution,
    kind: DivergenceKind,
) -> Result<f64> {
    validate_inputs(q, prior)?;
    if candidate.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: q.len(),
            got: candidate.len(),
        });
    }
    if let Some(a) = candidate.probs().iter().position(|&p| p <= 0.0) {
        return Err(Error::domain_at(a, "candidate is not strictly positive"));
    }
    let lam = lambda.value();
    let s: Vec<f64> = q
        .iter()
        .zip(prior.probs())
        .zip(candidate.probs())
        .map(|((&qa, &pa), &ya)| qa - lam * kind.derivative(ya / pa))
        .collect();
    let mean = s.iter().sum::<f64>() / s.len() as f64;
    Ok(s.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max))
}

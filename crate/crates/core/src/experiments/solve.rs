use crate::error::{Error, Result};
use crate::simplex::{ActionDistribution, DivergenceKind};
use crate::solver::{kkt_residual, multiplier_for, solve_regularized, Multiplier, SolverConfig};

/// One-shot π̄ problem. The multiplier is `lambda` when given, otherwise it
/// is computed from `counts` with the divergence's own formula.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveRequest {
    pub q: Vec<f64>,
    /// Uniform when absent.
    pub prior: Option<Vec<f64>>,
    pub lambda: Option<f64>,
    pub counts: Option<Vec<u64>>,
    pub kind: DivergenceKind,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub policy: ActionDistribution,
    pub lambda: f64,
    pub alpha: Option<f64>,
    /// `None` when the policy has a zero entry (λ = 0).
    pub kkt_residual: Option<f64>,
    pub iterations: usize,
}

pub fn cmd_solve(request: &SolveRequest) -> Result<SolveReport> {
    let prior = match &request.prior {
        Some(p) => ActionDistribution::prior(p.clone())?,
        None => ActionDistribution::uniform(request.q.len()),
    };
    if prior.len() != request.q.len() {
        return Err(Error::DimensionMismatch {
            expected: request.q.len(),
            got: prior.len(),
        });
    }
    let lambda = match (request.lambda, &request.counts) {
        (Some(value), None) => Multiplier::fixed(value, request.q.len())?,
        (None, Some(counts)) => {
            if counts.len() != request.q.len() {
                return Err(Error::DimensionMismatch {
                    expected: request.q.len(),
                    got: counts.len(),
                });
            }
            multiplier_for(request.kind, request.c, counts)?
        }
        _ => return Err(Error::Config("give exactly one of lambda or counts".into())),
    };
    let config = SolverConfig {
        c: request.c,
        kind: request.kind,
        ..SolverConfig::default()
    };
    let solution = solve_regularized(&request.q, &prior, lambda.value(), request.kind, &config)?;
    let kkt_residual = if solution.policy.is_strictly_positive() {
        Some(kkt_residual(
            &request.q,
            &prior,
            &lambda,
            &solution.policy,
            request.kind,
        )?)
    } else {
        None
    };
    Ok(SolveReport {
        lambda: lambda.value(),
        alpha: solution.alpha,
        kkt_residual,
        iterations: solution.search.map_or(0, |s| s.iterations),
        policy: solution.policy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_instance() {
        let report = cmd_solve(&SolveRequest {
            q: vec![1.0, 0.0],
            prior: None,
            lambda: Some(1.0),
            counts: None,
            kind: DivergenceKind::ReverseKl,
            c: 1.25,
        })
        .unwrap();
        assert!((report.alpha.unwrap() - (1.0 + 0.5f64.sqrt())).abs() < 1e-9);
        assert!(report.kkt_residual.unwrap() < 1e-6);
    }

    #[test]
    fn lambda_and_counts_are_exclusive() {
        let request = SolveRequest {
            q: vec![1.0, 0.0],
            prior: None,
            lambda: Some(1.0),
            counts: Some(vec![1, 1]),
            kind: DivergenceKind::ReverseKl,
            c: 1.25,
        };
        assert!(cmd_solve(&request).is_err());
    }
}

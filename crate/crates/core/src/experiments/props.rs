//! Randomized checks of the selection identities.
//!
//! Each check draws search states (Q-values, a positive prior, visit
//! counts) and compares a selection rule against its regularized-policy
//! reformulation. An instance whose top-two criterion gap is below the tie
//! gap is counted as a tie rather than judged.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{derive_seed, par_map, resolve_workers, CsvRow, RunConfig};
use crate::error::Result;
use crate::search::{
    empirical_policy, select_action_alphazero, select_action_uct, uct_scores, NodeStats,
};
use crate::simplex::{argmax, ActionDistribution, DivergenceKind};
use crate::solver::{
    compute_lambda, compute_lambda_uct, multiplier_for, solve_regularized, SolverConfig,
};

const PROPS_TAG: u64 = 0x0070_726f_7073;
const CHUNK: usize = 500;
/// Top-two gap below which an argmax comparison is a tie.
pub const TIE_GAP: f64 = 1e-9;
/// Finite-difference step on the counts.
pub const FD_STEP: f64 = 1e-5;
/// Tie gap on finite-difference gradients.
pub const FD_TIE_GAP: f64 = 1e-6;
/// Slack on `π̂(a*) ≤ π̄(a*)`, covering the solver tolerance.
const ORDER_SLACK: f64 = 1e-9;
const MAX_REPORTED_FAILURES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Check {
    /// PUCT's choice satisfies `π̂(a*) ≤ π̄(a*)`.
    PihatBelowPibar,
    /// PUCT argmax equals the argmax of the finite-difference gradient of
    /// `qᵀπ̂ − λ_N KL(π_θ, π̂)` in the counts.
    FdGradient,
    /// PUCT argmax equals `argmax π_θ(1/π̂ − 1/π̄)`.
    Reformulation,
    /// Prior-UCT with a uniform prior equals plain UCT with `c/√|A|`.
    UctUniform,
    /// Prior-UCT argmax equals `argmax √π_θ(1/√π̂ − 1/√π̄_UCT)`.
    UctReformulation,
    /// `argmax q − λ f′(π̂/π_θ) = argmax f′(π̄/π_θ) − f′(π̂/π_θ)`.
    GeneralArgmax(DivergenceKind),
    /// `π̂(a*) ≤ π̄_f(a*)` at `a* = argmax q − λ f′(π̂/π_θ)`.
    GeneralOrder(DivergenceKind),
}

impl Check {
    fn all() -> Vec<Check> {
        let mut checks = vec![
            Check::PihatBelowPibar,
            Check::FdGradient,
            Check::Reformulation,
            Check::UctUniform,
            Check::UctReformulation,
        ];
        for kind in DivergenceKind::ALL {
            checks.push(Check::GeneralArgmax(kind));
            checks.push(Check::GeneralOrder(kind));
        }
        checks
    }

    fn name(self) -> &'static str {
        match self {
            Check::PihatBelowPibar => "puct_pihat_le_pibar",
            Check::FdGradient => "puct_gradient_argmax",
            Check::Reformulation => "puct_pibar_argmax",
            Check::UctUniform => "uct_uniform_prior",
            Check::UctReformulation => "uct_pibar_argmax",
            Check::GeneralArgmax(_) => "f_argmax",
            Check::GeneralOrder(_) => "f_pihat_le_pibar",
        }
    }

    fn kind(self) -> DivergenceKind {
        match self {
            Check::UctUniform | Check::UctReformulation => DivergenceKind::Hellinger,
            Check::GeneralArgmax(kind) | Check::GeneralOrder(kind) => kind,
            _ => DivergenceKind::ReverseKl,
        }
    }

    fn uniform_prior(self) -> bool {
        self == Check::UctUniform
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Instance {
    q: Vec<f64>,
    prior: ActionDistribution,
    counts: Vec<u64>,
}

impl Instance {
    fn random<R: Rng>(rng: &mut R, uniform_prior: bool) -> Self {
        let k = rng.random_range(2..=20);
        let q = (0..k).map(|_| rng.random::<f64>()).collect();
        let prior = if uniform_prior {
            ActionDistribution::uniform(k)
        } else {
            let w = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
            ActionDistribution::from_weights(w).expect("positive weights")
        };
        let mut counts: Vec<u64> = (0..k).map(|_| rng.random_range(0..=30)).collect();
        // keep log N > 0 for the UCT multiplier
        while counts.iter().sum::<u64>() < 2 {
            let a = rng.random_range(0..k);
            counts[a] += 1;
        }
        Self { q, prior, counts }
    }

    fn stats(&self) -> NodeStats {
        let mut stats = NodeStats::new(self.prior.clone(), 0.0, 0.0);
        stats.q = self.q.clone();
        stats.n = self.counts.clone();
        stats
    }
}

enum Verdict {
    Pass,
    Tie,
    Fail(String),
}

fn top_two_gap(values: &[f64]) -> f64 {
    let best = argmax(values);
    let runner_up = values
        .iter()
        .enumerate()
        .filter(|&(a, _)| a != best)
        .map(|(_, &v)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    values[best] - runner_up
}

fn compare(name: &str, left: &[f64], right: &[f64], gap: f64) -> Verdict {
    if top_two_gap(left) < gap || top_two_gap(right) < gap {
        return Verdict::Tie;
    }
    let (a, b) = (argmax(left), argmax(right));
    if a == b {
        Verdict::Pass
    } else {
        Verdict::Fail(format!("{name}: argmax {a} vs {b}"))
    }
}

/// `qᵀπ̂ − λ_N KL(π_θ, π̂)` with π̂ and λ_N extended to real counts.
fn count_objective(q: &[f64], prior: &[f64], counts: &[f64], c: f64) -> f64 {
    let k = counts.len() as f64;
    let total: f64 = counts.iter().sum();
    let lambda = c * total.sqrt() / (k + total);
    let mut value = 0.0;
    for ((&qa, &pa), &na) in q.iter().zip(prior).zip(counts) {
        let pihat = (1.0 + na) / (k + total);
        value += qa * pihat - lambda * pa * (pa / pihat).ln();
    }
    value
}

fn fd_gradient(inst: &Instance, c: f64) -> Vec<f64> {
    let counts: Vec<f64> = inst.counts.iter().map(|&n| n as f64).collect();
    (0..counts.len())
        .map(|a| {
            let mut up = counts.clone();
            let mut down = counts.clone();
            up[a] += FD_STEP;
            down[a] -= FD_STEP;
            (count_objective(&inst.q, inst.prior.probs(), &up, c)
                - count_objective(&inst.q, inst.prior.probs(), &down, c))
                / (2.0 * FD_STEP)
        })
        .collect()
}

fn run_check(check: Check, inst: &Instance, c: f64) -> Result<Verdict> {
    let stats = inst.stats();
    let pihat = empirical_policy(&inst.counts);
    let solver = SolverConfig {
        c,
        kind: check.kind(),
        ..SolverConfig::default()
    };
    let verdict = match check {
        Check::PihatBelowPibar => {
            let a = select_action_alphazero(&stats, c, &inst.q);
            let lambda = compute_lambda(c, &inst.counts)?.value();
            let pibar = solve_regularized(
                &inst.q,
                &inst.prior,
                lambda,
                DivergenceKind::ReverseKl,
                &solver,
            )?
            .policy;
            order_verdict(a, &pihat, &pibar)
        }
        Check::FdGradient => {
            let puct: Vec<f64> = crate::search::puct_scores(&stats, c, &inst.q);
            let grad = fd_gradient(inst, c);
            if top_two_gap(&grad) < FD_TIE_GAP {
                Verdict::Tie
            } else {
                compare("gradient", &puct, &grad, 0.0)
            }
        }
        Check::Reformulation => {
            let puct = crate::search::puct_scores(&stats, c, &inst.q);
            let lambda = compute_lambda(c, &inst.counts)?.value();
            let pibar = solve_regularized(
                &inst.q,
                &inst.prior,
                lambda,
                DivergenceKind::ReverseKl,
                &solver,
            )?
            .policy;
            let reform: Vec<f64> = (0..inst.q.len())
                .map(|a| inst.prior[a] * (1.0 / pihat[a] - 1.0 / pibar[a]))
                .collect();
            compare("reformulation", &puct, &reform, TIE_GAP)
        }
        Check::UctUniform => {
            let k = inst.q.len() as f64;
            let total = inst.counts.iter().sum::<u64>() as f64;
            let plain: Vec<f64> = inst
                .q
                .iter()
                .zip(&inst.counts)
                .map(|(&q, &n)| q + c / k.sqrt() * (total.ln() / (1.0 + n as f64)).sqrt())
                .collect();
            if top_two_gap(&plain) < TIE_GAP {
                Verdict::Tie
            } else {
                let a = select_action_uct(&stats, c, &inst.q);
                let b = argmax(&plain);
                if a == b {
                    Verdict::Pass
                } else {
                    Verdict::Fail(format!("uct: argmax {a} vs {b}"))
                }
            }
        }
        Check::UctReformulation => {
            let uct = uct_scores(&stats, c, &inst.q);
            let lambda = compute_lambda_uct(c, &inst.counts)?.value();
            let pibar = solve_regularized(
                &inst.q,
                &inst.prior,
                lambda,
                DivergenceKind::Hellinger,
                &solver,
            )?
            .policy;
            let reform: Vec<f64> = (0..inst.q.len())
                .map(|a| inst.prior[a].sqrt() * (1.0 / pihat[a].sqrt() - 1.0 / pibar[a].sqrt()))
                .collect();
            compare("uct reformulation", &uct, &reform, TIE_GAP)
        }
        Check::GeneralArgmax(kind) | Check::GeneralOrder(kind) => {
            let lambda = multiplier_for(kind, c, &inst.counts)?.value();
            let pibar = solve_regularized(&inst.q, &inst.prior, lambda, kind, &solver)?.policy;
            let selection: Vec<f64> = (0..inst.q.len())
                .map(|a| inst.q[a] - lambda * kind.derivative(pihat[a] / inst.prior[a]))
                .collect();
            if let Check::GeneralOrder(_) = check {
                order_verdict(argmax(&selection), &pihat, &pibar)
            } else {
                let reform: Vec<f64> = (0..inst.q.len())
                    .map(|a| {
                        kind.derivative(pibar[a] / inst.prior[a])
                            - kind.derivative(pihat[a] / inst.prior[a])
                    })
                    .collect();
                compare("f reformulation", &selection, &reform, TIE_GAP)
            }
        }
    };
    Ok(verdict)
}

// Every maximizer satisfies the inequality, so ties need no special case.
fn order_verdict(a: usize, pihat: &ActionDistribution, pibar: &ActionDistribution) -> Verdict {
    if pihat[a] <= pibar[a] + ORDER_SLACK {
        Verdict::Pass
    } else {
        Verdict::Fail(format!(
            "pihat[{a}] = {} > pibar[{a}] = {}",
            pihat[a], pibar[a]
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropsRow {
    pub proposition: String,
    pub kind: String,
    pub instances: usize,
    pub passed: usize,
    pub failed: usize,
    pub ties: usize,
}

impl CsvRow for PropsRow {
    const HEADER: &'static [&'static str] = &[
        "proposition",
        "kind",
        "instances",
        "passed",
        "failed",
        "ties",
    ];
}

impl PropsRow {
    /// Pass rate among non-tie instances; 1 when every instance tied.
    pub fn pass_rate(&self) -> f64 {
        let judged = self.passed + self.failed;
        if judged == 0 {
            1.0
        } else {
            self.passed as f64 / judged as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PropsReport {
    pub rows: Vec<PropsRow>,
    /// Serialized failing instances, a few per check.
    pub failures: Vec<String>,
}

impl PropsReport {
    pub fn all_passed(&self) -> bool {
        self.rows.iter().all(|r| r.failed == 0)
    }

    pub fn row(&self, proposition: &str, kind: DivergenceKind) -> Option<&PropsRow> {
        self.rows
            .iter()
            .find(|r| r.proposition == proposition && r.kind == kind.as_str())
    }
}

#[derive(Default)]
struct Tally {
    passed: usize,
    failed: usize,
    ties: usize,
    failures: Vec<String>,
}

/// Runs `config.instances` instances of every check with the first
/// configured seed (0 when none is given).
pub fn cmd_props(config: &RunConfig) -> Result<PropsReport> {
    config.validate()?;
    let seed = config.seeds.first().copied().unwrap_or(0);
    let checks = Check::all();
    let chunks = config.instances.div_ceil(CHUNK);
    let items: Vec<(usize, usize)> = (0..checks.len())
        .flat_map(|ci| (0..chunks).map(move |chunk| (ci, chunk)))
        .collect();
    let workers = resolve_workers(config.workers)?;
    let tallies = par_map(workers, &items, |&(ci, chunk)| {
        let check = checks[ci];
        let mut rng =
            ChaCha8Rng::seed_from_u64(derive_seed(seed, &[PROPS_TAG, ci as u64, chunk as u64]));
        let count = CHUNK.min(config.instances - chunk * CHUNK);
        let mut tally = Tally::default();
        for _ in 0..count {
            let inst = Instance::random(&mut rng, check.uniform_prior());
            match run_check(check, &inst, config.c)? {
                Verdict::Pass => tally.passed += 1,
                Verdict::Tie => tally.ties += 1,
                Verdict::Fail(reason) => {
                    tally.failed += 1;
                    if tally.failures.len() < MAX_REPORTED_FAILURES {
                        tally.failures.push(format!(
                            "{} [{}] {reason}; q={:?} prior={:?} counts={:?}",
                            check.name(),
                            check.kind(),
                            inst.q,
                            inst.prior.probs(),
                            inst.counts
                        ));
                    }
                }
            }
        }
        Ok(tally)
    })?;

    let mut report = PropsReport::default();
    for (ci, check) in checks.iter().enumerate() {
        let mut row = PropsRow {
            proposition: check.name().into(),
            kind: check.kind().as_str().into(),
            instances: config.instances,
            passed: 0,
            failed: 0,
            ties: 0,
        };
        for (tally, _) in tallies.iter().zip(&items).filter(|(_, &(i, _))| i == ci) {
            row.passed += tally.passed;
            row.failed += tally.failed;
            row.ties += tally.ties;
            for failure in &tally.failures {
                if report
                    .failures
                    .iter()
                    .filter(|f| f.starts_with(check.name()))
                    .count()
                    < MAX_REPORTED_FAILURES
                {
                    report.failures.push(failure.clone());
                }
            }
        }
        report.rows.push(row);
    }
    Ok(report)
}

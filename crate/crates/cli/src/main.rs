use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use regmcts_core::experiments::{
    cmd_bound, cmd_props, cmd_solve, cmd_sweep, cmd_track, write_csv, ExperimentKind, RunConfig,
    SolveRequest,
};
use regmcts_core::simplex::DivergenceKind;
use regmcts_core::solver::DEFAULT_EXPLORATION;

/// Tree search as regularized policy optimization: experiments and a
/// one-shot π̄ solver.
#[derive(Debug, Parser)]
#[command(name = "regmcts", version)]
struct Cli {
    #[command(flatten)]
    common: Common,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Flat `key = value` config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Run with this single seed instead of the configured list.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// CSV destination; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads.
    #[arg(long, global = true, env = "REGMCTS_WORKERS")]
    workers: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// π̂ versus π̄ and π_G on a one-step bandit, one row per step and seed.
    Track,
    /// The 1/t tracking bound for constant targets.
    Bound,
    /// Randomized checks of the selection identities.
    Props,
    /// Per-episode returns of the agent variants over simulation budgets.
    Sweep,
    /// Solve for π̄ once and print it with its KKT residual.
    Solve(SolveArgs),
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Q-values, comma separated.
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        required = true
    )]
    q: Vec<f64>,

    /// Prior, comma separated; uniform when absent.
    #[arg(long, value_delimiter = ',')]
    prior: Option<Vec<f64>>,

    /// Multiplier value.
    #[arg(long, conflicts_with = "counts", required_unless_present = "counts")]
    lambda: Option<f64>,

    /// Visit counts, comma separated; the multiplier is computed from them.
    #[arg(long, value_delimiter = ',')]
    counts: Option<Vec<u64>>,

    #[arg(long, default_value = "reverse_kl")]
    kind: DivergenceKind,

    #[arg(long, default_value_t = DEFAULT_EXPLORATION)]
    c: f64,
}

fn load_config(common: &Common, kind: ExperimentKind) -> Result<RunConfig> {
    let mut config = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    config.check_experiment(kind)?;
    if let Some(seed) = common.seed {
        config.seeds = vec![seed];
    }
    if let Some(out) = &common.out {
        config.out = Some(out.clone());
    }
    if common.workers.is_some() {
        config.workers = common.workers;
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: Cli) -> Result<bool> {
    let kind = match &cli.command {
        Command::Track => ExperimentKind::Track,
        Command::Bound => ExperimentKind::Bound,
        Command::Props => ExperimentKind::Props,
        Command::Sweep => ExperimentKind::Sweep,
        Command::Solve(_) => ExperimentKind::Solve,
    };
    if let Command::Solve(args) = cli.command {
        return solve(args);
    }
    let config = load_config(&cli.common, kind)?;
    let out = config.out.as_deref();
    match kind {
        ExperimentKind::Track => write_csv(out, &cmd_track(&config)?)?,
        ExperimentKind::Sweep => write_csv(out, &cmd_sweep(&config)?)?,
        ExperimentKind::Bound => {
            let rows = cmd_bound(&config)?;
            write_csv(out, &rows)?;
            let failed: Vec<_> = rows.iter().filter(|r| r.failed()).collect();
            for row in &failed {
                eprintln!("bound check failed: {row:?}");
            }
            return Ok(failed.is_empty());
        }
        ExperimentKind::Props => {
            let report = cmd_props(&config)?;
            write_csv(out, &report.rows)?;
            for failure in &report.failures {
                eprintln!("failing instance: {failure}");
            }
            return Ok(report.all_passed());
        }
        ExperimentKind::Solve => unreachable!("handled above"),
    }
    Ok(true)
}

fn solve(args: SolveArgs) -> Result<bool> {
    if args.q.is_empty() {
        bail!("--q needs at least one value");
    }
    let report = cmd_solve(&SolveRequest {
        q: args.q,
        prior: args.prior,
        lambda: args.lambda,
        counts: args.counts,
        kind: args.kind,
        c: args.c,
    })
    .context("solve failed")?;
    let policy: Vec<String> = report.policy.probs().iter().map(f64::to_string).collect();
    println!("policy: {}", policy.join(","));
    println!("lambda: {}", report.lambda);
    match report.alpha {
        Some(alpha) => println!("alpha: {alpha}"),
        None => println!("alpha: none"),
    }
    match report.kkt_residual {
        Some(r) => println!("kkt_residual: {r}"),
        None => println!("kkt_residual: none"),
    }
    println!("iterations: {}", report.iterations);
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

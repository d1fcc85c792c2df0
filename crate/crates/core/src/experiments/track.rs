//! π̂ tracking π̄ on a one-step bandit.
//!
//! Each seed draws arm values from `U[0, 1)` and runs `n_sim` selections at a
//! root with a uniform prior. After selection `t` the root has `t` visits;
//! π̂, π̄ and the greedy policy π_G (one-hot on the best true arm) are
//! compared at that point.
//!
//! With [`TrackQ::TrueValues`] the root Q-values are the arm values
//! themselves. With [`TrackQ::Search`] they are the search statistics of a
//! tree over the bandit: pessimistic initialization for unvisited arms and
//! tree-wide normalization.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{derive_seed, par_map, resolve_workers, CsvRow, RunConfig, TrackQ};
use crate::env::BanditEnv;
use crate::error::Result;
use crate::search::{node_regularized_policy, select, uniform_evaluator, NodeStats, SearchTree};
use crate::simplex::ActionDistribution;

const TRACK_TAG: u64 = 0x0074_7261_636b;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrackingRow {
    pub seed: u64,
    pub step: usize,
    pub l1_pibar: f64,
    pub linf_pibar: f64,
    pub l1_greedy: f64,
    pub linf_greedy: f64,
}

impl CsvRow for TrackingRow {
    const HEADER: &'static [&'static str] = &[
        "seed",
        "step",
        "l1_pibar",
        "linf_pibar",
        "l1_greedy",
        "linf_greedy",
    ];
}

pub fn cmd_track(config: &RunConfig) -> Result<Vec<TrackingRow>> {
    config.validate()?;
    let workers = resolve_workers(config.workers)?;
    let per_seed = par_map(workers, &config.seeds, |&seed| track_seed(config, seed))?;
    Ok(per_seed.into_iter().flatten().collect())
}

fn row(
    seed: u64,
    step: usize,
    pihat: &ActionDistribution,
    pibar: &ActionDistribution,
    greedy: &ActionDistribution,
) -> TrackingRow {
    TrackingRow {
        seed,
        step,
        l1_pibar: pihat.l1_distance(pibar),
        linf_pibar: pihat.linf_distance(pibar),
        l1_greedy: pihat.l1_distance(greedy),
        linf_greedy: pihat.linf_distance(greedy),
    }
}

fn track_seed(config: &RunConfig, seed: u64) -> Result<Vec<TrackingRow>> {
    let mut env_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[TRACK_TAG, 0]));
    let env = BanditEnv::random(config.num_actions, &mut env_rng)?;
    let greedy = ActionDistribution::one_hot(config.num_actions, env.best_arm());
    match config.track_q {
        TrackQ::TrueValues => track_true_values(config, seed, &env, &greedy),
        TrackQ::Search => track_search(config, seed, &env, &greedy),
    }
}

fn track_true_values(
    config: &RunConfig,
    seed: u64,
    env: &BanditEnv,
    greedy: &ActionDistribution,
) -> Result<Vec<TrackingRow>> {
    let search = config.search(config.n_sim);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[TRACK_TAG, 1]));
    let values = env.true_values();
    let q = if search.normalize_q {
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi > lo {
            values.iter().map(|v| (v - lo) / (hi - lo)).collect()
        } else {
            vec![0.5; values.len()]
        }
    } else {
        values.to_vec()
    };
    let mut stats = NodeStats::new(ActionDistribution::uniform(values.len()), 0.0, 0.0);
    stats.q = values.to_vec();

    let mut rows = Vec::with_capacity(config.n_sim);
    for step in 1..=config.n_sim {
        let action = select(search.selection, &stats, &search.solver, &q, &mut rng)?;
        stats.n[action] += 1;
        let pibar = node_regularized_policy(&stats, &search.solver, &q)?;
        rows.push(row(seed, step, &stats.empirical_policy(), &pibar, greedy));
    }
    Ok(rows)
}

fn track_search(
    config: &RunConfig,
    seed: u64,
    env: &BanditEnv,
    greedy: &ActionDistribution,
) -> Result<Vec<TrackingRow>> {
    let search = config.search(config.n_sim);
    let evaluator = uniform_evaluator(config.num_actions);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[TRACK_TAG, 1]));

    let mut tree = SearchTree::new(0u8, 1.0)?;
    // the expanding simulation leaves the root with zero visits
    tree.simulate(env, &evaluator, &search, &mut rng, &mut |_| {})?;
    let root = tree.root().expect("root expanded");

    let mut rows = Vec::with_capacity(config.n_sim);
    for step in 1..=config.n_sim {
        tree.simulate(env, &evaluator, &search, &mut rng, &mut |_| {})?;
        let stats = tree.node(root);
        let q_norm = if search.normalize_q {
            tree.normalize_q(&stats.q)
        } else {
            stats.q.clone()
        };
        let pibar = node_regularized_policy(stats, &search.solver, &q_norm)?;
        rows.push(row(seed, step, &stats.empirical_policy(), &pibar, greedy));
    }
    Ok(rows)
}

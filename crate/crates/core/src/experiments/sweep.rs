//! Budget sweeps over the agent variants.
//!
//! Work items are `(n_sim, variant, seed)` in configuration order. The
//! environment depends only on the seed, so every variant of a seed faces
//! the same instance; the agent's stream is derived from the full tuple.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{derive_seed, par_map, resolve_workers, CsvRow, EnvKind, RunConfig};
use crate::agent::{
    run_episode_loop, run_factorized_episode_loop, AgentConfig, TrainingTrace, VariantFlags,
};
use crate::env::{BanditEnv, ChainMdp, FactorizedActionSpace, FactorizedBanditEnv};
use crate::error::Result;

const SWEEP_TAG: u64 = 0x0073_7765_6570;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub variant: String,
    pub n_sim: usize,
    pub seed: u64,
    pub episode: usize,
    #[serde(rename = "return")]
    pub ret: f64,
}

impl CsvRow for SweepRow {
    const HEADER: &'static [&'static str] = &["variant", "n_sim", "seed", "episode", "return"];
}

fn flag_bits(flags: VariantFlags) -> u64 {
    u64::from(flags.act_with_pibar)
        | u64::from(flags.search_with_pibar) << 1
        | u64::from(flags.learn_with_pibar) << 2
}

fn train(
    config: &RunConfig,
    flags: VariantFlags,
    n_sim: usize,
    seed: u64,
) -> Result<TrainingTrace> {
    let agent = AgentConfig {
        flags,
        search: config.search(n_sim),
        learning_rate: config.learning_rate,
    };
    let agent_seed = derive_seed(seed, &[SWEEP_TAG, 1, flag_bits(flags), n_sim as u64]);
    let mut env_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[SWEEP_TAG, 0]));
    let trace = match config.env {
        EnvKind::Chain => {
            let env = ChainMdp::new(config.chain_length, config.discount, config.random_start)?;
            run_episode_loop(&env, &agent, config.episodes, agent_seed)?.0
        }
        EnvKind::Bandit => {
            let env = BanditEnv::random(config.num_actions, &mut env_rng)?;
            run_episode_loop(&env, &agent, config.episodes, agent_seed)?.0
        }
        EnvKind::FactorizedBandit => {
            let space = FactorizedActionSpace::new(config.dims, config.bins)?;
            let env = FactorizedBanditEnv::random(space, &mut env_rng)?;
            run_factorized_episode_loop(&env, &space, &agent, config.episodes, agent_seed)?.0
        }
    };
    Ok(trace)
}

pub fn cmd_sweep(config: &RunConfig) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let variants = config.variant_flags()?;
    let items: Vec<(usize, VariantFlags, u64)> = config
        .n_sims
        .iter()
        .flat_map(|&n| {
            variants
                .iter()
                .flat_map(move |&v| config.seeds.iter().map(move |&s| (n, v, s)))
        })
        .collect();
    let workers = resolve_workers(config.workers)?;
    let traces = par_map(workers, &items, |&(n_sim, flags, seed)| {
        train(config, flags, n_sim, seed)
    })?;
    let mut rows = Vec::new();
    for (&(n_sim, flags, seed), trace) in items.iter().zip(traces) {
        let variant = flags.name();
        rows.extend(trace.episodes.iter().map(|e| SweepRow {
            variant: variant.clone(),
            n_sim,
            seed,
            episode: e.episode,
            ret: e.ret,
        }));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_budget_list_gives_no_rows() {
        let config = RunConfig {
            n_sims: vec![],
            ..RunConfig::default()
        };
        assert!(cmd_sweep(&config).unwrap().is_empty());
    }

    #[test]
    fn rows_follow_item_order() {
        let config = RunConfig {
            n_sims: vec![3],
            variants: vec!["baseline".into(), "all".into()],
            seeds: vec![1, 2],
            episodes: 2,
            env: EnvKind::Bandit,
            ..RunConfig::default()
        };
        let rows = cmd_sweep(&config).unwrap();
        let keys: Vec<(String, u64, usize)> = rows
            .iter()
            .map(|r| (r.variant.clone(), r.seed, r.episode))
            .collect();
        assert_eq!(
            keys,
            vec![
                ("baseline".into(), 1, 0),
                ("baseline".into(), 1, 1),
                ("baseline".into(), 2, 0),
                ("baseline".into(), 2, 1),
                ("all".into(), 1, 0),
                ("all".into(), 1, 1),
                ("all".into(), 2, 0),
                ("all".into(), 2, 1),
            ]
        );
    }

    #[test]
    fn factorized_sweep_runs() {
        let config = RunConfig {
            n_sims: vec![4],
            variants: vec!["all".into()],
            seeds: vec![0],
            episodes: 3,
            env: EnvKind::FactorizedBandit,
            ..RunConfig::default()
        };
        assert_eq!(cmd_sweep(&config).unwrap().len(), 3);
    }
}

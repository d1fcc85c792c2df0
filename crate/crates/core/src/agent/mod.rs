//! Acting and learning agents built on the search.
//!
//! The baseline acts by sampling π̂ at the root, selects in-tree with PUCT
//! and distills π̂ into a tabular softmax prior. Each flag swaps one of the
//! three for π̄: `ACT` samples actions from π̄, `SEARCH` samples π̄ inside
//! the tree, `LEARN` distills π̄. `ALL` sets all three.

mod prior;

use std::fmt;
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::factorized::{
    run_factorized_search, FactorizedActionSpace, FactorizedEvaluation, FactorizedSearchResult,
};
use crate::env::{Environment, StateKey};
use crate::error::{Error, Result};
use crate::search::{run_search, Evaluation, SearchConfig, SearchResult, SelectionRule};
use crate::simplex::ActionDistribution;

pub use prior::{
    softmax, softmax_kl, softmax_kl_gradient, TabularSoftmaxPrior, DEFAULT_LEARNING_RATE,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct VariantFlags {
    pub act_with_pibar: bool,
    pub search_with_pibar: bool,
    pub learn_with_pibar: bool,
}

impl VariantFlags {
    pub const BASELINE: Self = Self::new(false, false, false);
    pub const ACT: Self = Self::new(true, false, false);
    pub const SEARCH: Self = Self::new(false, true, false);
    pub const LEARN: Self = Self::new(false, false, true);
    pub const ALL: Self = Self::new(true, true, true);

    pub const NAMED: [Self; 5] = [
        Self::BASELINE,
        Self::ACT,
        Self::SEARCH,
        Self::LEARN,
        Self::ALL,
    ];

    pub const fn new(
        act_with_pibar: bool,
        search_with_pibar: bool,
        learn_with_pibar: bool,
    ) -> Self {
        Self {
            act_with_pibar,
            search_with_pibar,
            learn_with_pibar,
        }
    }

    /// Canonical name; combinations outside the five named variants are
    /// spelled out as `act+search` and so on.
    pub fn name(self) -> String {
        match self {
            Self::BASELINE => "baseline".into(),
            Self::ALL => "all".into(),
            _ => {
                let parts: Vec<&str> = [
                    (self.act_with_pibar, "act"),
                    (self.search_with_pibar, "search"),
                    (self.learn_with_pibar, "learn"),
                ]
                .iter()
                .filter(|(on, _)| *on)
                .map(|(_, name)| *name)
                .collect();
                parts.join("+")
            }
        }
    }

    /// The in-tree selection rule implied by the flags; `base` is used when
    /// search does not sample π̄.
    pub fn selection(self, base: SelectionRule) -> SelectionRule {
        if self.search_with_pibar {
            SelectionRule::PibarSampling
        } else {
            base
        }
    }
}

impl fmt::Display for VariantFlags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for VariantFlags {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => return Ok(Self::BASELINE),
            "all" => return Ok(Self::ALL),
            _ => {}
        }
        let mut flags = Self::BASELINE;
        for part in s.split('+') {
            let slot = match part {
                "act" => &mut flags.act_with_pibar,
                "search" => &mut flags.search_with_pibar,
                "learn" => &mut flags.learn_with_pibar,
                other => return Err(Error::Config(format!("unknown variant `{other}` in `{s}`"))),
            };
            if *slot {
                return Err(Error::Config(format!("variant `{part}` repeated in `{s}`")));
            }
            *slot = true;
        }
        Ok(flags)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentConfig {
    pub flags: VariantFlags,
    /// Search settings. `search.selection` is the rule used when the
    /// `SEARCH` flag is off; `search.rng_seed` is ignored, each search draws
    /// its seed from the agent's generator.
    pub search: SearchConfig,
    pub learning_rate: f64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            flags: VariantFlags::BASELINE,
            search: SearchConfig::default(),
            learning_rate: DEFAULT_LEARNING_RATE,
        }
    }
}

impl AgentConfig {
    fn search_config(&self, rng: &mut dyn RngCore) -> SearchConfig {
        SearchConfig {
            selection: self.flags.selection(self.search.selection),
            rng_seed: rng.next_u64(),
            ..self.search
        }
    }
}

/// One acting step: the search behind it, the action taken and the
/// distillation target.
#[derive(Debug, Clone, PartialEq)]
pub struct ActStep {
    pub action: usize,
    pub search: SearchResult,
    pub target: ActionDistribution,
}

/// Searches from `state` with the current prior and picks an action.
pub fn act<E: Environment>(
    env: &E,
    prior: &TabularSoftmaxPrior,
    state: &E::State,
    config: &AgentConfig,
    rng: &mut dyn RngCore,
) -> Result<ActStep> {
    let evaluator = |s: &E::State| -> Result<Evaluation> {
        Ok(Evaluation {
            prior: prior.prior(env.state_key(s)),
            value: env.value_estimate(s),
        })
    };
    let search = run_search(env, state.clone(), &config.search_config(rng), &evaluator)?;
    Ok(finish_act(search, config.flags, rng))
}

fn finish_act(search: SearchResult, flags: VariantFlags, rng: &mut dyn RngCore) -> ActStep {
    let action = if flags.act_with_pibar {
        search.pibar.sample(rng)
    } else {
        search.pihat.sample(rng)
    };
    let target = learn_target(&search, flags);
    ActStep {
        action,
        search,
        target,
    }
}

/// π̄ under `LEARN`, π̂ otherwise. π̄ always comes from the root Q-values
/// and counts, whichever rule produced them.
pub fn learn_target(search: &SearchResult, flags: VariantFlags) -> ActionDistribution {
    if flags.learn_with_pibar {
        search.pibar.clone()
    } else {
        search.pihat.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    /// Discounted return.
    pub ret: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepRecord {
    pub episode: usize,
    pub step: usize,
    pub state: StateKey,
    /// `KL(target, π_θ)` before the update.
    pub kl: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingTrace {
    pub episodes: Vec<EpisodeRecord>,
    pub steps: Vec<StepRecord>,
}

impl TrainingTrace {
    pub fn returns(&self) -> Vec<f64> {
        self.episodes.iter().map(|e| e.ret).collect()
    }
}

/// Episodes longer than this are reported as a logic error.
pub const MAX_EPISODE_STEPS: usize = 100_000;

/// Act → record target → learn, for `episodes` episodes. Deterministic for a
/// fixed seed.
pub fn run_episode_loop<E: Environment>(
    env: &E,
    config: &AgentConfig,
    episodes: usize,
    seed: u64,
) -> Result<(TrainingTrace, TabularSoftmaxPrior)> {
    config.search.validate()?;
    let mut prior = TabularSoftmaxPrior::new(env.num_actions(), config.learning_rate)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trace = TrainingTrace::default();
    for episode in 0..episodes {
        let mut state = env.initial_state(&mut rng);
        let mut ret = 0.0;
        let mut discount = 1.0;
        let mut step = 0;
        loop {
            if step >= MAX_EPISODE_STEPS {
                return Err(Error::Logic(format!(
                    "episode {episode} exceeded {MAX_EPISODE_STEPS} steps"
                )));
            }
            let key = env.state_key(&state);
            let chosen = act(env, &prior, &state, config, &mut rng)?;
            let loss = prior.learn_step(key, &chosen.target)?;
            trace.steps.push(StepRecord {
                episode,
                step,
                state: key,
                kl: loss,
            });
            let transition = env.step(&state, chosen.action)?;
            ret += discount * transition.reward;
            discount *= env.discount();
            step += 1;
            if transition.terminal {
                break;
            }
            state = transition.next_state;
        }
        trace.episodes.push(EpisodeRecord {
            episode,
            ret,
            steps: step,
        });
    }
    Ok((trace, prior))
}

/// One tabular softmax prior per action dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorizedPrior {
    dims: Vec<TabularSoftmaxPrior>,
}

impl FactorizedPrior {
    pub fn new(space: &FactorizedActionSpace, learning_rate: f64) -> Result<Self> {
        Ok(Self {
            dims: (0..space.dims())
                .map(|_| TabularSoftmaxPrior::new(space.bins(), learning_rate))
                .collect::<Result<_>>()?,
        })
    }

    pub fn priors(&self, key: StateKey) -> Vec<ActionDistribution> {
        self.dims.iter().map(|d| d.prior(key)).collect()
    }

    /// A gradient step in every dimension; returns the summed KL before it.
    pub fn learn_step(&mut self, key: StateKey, targets: &[ActionDistribution]) -> Result<f64> {
        if targets.len() != self.dims.len() {
            return Err(Error::DimensionMismatch {
                expected: self.dims.len(),
                got: targets.len(),
            });
        }
        self.dims
            .iter_mut()
            .zip(targets)
            .map(|(d, t)| d.learn_step(key, t))
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorizedActStep {
    pub joint: Vec<usize>,
    pub search: FactorizedSearchResult,
    pub targets: Vec<ActionDistribution>,
}

/// Factorized counterpart of [`act`]: every component is sampled from its own
/// π̄_i or π̂_i and every dimension gets its own target.
pub fn act_factorized<E: Environment>(
    env: &E,
    space: &FactorizedActionSpace,
    prior: &FactorizedPrior,
    state: &E::State,
    config: &AgentConfig,
    rng: &mut dyn RngCore,
) -> Result<FactorizedActStep> {
    let evaluator = |s: &E::State| -> Result<FactorizedEvaluation> {
        Ok(FactorizedEvaluation {
            priors: prior.priors(env.state_key(s)),
            value: env.value_estimate(s),
        })
    };
    let search = run_factorized_search(
        env,
        space,
        state.clone(),
        &config.search_config(rng),
        &evaluator,
        &mut |_| {},
    )?;
    let acting = if config.flags.act_with_pibar {
        &search.pibar
    } else {
        &search.pihat
    };
    let joint = acting.iter().map(|p| p.sample(rng)).collect();
    let targets = if config.flags.learn_with_pibar {
        search.pibar.clone()
    } else {
        search.pihat.clone()
    };
    Ok(FactorizedActStep {
        joint,
        search,
        targets,
    })
}

/// [`run_episode_loop`] over a factorized action space. The recorded KL is
/// the sum of the per-dimension KLs.
pub fn run_factorized_episode_loop<E: Environment>(
    env: &E,
    space: &FactorizedActionSpace,
    config: &AgentConfig,
    episodes: usize,
    seed: u64,
) -> Result<(TrainingTrace, FactorizedPrior)> {
    config.search.validate()?;
    let mut prior = FactorizedPrior::new(space, config.learning_rate)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trace = TrainingTrace::default();
    for episode in 0..episodes {
        let mut state = env.initial_state(&mut rng);
        let mut ret = 0.0;
        let mut discount = 1.0;
        let mut step = 0;
        loop {
            if step >= MAX_EPISODE_STEPS {
                return Err(Error::Logic(format!(
                    "episode {episode} exceeded {MAX_EPISODE_STEPS} steps"
                )));
            }
            let key = env.state_key(&state);
            let chosen = act_factorized(env, space, &prior, &state, config, &mut rng)?;
            let loss = prior.learn_step(key, &chosen.targets)?;
            trace.steps.push(StepRecord {
                episode,
                step,
                state: key,
                kl: loss,
            });
            let transition = env.step(&state, space.encode(&chosen.joint)?)?;
            ret += discount * transition.reward;
            discount *= env.discount();
            step += 1;
            if transition.terminal {
                break;
            }
            state = transition.next_state;
        }
        trace.episodes.push(EpisodeRecord {
            episode,
            ret,
            steps: step,
        });
    }
    Ok((trace, prior))
}

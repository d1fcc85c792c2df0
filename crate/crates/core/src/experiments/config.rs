use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agent::VariantFlags;
use crate::error::{Error, Result};
use crate::search::{SearchConfig, SelectionRule};
use crate::simplex::DivergenceKind;
use crate::solver::SolverConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Track,
    Bound,
    Props,
    Sweep,
    Solve,
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExperimentKind::Track => "track",
            ExperimentKind::Bound => "bound",
            ExperimentKind::Props => "props",
            ExperimentKind::Sweep => "sweep",
            ExperimentKind::Solve => "solve",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvKind {
    Bandit,
    Chain,
    FactorizedBandit,
}

/// Root Q-values of the tracking experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrackQ {
    /// The bandit's arm values, known for every arm.
    TrueValues,
    /// Search statistics of a tree over the bandit.
    Search,
}

/// Settings shared by all experiments, read from a flat `key = value` file.
/// Every key is optional and unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// When set, the file may only drive this command.
    pub experiment: Option<ExperimentKind>,
    pub seeds: Vec<u64>,
    /// Simulations per search (`track`).
    pub n_sim: usize,
    /// Simulation budgets (`sweep`).
    pub n_sims: Vec<usize>,
    pub num_actions: usize,
    /// Action-set sizes (`bound`).
    pub action_counts: Vec<usize>,
    /// Rounds per bound check.
    pub horizon: usize,
    /// Random instances per proposition (`props`).
    pub instances: usize,
    pub dims: usize,
    pub bins: usize,
    pub c: f64,
    pub divergence: DivergenceKind,
    pub selection: SelectionRule,
    pub normalize_q: bool,
    pub track_q: TrackQ,
    pub variants: Vec<String>,
    pub env: EnvKind,
    pub chain_length: usize,
    pub discount: f64,
    pub random_start: bool,
    pub episodes: usize,
    pub learning_rate: f64,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            seeds: (0..5).collect(),
            n_sim: 1000,
            n_sims: vec![2, 5, 50],
            num_actions: 10,
            action_counts: vec![1, 2, 4, 10],
            horizon: 10_000,
            instances: 10_000,
            dims: 2,
            bins: 5,
            c: crate::solver::DEFAULT_EXPLORATION,
            divergence: DivergenceKind::ReverseKl,
            selection: SelectionRule::AlphaZeroPuct,
            normalize_q: true,
            track_q: TrackQ::TrueValues,
            variants: VariantFlags::NAMED.iter().map(|v| v.name()).collect(),
            env: EnvKind::Chain,
            chain_length: 10,
            discount: 0.95,
            random_start: true,
            episodes: 500,
            learning_rate: crate::agent::DEFAULT_LEARNING_RATE,
            out: None,
            workers: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.solver().validate()?;
        if self.n_sim == 0 {
            return Err(Error::Config("n_sim must be at least 1".into()));
        }
        if self.n_sims.contains(&0) {
            return Err(Error::Config("n_sims entries must be at least 1".into()));
        }
        if self.num_actions == 0 || self.action_counts.contains(&0) {
            return Err(Error::Config("action counts must be at least 1".into()));
        }
        if self.dims == 0 || self.bins == 0 {
            return Err(Error::Config("dims and bins must be at least 1".into()));
        }
        if !(self.discount > 0.0 && self.discount <= 1.0) {
            return Err(Error::Config(format!(
                "discount must be in (0, 1], got {}",
                self.discount
            )));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        self.variant_flags()?;
        Ok(())
    }

    /// Rejects a config file written for a different command.
    pub fn check_experiment(&self, kind: ExperimentKind) -> Result<()> {
        match self.experiment {
            Some(expected) if expected != kind => Err(Error::Config(format!(
                "config is for `{expected}`, not `{kind}`"
            ))),
            _ => Ok(()),
        }
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig {
            c: self.c,
            kind: self.divergence,
            ..SolverConfig::default()
        }
    }

    pub fn search(&self, n_sim: usize) -> SearchConfig {
        SearchConfig {
            n_sim,
            selection: self.selection,
            solver: self.solver(),
            rng_seed: 0,
            normalize_q: self.normalize_q,
        }
    }

    pub fn variant_flags(&self) -> Result<Vec<VariantFlags>> {
        self.variants.iter().map(|v| v.parse()).collect()
    }
}

//! Seeded random search over discovery hyperparameters, scored by the
//! event-log similarity of simulated logs against a validation fold.

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eventlog::{temporal_split, EventLog, Timestamp};
use crate::metrics::{els, BptdWeights};
use crate::model::{
    compute_branching_probabilities, discover_model, enforce_conformance, BranchingMode,
    ConformanceMode,
};
use crate::params::{
    assemble_bps_model, discover_resource_pools, extract_activity_durations, extract_interarrival,
    BpsModel, DEFAULT_POOL_THRESHOLD,
};
use crate::rng::{derive_seed, domain, rng_from_seed};
use crate::sim::{simulate, SimConfig};

pub const DEFAULT_TRIALS: usize = 50;
pub const DEFAULT_RUNS: usize = 5;
pub const DEFAULT_INNER_SPLIT: f64 = 0.8;

const DIMENSIONS: [&str; 5] = [
    "branching",
    "conformance",
    "epsilon",
    "eta",
    "pool_threshold",
];

/// Hyperparameters of one discovery run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub eta: f64,
    pub epsilon: f64,
    pub branching: BranchingMode,
    pub conformance: ConformanceMode,
    pub pool_threshold: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            eta: 0.2,
            epsilon: 0.3,
            branching: BranchingMode::Replay,
            conformance: ConformanceMode::Replace,
            pool_threshold: DEFAULT_POOL_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Dimension {
    Continuous { lo: f64, hi: f64 },
    Categorical { values: Vec<String> },
}

/// Named dimensions to sample. Dimensions left out keep their
/// [`PipelineConfig`] default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub dimensions: BTreeMap<String, Dimension>,
}

impl Default for SearchSpace {
    fn default() -> Self {
        let continuous = |lo, hi| Dimension::Continuous { lo, hi };
        let categorical = |values: &[&str]| Dimension::Categorical {
            values: values.iter().map(|v| v.to_string()).collect(),
        };
        SearchSpace {
            dimensions: BTreeMap::from([
                ("eta".into(), continuous(0.0, 1.0)),
                ("epsilon".into(), continuous(0.0, 1.0)),
                ("branching".into(), categorical(&["equiprobable", "replay"])),
                ("conformance".into(), categorical(&["remove", "replace"])),
                ("pool_threshold".into(), continuous(0.5, 0.95)),
            ]),
        }
    }
}

impl SearchSpace {
    pub fn validate(&self) -> Result<()> {
        if self.dimensions.is_empty() {
            return Err(Error::Argument("search space has no dimensions".into()));
        }
        for (name, dim) in &self.dimensions {
            match (name.as_str(), dim) {
                (n, Dimension::Continuous { lo, hi })
                    if ["eta", "epsilon", "pool_threshold"].contains(&n) =>
                {
                    if !(lo.is_finite() && hi.is_finite() && lo <= hi && *lo >= 0.0 && *hi <= 1.0) {
                        return Err(Error::Argument(format!(
                            "dimension `{name}` needs 0 <= lo <= hi <= 1, got [{lo}, {hi}]"
                        )));
                    }
                }
                ("branching", Dimension::Categorical { values }) => {
                    check_values::<BranchingMode>(name, values)?
                }
                ("conformance", Dimension::Categorical { values }) => {
                    check_values::<ConformanceMode>(name, values)?
                }
                (n, _) if DIMENSIONS.contains(&n) => {
                    return Err(Error::Argument(format!(
                        "dimension `{name}` has the wrong type"
                    )))
                }
                _ => {
                    return Err(Error::Argument(format!(
                        "unknown dimension `{name}`; expected one of {}",
                        DIMENSIONS.join(", ")
                    )))
                }
            }
        }
        Ok(())
    }

    /// Draws one configuration, visiting dimensions in name order.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> PipelineConfig {
        let mut config = PipelineConfig::default();
        for (name, dim) in &self.dimensions {
            let value = match dim {
                Dimension::Continuous { lo, hi } => {
                    let u: f64 = rng.random();
                    Value::Real(lo + (hi - lo) * u)
                }
                Dimension::Categorical { values } => {
                    Value::Text(values[rng.random_range(0..values.len())].clone())
                }
            };
            match (name.as_str(), value) {
                ("eta", Value::Real(x)) => config.eta = x,
                ("epsilon", Value::Real(x)) => config.epsilon = x,
                ("pool_threshold", Value::Real(x)) => config.pool_threshold = x,
                ("branching", Value::Text(v)) => config.branching = v.parse().expect("validated"),
                ("conformance", Value::Text(v)) => {
                    config.conformance = v.parse().expect("validated")
                }
                _ => unreachable!("validated search space"),
            }
        }
        config
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let space: SearchSpace =
            serde_json::from_str(text).map_err(|e| Error::json("search space", e))?;
        space.validate()?;
        Ok(space)
    }
}

enum Value {
    Real(f64),
    Text(String),
}

fn check_values<T: std::str::FromStr<Err = Error>>(name: &str, values: &[String]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::Argument(format!("dimension `{name}` has no values")));
    }
    values.iter().try_for_each(|v| v.parse::<T>().map(|_| ()))
}

/// Discovers a process model from `log`, makes the log conform to it, and
/// mines the simulation parameters.
pub fn run_pipeline(log: &EventLog, config: &PipelineConfig) -> Result<BpsModel> {
    let model = discover_model(log, config.eta, config.epsilon)?;
    let conformant = enforce_conformance(&model, log, config.conformance)?;
    let branching = compute_branching_probabilities(&model, &conformant, config.branching);
    let interarrival = extract_interarrival(log)?;
    let durations = extract_activity_durations(log)?;
    let pools = discover_resource_pools(log, config.pool_threshold)?;
    assemble_bps_model(
        model,
        branching,
        interarrival,
        durations,
        pools.pools,
        pools.activity_pool,
        log.max_trace_len(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeConfig {
    pub trials: usize,
    pub runs: usize,
    pub seed: u64,
    pub inner_split: f64,
    pub weights: BptdWeights,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        OptimizeConfig {
            trials: DEFAULT_TRIALS,
            runs: DEFAULT_RUNS,
            seed: 0,
            inner_split: DEFAULT_INNER_SPLIT,
            weights: BptdWeights::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialStatus {
    Ok,
    Failed,
}

/// Outcome of one sampled configuration. The history file holds these
/// without the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: usize,
    pub config: PipelineConfig,
    pub status: TrialStatus,
    pub per_run_els: Vec<f64>,
    pub mean_els: Option<f64>,
    pub error: Option<String>,
    #[serde(skip)]
    pub model: Option<BpsModel>,
}

#[derive(Debug, Clone)]
pub struct Optimization {
    pub best: BpsModel,
    pub best_trial: usize,
    pub history: Vec<TrialResult>,
}

impl Optimization {
    pub fn best_result(&self) -> &TrialResult {
        &self.history[self.best_trial]
    }
}

pub fn write_history(history: &[TrialResult], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(history).map_err(|e| Error::json("history", e))?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn first_arrival(log: &EventLog) -> Timestamp {
    log.traces()
        .iter()
        .filter_map(|t| t.first_start())
        .min()
        .unwrap_or(Timestamp::from_millis(0))
}

fn score_trial(
    fit: &EventLog,
    validation: &EventLog,
    config: &PipelineConfig,
    runs: usize,
    trial_seed: u64,
    weights: &BptdWeights,
) -> Result<(BpsModel, Vec<f64>)> {
    let model = run_pipeline(fit, config)?;
    let start = first_arrival(validation);
    let mut scores = Vec::with_capacity(runs);
    for run in 0..runs {
        let sim = SimConfig::new(
            validation.len(),
            derive_seed(trial_seed, domain::RUN, run as u64),
            start,
        );
        let generated = simulate(&model, &sim)?.log;
        scores.push(els(&generated, validation, weights)?);
    }
    Ok((model, scores))
}

/// Random search: the earliest `inner_split` share of `train` builds
/// candidate models, the rest validates them. Returns the model with the
/// highest mean ELS over `runs` simulations (ties go to the earlier trial)
/// and the full trial history.
pub fn optimize_dds(
    train: &EventLog,
    space: &SearchSpace,
    config: &OptimizeConfig,
) -> Result<Optimization> {
    if config.trials == 0 || config.runs == 0 {
        return Err(Error::Argument("trials and runs must be at least 1".into()));
    }
    space.validate()?;
    let (fit, validation) = temporal_split(train, config.inner_split)?;
    let mut sampler = rng_from_seed(derive_seed(config.seed, domain::CONFIG, 0));
    let configs: Vec<PipelineConfig> = (0..config.trials)
        .map(|_| space.sample(&mut sampler))
        .collect();

    let history: Vec<TrialResult> = configs
        .into_par_iter()
        .enumerate()
        .map(|(trial, pipeline)| {
            let seed = derive_seed(config.seed, domain::TRIAL, trial as u64);
            match score_trial(
                &fit,
                &validation,
                &pipeline,
                config.runs,
                seed,
                &config.weights,
            ) {
                Ok((model, scores)) => {
                    let mean = scores.iter().sum::<f64>() / scores.len() as f64;
                    log::info!("trial {trial}: mean ELS {mean:.4}");
                    TrialResult {
                        trial,
                        config: pipeline,
                        status: TrialStatus::Ok,
                        per_run_els: scores,
                        mean_els: Some(mean),
                        error: None,
                        model: Some(model),
                    }
                }
                Err(e) => {
                    log::warn!("trial {trial} failed: {e}");
                    TrialResult {
                        trial,
                        config: pipeline,
                        status: TrialStatus::Failed,
                        per_run_els: Vec::new(),
                        mean_els: None,
                        error: Some(e.to_string()),
                        model: None,
                    }
                }
            }
        })
        .collect();

    let mut best: Option<(usize, f64)> = None;
    for result in &history {
        if let Some(mean) = result.mean_els {
            if best.map_or(true, |(_, b)| mean > b) {
                best = Some((result.trial, mean));
            }
        }
    }
    match best {
        Some((trial, _)) => Ok(Optimization {
            best: history[trial]
                .model
                .clone()
                .expect("successful trials keep their model"),
            best_trial: trial,
            history,
        }),
        None => Err(Error::Optimization {
            diagnostics: history
                .iter()
                .map(|r| {
                    format!(
                        "trial {}: {}",
                        r.trial,
                        r.error.as_deref().unwrap_or("unknown")
                    )
                })
                .collect(),
        }),
    }
}

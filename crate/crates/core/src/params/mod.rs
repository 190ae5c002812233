//! Simulation parameters mined from a log and their assembly into a
//! complete simulation model.

mod distribution;
mod pools;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use distribution::{
    cdf_rmse, fit_distribution, moment_candidates, DistributionSpec, Family, MIN_FIT_SAMPLES,
};
pub use pools::{
    discover_resource_pools, PoolAssignment, ResourcePool, DEFAULT_POOL_THRESHOLD, SYSTEM_POOL,
};

use crate::error::{Error, Result};
use crate::eventlog::EventLog;
use crate::model::{BranchingProbabilities, ProcessModel};

/// Multiplier on the longest observed trace that bounds how many tasks a
/// simulated case may execute.
pub const LOOP_CAP_FACTOR: usize = 5;

/// Gaps in seconds between successive case arrivals, in arrival order.
pub fn interarrival_samples(log: &EventLog) -> Vec<f64> {
    let mut arrivals: Vec<_> = log
        .traces()
        .iter()
        .filter_map(|t| t.first_start())
        .collect();
    arrivals.sort();
    arrivals.windows(2).map(|w| w[1].secs_since(w[0])).collect()
}

/// Inter-arrival distribution fitted to the gaps between case arrivals.
pub fn extract_interarrival(log: &EventLog) -> Result<DistributionSpec> {
    if log.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "inter-arrival times need at least 2 traces, got {}",
            log.len()
        )));
    }
    fit_distribution(&interarrival_samples(log))
}

/// Processing-time distribution of each activity.
pub fn extract_activity_durations(log: &EventLog) -> Result<BTreeMap<String, DistributionSpec>> {
    let mut samples: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for event in log.events() {
        samples
            .entry(&event.activity)
            .or_default()
            .push(event.duration_secs());
    }
    samples
        .into_iter()
        .map(|(a, s)| Ok((a.to_string(), fit_distribution(&s)?)))
        .collect()
}

/// A process model annotated with everything the simulator needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BpsModel {
    pub process_model: ProcessModel,
    pub branching: BranchingProbabilities,
    pub interarrival: DistributionSpec,
    pub activity_durations: BTreeMap<String, DistributionSpec>,
    pub pools: Vec<ResourcePool>,
    pub activity_pool: BTreeMap<String, String>,
    /// Longest trace of the source log; cases exceeding
    /// `LOOP_CAP_FACTOR` times this many tasks are aborted.
    pub max_trace_length: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl BpsModel {
    pub fn loop_cap(&self) -> usize {
        LOOP_CAP_FACTOR * self.max_trace_length.max(1)
    }

    pub fn pool(&self, id: &str) -> Option<&ResourcePool> {
        self.pools.iter().find(|p| p.id == id)
    }

    /// Checks the cross-references between components.
    pub fn validate(&self) -> Result<()> {
        self.branching.validate(&self.process_model)?;
        self.interarrival
            .validate()
            .map_err(|e| Error::Assembly(format!("inter-arrival distribution: {e}")))?;
        let mut seen = BTreeSet::new();
        for pool in &self.pools {
            if pool.resources.is_empty() {
                return Err(Error::Assembly(format!(
                    "pool `{}` has no resources",
                    pool.id
                )));
            }
            if !seen.insert(pool.id.as_str()) {
                return Err(Error::Assembly(format!("duplicate pool id `{}`", pool.id)));
            }
        }
        let mut missing = Vec::new();
        for task in self.process_model.task_labels() {
            match self.activity_durations.get(task) {
                Some(d) => d
                    .validate()
                    .map_err(|e| Error::Assembly(format!("duration of `{task}`: {e}")))?,
                None => missing.push(format!("`{task}` has no duration")),
            }
            match self.activity_pool.get(task) {
                Some(p) if self.pool(p).is_none() => {
                    missing.push(format!("`{task}` refers to unknown pool `{p}`"))
                }
                Some(_) => {}
                None => missing.push(format!("`{task}` has no pool")),
            }
        }
        if missing.is_empty() {
            Ok(())
        } else {
            Err(Error::Assembly(missing.join(", ")))
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::json("simulation model", e))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: BpsModel =
            serde_json::from_str(text).map_err(|e| Error::json("simulation model", e))?;
        model.validate()?;
        Ok(model)
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }
}

/// Combines mined components into a [`BpsModel`]. Tasks without a duration
/// get `fixed(0)` with a warning; tasks without a pool fall back to the
/// `SYSTEM` pool when there is one.
pub fn assemble_bps_model(
    process_model: ProcessModel,
    branching: BranchingProbabilities,
    interarrival: DistributionSpec,
    mut activity_durations: BTreeMap<String, DistributionSpec>,
    pools: Vec<ResourcePool>,
    mut activity_pool: BTreeMap<String, String>,
    max_trace_length: usize,
) -> Result<BpsModel> {
    let mut warnings = Vec::new();
    let has_system = pools.iter().any(|p| p.id == SYSTEM_POOL);
    let mut unassigned = Vec::new();
    for task in process_model.task_labels() {
        if !activity_durations.contains_key(task) {
            let note = format!("task `{task}` has no observed durations; using fixed(0)");
            log::warn!("{note}");
            warnings.push(note);
            activity_durations.insert(task.to_string(), DistributionSpec::fixed(0.0));
        }
        if !activity_pool.contains_key(task) {
            if has_system {
                activity_pool.insert(task.to_string(), SYSTEM_POOL.to_string());
            } else {
                unassigned.push(task.to_string());
            }
        }
    }
    if !unassigned.is_empty() {
        return Err(Error::Assembly(format!(
            "tasks without a resource pool: {}",
            unassigned.join(", ")
        )));
    }
    let model = BpsModel {
        process_model,
        branching,
        interarrival,
        activity_durations,
        pools,
        activity_pool,
        max_trace_length,
        warnings,
    };
    model.validate()?;
    Ok(model)
}

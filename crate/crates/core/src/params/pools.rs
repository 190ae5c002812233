//! Resource pools from correlation clustering of resource activity profiles.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eventlog::EventLog;

/// Pool that absorbs events recorded without a resource.
pub const SYSTEM_POOL: &str = "SYSTEM";

pub const DEFAULT_POOL_THRESHOLD: f64 = 0.7;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourcePool {
    pub id: String,
    pub resources: BTreeSet<String>,
}

impl ResourcePool {
    pub fn size(&self) -> usize {
        self.resources.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolAssignment {
    pub pools: Vec<ResourcePool>,
    /// Activity label to pool id.
    pub activity_pool: BTreeMap<String, String>,
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    match (sxx > 0.0, syy > 0.0) {
        (true, true) => sxy / (sxx * syy).sqrt(),
        (false, false) => 1.0,
        _ => 0.0,
    }
}

/// Groups resources whose activity profiles correlate at `threshold` or above
/// (average linkage) and maps every activity to the pool that executed it most.
pub fn discover_resource_pools(log: &EventLog, threshold: f64) -> Result<PoolAssignment> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::Argument(format!(
            "pool threshold must lie in [0, 1], got {threshold}"
        )));
    }
    let activities: Vec<&str> = log.activity_alphabet().iter().map(String::as_str).collect();
    let column: BTreeMap<&str, usize> = activities
        .iter()
        .enumerate()
        .map(|(i, a)| (*a, i))
        .collect();
    let resources: Vec<&str> = log.resource_alphabet().iter().map(String::as_str).collect();
    let row: BTreeMap<&str, usize> = resources.iter().enumerate().map(|(i, r)| (*r, i)).collect();

    let mut profile = vec![vec![0.0; activities.len()]; resources.len()];
    let mut has_unassigned = false;
    for event in log.events() {
        match &event.resource {
            Some(r) => profile[row[r.as_str()]][column[event.activity.as_str()]] += 1.0,
            None => has_unassigned = true,
        }
    }

    let corr: Vec<Vec<f64>> = profile
        .iter()
        .map(|a| profile.iter().map(|b| pearson(a, b)).collect())
        .collect();
    let mut clusters: Vec<Vec<usize>> = (0..resources.len()).map(|i| vec![i]).collect();
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..clusters.len() {
            for j in i + 1..clusters.len() {
                let total: f64 = clusters[i]
                    .iter()
                    .flat_map(|&a| clusters[j].iter().map(move |&b| (a, b)))
                    .map(|(a, b)| corr[a][b])
                    .sum();
                let avg = total / (clusters[i].len() * clusters[j].len()) as f64;
                if avg >= threshold && best.map_or(true, |(b, _, _)| avg > b) {
                    best = Some((avg, i, j));
                }
            }
        }
        match best {
            Some((_, i, j)) => {
                let merged = clusters.remove(j);
                clusters[i].extend(merged);
            }
            None => break,
        }
    }

    let mut groups: Vec<BTreeSet<String>> = clusters
        .into_iter()
        .map(|c| c.into_iter().map(|r| resources[r].to_string()).collect())
        .collect();
    groups.sort_by(|a, b| a.first().cmp(&b.first()));
    let mut pools: Vec<ResourcePool> = groups
        .into_iter()
        .enumerate()
        .map(|(i, resources)| ResourcePool {
            id: format!("pool_{}", i + 1),
            resources,
        })
        .collect();
    if has_unassigned {
        pools.push(ResourcePool {
            id: SYSTEM_POOL.to_string(),
            resources: BTreeSet::from([SYSTEM_POOL.to_string()]),
        });
    }

    let pool_of: BTreeMap<&str, usize> = pools
        .iter()
        .enumerate()
        .flat_map(|(p, pool)| pool.resources.iter().map(move |r| (r.as_str(), p)))
        .collect();
    let system = pools.iter().position(|p| p.id == SYSTEM_POOL);
    let mut counts: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for event in log.events() {
        let p = match &event.resource {
            Some(r) => pool_of[r.as_str()],
            None => system.expect("system pool exists when resources are missing"),
        };
        counts
            .entry(event.activity.as_str())
            .or_insert_with(|| vec![0; pools.len()])[p] += 1;
    }
    let activity_pool = counts
        .into_iter()
        .map(|(activity, per_pool)| {
            // Earliest pool wins ties.
            let best = per_pool
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
                .map(|(p, _)| p)
                .unwrap_or(0);
            (activity.to_string(), pools[best].id.clone())
        })
        .collect();
    Ok(PoolAssignment {
        pools,
        activity_pool,
    })
}

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{replay_sequence, EdgeId, NodeId, ProcessModel};
use crate::error::{Error, Result};
use crate::eventlog::EventLog;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchingMode {
    /// Every branch of a split is equally likely.
    Equiprobable,
    /// Branch frequencies observed when replaying the log.
    Replay,
}

impl fmt::Display for BranchingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BranchingMode::Equiprobable => "equiprobable",
            BranchingMode::Replay => "replay",
        })
    }
}

impl FromStr for BranchingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "equiprobable" => Ok(BranchingMode::Equiprobable),
            "replay" => Ok(BranchingMode::Replay),
            _ => Err(Error::Argument(format!("unknown branching mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub edge: EdgeId,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitBranches {
    pub node: NodeId,
    pub branches: Vec<Branch>,
}

/// Probabilities of the outgoing edges of every exclusive split.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BranchingProbabilities {
    pub splits: Vec<SplitBranches>,
    /// Splits never reached during replay; they fall back to equal weights.
    #[serde(default)]
    pub fallback: Vec<NodeId>,
}

impl BranchingProbabilities {
    pub fn get(&self, split: NodeId) -> Option<&SplitBranches> {
        self.splits.iter().find(|s| s.node == split)
    }

    pub fn probability(&self, split: NodeId, edge: EdgeId) -> Option<f64> {
        self.get(split)?
            .branches
            .iter()
            .find(|b| b.edge == edge)
            .map(|b| b.probability)
    }

    /// Checks that every split of `model` is covered by a distribution over
    /// exactly its outgoing edges.
    pub fn validate(&self, model: &ProcessModel) -> Result<()> {
        for split in model.xor_splits() {
            let entry = self.get(split).ok_or_else(|| {
                Error::InvalidModel(format!("no branching probabilities for split {split}"))
            })?;
            let mut edges: Vec<EdgeId> = entry.branches.iter().map(|b| b.edge).collect();
            edges.sort();
            let mut expected = model.outgoing(split).to_vec();
            expected.sort();
            if edges != expected {
                return Err(Error::InvalidModel(format!(
                    "branching probabilities of split {split} do not match its edges"
                )));
            }
            let total: f64 = entry.branches.iter().map(|b| b.probability).sum();
            if entry
                .branches
                .iter()
                .any(|b| b.probability.is_nan() || b.probability < 0.0)
                || (total - 1.0).abs() > 1e-9
            {
                return Err(Error::InvalidModel(format!(
                    "branching probabilities of split {split} do not form a distribution"
                )));
            }
        }
        Ok(())
    }
}

fn equal_split(model: &ProcessModel, split: NodeId) -> SplitBranches {
    let outs = model.outgoing(split);
    SplitBranches {
        node: split,
        branches: outs
            .iter()
            .map(|&edge| Branch {
                edge,
                probability: 1.0 / outs.len() as f64,
            })
            .collect(),
    }
}

/// Branch probabilities per exclusive split. In replay mode a branch's
/// probability is its traversal count over the split's traversal count;
/// traces that do not replay are ignored.
pub fn compute_branching_probabilities(
    model: &ProcessModel,
    log: &EventLog,
    mode: BranchingMode,
) -> BranchingProbabilities {
    let mut result = BranchingProbabilities::default();
    if mode == BranchingMode::Equiprobable {
        result.splits = model.xor_splits().map(|s| equal_split(model, s)).collect();
        return result;
    }

    let mut variants: HashMap<Vec<&str>, usize> = HashMap::new();
    for trace in log.traces() {
        *variants.entry(trace.activities().collect()).or_insert(0) += 1;
    }
    let mut counts = vec![0usize; model.edges().len()];
    let mut skipped = 0;
    for (seq, times) in &variants {
        let replay = replay_sequence(model, seq);
        if !replay.fits {
            skipped += times;
            continue;
        }
        for e in replay.traversed_edges {
            counts[e.0] += times;
        }
    }
    if skipped > 0 {
        log::warn!("{skipped} traces do not replay and were ignored for branching");
    }

    for split in model.xor_splits() {
        let outs = model.outgoing(split);
        let total: usize = outs.iter().map(|e| counts[e.0]).sum();
        if total == 0 {
            result.fallback.push(split);
            result.splits.push(equal_split(model, split));
            continue;
        }
        result.splits.push(SplitBranches {
            node: split,
            branches: outs
                .iter()
                .map(|&edge| Branch {
                    edge,
                    probability: counts[edge.0] as f64 / total as f64,
                })
                .collect(),
        });
    }
    result
}

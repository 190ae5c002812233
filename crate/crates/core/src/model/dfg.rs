use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::eventlog::EventLog;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DfgNode {
    Start,
    End,
    Activity(String),
}

/// Directly-follows counts, including arcs from an artificial start to each
/// first activity and from each last activity to an artificial end.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DirectlyFollowsGraph {
    pub arc_counts: BTreeMap<(DfgNode, DfgNode), usize>,
}

impl DirectlyFollowsGraph {
    pub fn from_log(log: &EventLog) -> Self {
        let mut dfg = DirectlyFollowsGraph::default();
        for trace in log.traces().iter().filter(|t| !t.is_empty()) {
            let mut prev = DfgNode::Start;
            for activity in trace.activities() {
                let node = DfgNode::Activity(activity.to_string());
                *dfg.arc_counts.entry((prev, node.clone())).or_insert(0) += 1;
                prev = node;
            }
            *dfg.arc_counts.entry((prev, DfgNode::End)).or_insert(0) += 1;
        }
        dfg
    }

    pub fn count(&self, from: &DfgNode, to: &DfgNode) -> usize {
        self.arc_counts
            .get(&(from.clone(), to.clone()))
            .copied()
            .unwrap_or(0)
    }
}

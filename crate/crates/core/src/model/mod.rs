//! Process models: a BPMN subset of tasks and exclusive/parallel gateways.
//!
//! A [`ProcessModel`] is a graph of nodes connected by sequence-flow edges.
//! Execution follows the usual token game: the start event emits one token,
//! tasks and gateways consume tokens from their incoming edges and emit
//! tokens on their outgoing edges, and the case completes when the token
//! reaches the end event.
//!
//! JSON layout:
//!
//! ```json
//! {
//!   "nodes": [{"id": 0, "kind": "start"}, {"id": 2, "kind": "task", "label": "A"}],
//!   "edges": [{"id": 0, "source": 0, "target": 2}]
//! }
//! ```
//!
//! Node and edge ids equal their position in the respective array. `kind` is
//! one of `start`, `end`, `task`, `xor_split`, `xor_join`, `and_split`,
//! `and_join`; only tasks carry a `label`.

mod branching;
mod conformance;
mod dfg;
mod discovery;
mod replay;

use std::collections::VecDeque;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use self::branching::{
    compute_branching_probabilities, Branch, BranchingMode, BranchingProbabilities, SplitBranches,
};
pub use self::conformance::{enforce_conformance, ConformanceMode};
pub use self::dfg::{DfgNode, DirectlyFollowsGraph};
pub use self::discovery::discover_model;
pub use self::replay::{replay_sequence, replay_trace, ReplayResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EdgeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Start,
    End,
    Task,
    XorSplit,
    XorJoin,
    AndSplit,
    AndJoin,
}

impl NodeKind {
    pub fn is_gateway(self) -> bool {
        matches!(
            self,
            NodeKind::XorSplit | NodeKind::XorJoin | NodeKind::AndSplit | NodeKind::AndJoin
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub id: EdgeId,
    pub source: NodeId,
    pub target: NodeId,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawModel {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
}

/// A validated process model. Construct with [`ProcessModelBuilder`] or
/// [`ProcessModel::new`]; all structural invariants hold for every instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "RawModel", into = "RawModel")]
pub struct ProcessModel {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    incoming: Vec<Vec<EdgeId>>,
    outgoing: Vec<Vec<EdgeId>>,
    start: NodeId,
    end: NodeId,
}

impl PartialEq for ProcessModel {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.edges == other.edges
    }
}

impl TryFrom<RawModel> for ProcessModel {
    type Error = Error;

    fn try_from(raw: RawModel) -> Result<Self> {
        ProcessModel::new(raw.nodes, raw.edges)
    }
}

impl From<ProcessModel> for RawModel {
    fn from(model: ProcessModel) -> Self {
        RawModel {
            nodes: model.nodes,
            edges: model.edges,
        }
    }
}

impl ProcessModel {
    pub fn new(nodes: Vec<Node>, edges: Vec<Edge>) -> Result<Self> {
        let invalid = |msg: String| Err(Error::InvalidModel(msg));
        for (i, node) in nodes.iter().enumerate() {
            if node.id.0 != i {
                return invalid(format!("node at position {i} has id {}", node.id.0));
            }
            match (node.kind, &node.label) {
                (NodeKind::Task, Some(label)) if !label.is_empty() => {}
                (NodeKind::Task, _) => return invalid(format!("task {} has no label", node.id)),
                (_, Some(_)) => return invalid(format!("non-task node {} has a label", node.id)),
                _ => {}
            }
        }
        let mut incoming = vec![Vec::new(); nodes.len()];
        let mut outgoing = vec![Vec::new(); nodes.len()];
        for (i, edge) in edges.iter().enumerate() {
            if edge.id.0 != i {
                return invalid(format!("edge at position {i} has id {}", edge.id.0));
            }
            if edge.source.0 >= nodes.len() || edge.target.0 >= nodes.len() {
                return invalid(format!("edge {} references an unknown node", edge.id));
            }
            if edge.source == edge.target {
                return invalid(format!("edge {} is a self-loop", edge.id));
            }
            outgoing[edge.source.0].push(edge.id);
            incoming[edge.target.0].push(edge.id);
        }

        let of_kind = |kind| nodes.iter().filter(move |n| n.kind == kind).map(|n| n.id);
        let starts: Vec<_> = of_kind(NodeKind::Start).collect();
        let ends: Vec<_> = of_kind(NodeKind::End).collect();
        if starts.len() != 1 || ends.len() != 1 {
            return invalid(format!(
                "expected one start and one end event, found {} and {}",
                starts.len(),
                ends.len()
            ));
        }

        for node in &nodes {
            let (ins, outs) = (incoming[node.id.0].len(), outgoing[node.id.0].len());
            let ok = match node.kind {
                NodeKind::Start => ins == 0 && outs == 1,
                NodeKind::End => ins == 1 && outs == 0,
                NodeKind::Task => ins == 1 && outs == 1,
                NodeKind::XorSplit | NodeKind::AndSplit => ins == 1 && outs >= 2,
                NodeKind::XorJoin | NodeKind::AndJoin => ins >= 2 && outs == 1,
            };
            if !ok {
                return invalid(format!(
                    "{:?} node {} has {ins} incoming and {outs} outgoing edges",
                    node.kind, node.id
                ));
            }
        }

        let model = ProcessModel {
            nodes,
            edges,
            incoming,
            outgoing,
            start: starts[0],
            end: ends[0],
        };
        let forward = model.reachable(model.start, true);
        let backward = model.reachable(model.end, false);
        if let Some(node) = model
            .nodes
            .iter()
            .find(|n| !forward[n.id.0] || !backward[n.id.0])
        {
            return invalid(format!("node {} is not on a start-to-end path", node.id));
        }
        Ok(model)
    }

    fn reachable(&self, from: NodeId, forward: bool) -> Vec<bool> {
        let mut seen = vec![false; self.nodes.len()];
        let mut queue = VecDeque::from([from]);
        seen[from.0] = true;
        while let Some(node) = queue.pop_front() {
            let edges = if forward {
                &self.outgoing[node.0]
            } else {
                &self.incoming[node.0]
            };
            for &e in edges {
                let edge = self.edges[e.0];
                let next = if forward { edge.target } else { edge.source };
                if !seen[next.0] {
                    seen[next.0] = true;
                    queue.push_back(next);
                }
            }
        }
        seen
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    pub fn edge(&self, id: EdgeId) -> Edge {
        self.edges[id.0]
    }

    pub fn start(&self) -> NodeId {
        self.start
    }

    pub fn end(&self) -> NodeId {
        self.end
    }

    pub fn incoming(&self, node: NodeId) -> &[EdgeId] {
        &self.incoming[node.0]
    }

    pub fn outgoing(&self, node: NodeId) -> &[EdgeId] {
        &self.outgoing[node.0]
    }

    pub fn tasks(&self) -> impl Iterator<Item = &Node> + '_ {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Task)
    }

    pub fn task_labels(&self) -> impl Iterator<Item = &str> + '_ {
        self.tasks().filter_map(|n| n.label.as_deref())
    }

    pub fn xor_splits(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes
            .iter()
            .filter(|n| n.kind == NodeKind::XorSplit)
            .map(|n| n.id)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::json("process model", e))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::json("process model", e))
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }
}

/// Incremental construction of a [`ProcessModel`]. Start and end events are
/// created up front.
#[derive(Debug, Clone)]
pub struct ProcessModelBuilder {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
}

impl Default for ProcessModelBuilder {
    fn default() -> Self {
        Self::new()
    }
}

impl ProcessModelBuilder {
    pub fn new() -> Self {
        let mut builder = ProcessModelBuilder {
            nodes: Vec::new(),
            edges: Vec::new(),
        };
        builder.push(NodeKind::Start, None);
        builder.push(NodeKind::End, None);
        builder
    }

    fn push(&mut self, kind: NodeKind, label: Option<String>) -> NodeId {
        let id = NodeId(self.nodes.len());
        self.nodes.push(Node { id, kind, label });
        id
    }

    pub fn start(&self) -> NodeId {
        NodeId(0)
    }

    pub fn end(&self) -> NodeId {
        NodeId(1)
    }

    pub fn task(&mut self, label: impl Into<String>) -> NodeId {
        self.push(NodeKind::Task, Some(label.into()))
    }

    /// Adds a gateway; `kind` must be one of the four gateway kinds.
    pub fn gateway(&mut self, kind: NodeKind) -> NodeId {
        assert!(kind.is_gateway(), "{kind:?} is not a gateway");
        self.push(kind, None)
    }

    pub fn edge(&mut self, source: NodeId, target: NodeId) -> EdgeId {
        let id = EdgeId(self.edges.len());
        self.edges.push(Edge { id, source, target });
        id
    }

    /// Chains `nodes` with consecutive edges.
    pub fn chain(&mut self, nodes: &[NodeId]) {
        for pair in nodes.windows(2) {
            self.edge(pair[0], pair[1]);
        }
    }

    pub fn build(self) -> Result<ProcessModel> {
        ProcessModel::new(self.nodes, self.edges)
    }

    /// A purely sequential model `start -> labels... -> end`.
    pub fn sequence(labels: &[&str]) -> Result<ProcessModel> {
        let mut b = ProcessModelBuilder::new();
        let mut chain = vec![b.start()];
        chain.extend(labels.iter().map(|l| b.task(*l)));
        chain.push(b.end());
        b.chain(&chain);
        b.build()
    }
}

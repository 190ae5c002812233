//! Token-game replay of activity sequences.
//!
//! Gateways fire silently, so replay searches over markings: before each
//! activity it explores the markings reachable through gateway firings and
//! tries every one that enables a task with the wanted label. Failed
//! `(marking, position)` states are memoised. Edges hold at most
//! [`MAX_TOKENS_PER_EDGE`] tokens and the search stops after
//! [`SEARCH_BUDGET`] explored markings, reporting a non-fitting trace.

use std::collections::{HashMap, HashSet, VecDeque};

use super::{EdgeId, NodeId, NodeKind, ProcessModel};
use crate::eventlog::Trace;

const MAX_TOKENS_PER_EDGE: u8 = 3;
const SEARCH_BUDGET: usize = 200_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplayResult {
    pub fits: bool,
    /// Every edge a token was placed on, in firing order. Empty when the
    /// trace does not fit.
    pub traversed_edges: Vec<EdgeId>,
}

impl ReplayResult {
    /// Number of times each edge was traversed, indexed by edge id.
    pub fn edge_counts(&self, num_edges: usize) -> Vec<usize> {
        let mut counts = vec![0; num_edges];
        for e in &self.traversed_edges {
            counts[e.0] += 1;
        }
        counts
    }
}

pub fn replay_trace(model: &ProcessModel, trace: &Trace) -> ReplayResult {
    let activities: Vec<&str> = trace.activities().collect();
    replay_sequence(model, &activities)
}

pub fn replay_sequence(model: &ProcessModel, activities: &[&str]) -> ReplayResult {
    let mut tasks: HashMap<&str, Vec<NodeId>> = HashMap::new();
    for node in model.tasks() {
        if let Some(label) = node.label.as_deref() {
            tasks.entry(label).or_default().push(node.id);
        }
    }
    let mut wanted = Vec::with_capacity(activities.len());
    for a in activities {
        match tasks.get(a) {
            Some(ids) => wanted.push(ids.as_slice()),
            None => {
                return ReplayResult {
                    fits: false,
                    traversed_edges: Vec::new(),
                }
            }
        }
    }

    let mut replayer = Replayer {
        model,
        wanted,
        failed: HashSet::new(),
        explored: 0,
    };
    let mut initial = vec![0u8; model.edges().len()];
    let first = model.outgoing(model.start())[0];
    initial[first.0] = 1;
    match replayer.search(initial.into_boxed_slice(), 0) {
        Some(mut path) => {
            path.insert(0, first);
            ReplayResult {
                fits: true,
                traversed_edges: path,
            }
        }
        None => ReplayResult {
            fits: false,
            traversed_edges: Vec::new(),
        },
    }
}

type Marking = Box<[u8]>;

struct Replayer<'a> {
    model: &'a ProcessModel,
    wanted: Vec<&'a [NodeId]>,
    failed: HashSet<(Marking, usize)>,
    explored: usize,
}

/// One marking reached in a silent closure, with how it was reached.
struct Reached {
    marking: Marking,
    parent: Option<usize>,
    produced: Vec<EdgeId>,
}

impl Replayer<'_> {
    fn search(&mut self, marking: Marking, pos: usize) -> Option<Vec<EdgeId>> {
        if self.explored > SEARCH_BUDGET {
            return None;
        }
        let key = (marking, pos);
        if self.failed.contains(&key) {
            return None;
        }
        let (marking, pos) = key;
        let closure = self.closure(&marking);

        if pos == self.wanted.len() {
            let end_edge = self.model.incoming(self.model.end())[0];
            let done = closure.iter().position(|r| {
                r.marking
                    .iter()
                    .enumerate()
                    .all(|(e, &t)| t == u8::from(e == end_edge.0))
            });
            if let Some(idx) = done {
                return Some(path_to(&closure, idx));
            }
        } else {
            for idx in 0..closure.len() {
                for &task in self.wanted[pos] {
                    let input = self.model.incoming(task)[0];
                    let output = self.model.outgoing(task)[0];
                    let current = &closure[idx].marking;
                    if current[input.0] == 0 || current[output.0] >= MAX_TOKENS_PER_EDGE {
                        continue;
                    }
                    let mut next = current.clone();
                    next[input.0] -= 1;
                    next[output.0] += 1;
                    if let Some(rest) = self.search(next, pos + 1) {
                        let mut path = path_to(&closure, idx);
                        path.push(output);
                        path.extend(rest);
                        return Some(path);
                    }
                }
            }
        }
        self.failed.insert((marking, pos));
        None
    }

    /// Markings reachable from `from` by firing gateways only, breadth-first.
    fn closure(&mut self, from: &Marking) -> Vec<Reached> {
        let model = self.model;
        let mut reached = vec![Reached {
            marking: from.clone(),
            parent: None,
            produced: Vec::new(),
        }];
        let mut seen: HashSet<Marking> = HashSet::from([from.clone()]);
        let mut queue = VecDeque::from([0usize]);
        while let Some(idx) = queue.pop_front() {
            self.explored += 1;
            if self.explored > SEARCH_BUDGET {
                break;
            }
            let marking = reached[idx].marking.clone();
            for node in model.nodes().iter().filter(|n| n.kind.is_gateway()) {
                let ins = model.incoming(node.id);
                let outs = model.outgoing(node.id);
                let mut firings: Vec<(Vec<EdgeId>, Vec<EdgeId>)> = Vec::new();
                match node.kind {
                    NodeKind::XorSplit => {
                        if marking[ins[0].0] > 0 {
                            firings.extend(outs.iter().map(|&o| (vec![ins[0]], vec![o])));
                        }
                    }
                    NodeKind::XorJoin => {
                        firings.extend(
                            ins.iter()
                                .filter(|i| marking[i.0] > 0)
                                .map(|&i| (vec![i], vec![outs[0]])),
                        );
                    }
                    NodeKind::AndSplit if marking[ins[0].0] > 0 => {
                        firings.push((vec![ins[0]], outs.to_vec()));
                    }
                    NodeKind::AndJoin if ins.iter().all(|i| marking[i.0] > 0) => {
                        firings.push((ins.to_vec(), vec![outs[0]]));
                    }
                    _ => {}
                }
                for (consumed, produced) in firings {
                    let mut next = marking.clone();
                    for c in &consumed {
                        next[c.0] -= 1;
                    }
                    if produced.iter().any(|p| next[p.0] >= MAX_TOKENS_PER_EDGE) {
                        continue;
                    }
                    for p in &produced {
                        next[p.0] += 1;
                    }
                    if seen.insert(next.clone()) {
                        reached.push(Reached {
                            marking: next,
                            parent: Some(idx),
                            produced,
                        });
                        queue.push_back(reached.len() - 1);
                    }
                }
            }
        }
        reached
    }
}

fn path_to(closure: &[Reached], mut idx: usize) -> Vec<EdgeId> {
    let mut steps = Vec::new();
    while let Some(parent) = closure[idx].parent {
        steps.push(&closure[idx].produced);
        idx = parent;
    }
    steps.into_iter().rev().flatten().copied().collect()
}

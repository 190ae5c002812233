//! Control-flow discovery from directly-follows relations.
//!
//! 1. Count directly-follows arcs, including artificial start/end arcs.
//! 2. Mark two activities concurrent when both `a->b` and `b->a` occur, neither
//!    has a self-loop, no `aba`/`bab` short loop occurs, and the two counts are
//!    balanced: `|ab - ba| / (ab + ba) < 1 - epsilon`. Arcs between concurrent
//!    activities are dropped. If that disconnects an activity, the concurrency
//!    pairs of the disconnected activity are restored.
//! 3. Keep an arc when its count reaches the `eta`-quantile of all arc counts,
//!    and always keep the arcs of the widest (max-bottleneck) paths from the
//!    start to each activity and from each activity to the end, so every
//!    activity stays on a start-to-end path.
//! 4. Turn nodes with several successors into splits and nodes with several
//!    predecessors into joins. Successors that are all mutually concurrent get
//!    a parallel split; otherwise an exclusive split is created whose branches
//!    are the connected components of the concurrency relation, each
//!    multi-activity component behind its own parallel split. Joins mirror this.

use std::collections::BTreeSet;

use super::{NodeId, NodeKind, ProcessModel, ProcessModelBuilder};
use crate::error::{Error, Result};
use crate::eventlog::EventLog;

pub fn discover_model(log: &EventLog, eta: f64, epsilon: f64) -> Result<ProcessModel> {
    for (name, value) in [("eta", eta), ("epsilon", epsilon)] {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::Argument(format!(
                "{name} must lie in [0, 1], got {value}"
            )));
        }
    }
    if log.is_empty() {
        return Err(Error::EmptyLog);
    }
    let labels: Vec<&str> = log.activity_alphabet().iter().map(String::as_str).collect();
    if labels.is_empty() {
        return Err(Error::EmptyModel);
    }
    let graph = ArcGraph::from_log(log, &labels);
    let concurrent = graph.concurrency(epsilon);
    let (present, concurrent) = graph.drop_concurrent_arcs(concurrent);
    let kept = graph.filter(&present, eta);
    build_bpmn(&labels, &kept, &concurrent)
}

/// Directly-follows counts over dense indices: activities are `0..k`, then
/// the artificial start `k` and end `k + 1`.
struct ArcGraph {
    k: usize,
    counts: Vec<Vec<usize>>,
    short_loop: Vec<Vec<bool>>,
}

impl ArcGraph {
    fn from_log(log: &EventLog, labels: &[&str]) -> Self {
        let k = labels.len();
        let n = k + 2;
        let index = |label: &str| labels.binary_search(&label).expect("label in alphabet");
        let mut counts = vec![vec![0usize; n]; n];
        let mut short_loop = vec![vec![false; k]; k];
        for trace in log.traces().iter().filter(|t| !t.is_empty()) {
            let seq: Vec<usize> = trace.activities().map(index).collect();
            let mut prev = k;
            for &a in &seq {
                counts[prev][a] += 1;
                prev = a;
            }
            counts[prev][k + 1] += 1;
            for w in seq.windows(3) {
                if w[0] == w[2] && w[0] != w[1] {
                    short_loop[w[0]][w[1]] = true;
                    short_loop[w[1]][w[0]] = true;
                }
            }
        }
        ArcGraph {
            k,
            counts,
            short_loop,
        }
    }

    fn n(&self) -> usize {
        self.k + 2
    }

    fn start(&self) -> usize {
        self.k
    }

    fn end(&self) -> usize {
        self.k + 1
    }

    #[allow(clippy::needless_range_loop)]
    fn concurrency(&self, epsilon: f64) -> Vec<Vec<bool>> {
        let k = self.k;
        let mut conc = vec![vec![false; k]; k];
        for a in 0..k {
            for b in (a + 1)..k {
                let (ab, ba) = (self.counts[a][b], self.counts[b][a]);
                if ab == 0 || ba == 0 {
                    continue;
                }
                if self.counts[a][a] > 0 || self.counts[b][b] > 0 || self.short_loop[a][b] {
                    continue;
                }
                let imbalance = ab.abs_diff(ba) as f64 / (ab + ba) as f64;
                if imbalance < 1.0 - epsilon {
                    conc[a][b] = true;
                    conc[b][a] = true;
                }
            }
        }
        conc
    }

    fn drop_concurrent_arcs(&self, mut conc: Vec<Vec<bool>>) -> (Vec<Vec<bool>>, Vec<Vec<bool>>) {
        let k = self.k;
        loop {
            let present = self.arcs_without(&conc);
            let forward = reach(&present, self.start(), true);
            let backward = reach(&present, self.end(), false);
            let failing: Vec<usize> = (0..k).filter(|&a| !forward[a] || !backward[a]).collect();
            if failing.is_empty() {
                return (present, conc);
            }
            // Restore the pairs of the first disconnected activity that has any;
            // some such activity always exists, since the full graph is connected.
            match failing.iter().find(|&&a| conc[a].iter().any(|&c| c)) {
                Some(&a) => {
                    for row in conc.iter_mut() {
                        row[a] = false;
                    }
                    conc[a].fill(false);
                }
                None => {
                    conc = vec![vec![false; k]; k];
                }
            }
        }
    }

    fn arcs_without(&self, conc: &[Vec<bool>]) -> Vec<Vec<bool>> {
        let n = self.n();
        let mut present = vec![vec![false; n]; n];
        for i in 0..n {
            for j in 0..n {
                let concurrent = i < self.k && j < self.k && conc[i][j];
                present[i][j] = self.counts[i][j] > 0 && !concurrent;
            }
        }
        present
    }

    fn filter(&self, present: &[Vec<bool>], eta: f64) -> Vec<Vec<bool>> {
        let n = self.n();
        let mut counts: Vec<usize> = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| present[i][j]).map(move |j| (i, j)))
            .map(|(i, j)| self.counts[i][j])
            .collect();
        counts.sort_unstable();
        let threshold = counts
            .get(((counts.len().saturating_sub(1)) as f64 * eta).floor() as usize)
            .copied()
            .unwrap_or(0);

        let mut kept = vec![vec![false; n]; n];
        for i in 0..n {
            for j in 0..n {
                kept[i][j] = present[i][j] && self.counts[i][j] >= threshold;
            }
        }
        for (node, pred) in self.widest_tree(present, true).into_iter().enumerate() {
            if let Some(p) = pred {
                kept[p][node] = true;
            }
        }
        for (node, succ) in self.widest_tree(present, false).into_iter().enumerate() {
            if let Some(s) = succ {
                kept[node][s] = true;
            }
        }
        kept
    }

    /// Max-bottleneck paths from the start (`forward`) or to the end. Returns,
    /// per node, the neighbour through which its widest path passes.
    fn widest_tree(&self, present: &[Vec<bool>], forward: bool) -> Vec<Option<usize>> {
        let n = self.n();
        let root = if forward { self.start() } else { self.end() };
        let mut width = vec![0usize; n];
        let mut via: Vec<Option<usize>> = vec![None; n];
        let mut done = vec![false; n];
        width[root] = usize::MAX;
        loop {
            let next = (0..n)
                .filter(|&v| !done[v] && width[v] > 0)
                .max_by(|&a, &b| width[a].cmp(&width[b]).then(b.cmp(&a)));
            let Some(u) = next else { break };
            done[u] = true;
            for v in 0..n {
                let (from, to) = if forward { (u, v) } else { (v, u) };
                if done[v] || !present[from][to] {
                    continue;
                }
                let w = width[u].min(self.counts[from][to]);
                if w > width[v] {
                    width[v] = w;
                    via[v] = Some(u);
                }
            }
        }
        via
    }
}

fn reach(present: &[Vec<bool>], root: usize, forward: bool) -> Vec<bool> {
    let n = present.len();
    let mut seen = vec![false; n];
    let mut stack = vec![root];
    seen[root] = true;
    while let Some(u) = stack.pop() {
        for v in 0..n {
            let arc = if forward {
                present[u][v]
            } else {
                present[v][u]
            };
            if arc && !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen
}

/// Connected components of the concurrency relation restricted to `members`,
/// ordered by smallest member.
fn concurrency_groups(members: &[usize], conc: &[Vec<bool>], k: usize) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut assigned = BTreeSet::new();
    for &m in members {
        if !assigned.insert(m) {
            continue;
        }
        let mut group = vec![m];
        let mut i = 0;
        while i < group.len() {
            let x = group[i];
            for &y in members {
                if x < k && y < k && conc[x][y] && assigned.insert(y) {
                    group.push(y);
                }
            }
            i += 1;
        }
        group.sort_unstable();
        groups.push(group);
    }
    groups
}

fn build_bpmn(labels: &[&str], kept: &[Vec<bool>], conc: &[Vec<bool>]) -> Result<ProcessModel> {
    let k = labels.len();
    let n = k + 2;
    let mut b = ProcessModelBuilder::new();
    let mut element = vec![NodeId(0); n];
    element[k] = b.start();
    element[k + 1] = b.end();
    for (i, label) in labels.iter().enumerate() {
        element[i] = b.task(*label);
    }

    // out_port[u][v]: model node from which the edge for arc u->v leaves;
    // in_port[v][u]: model node where it arrives.
    let mut out_port = vec![vec![None; n]; n];
    let mut in_port = vec![vec![None; n]; n];

    for u in 0..n {
        let succ: Vec<usize> = (0..n).filter(|&v| kept[u][v]).collect();
        if succ.len() == 1 {
            out_port[u][succ[0]] = Some(element[u]);
        } else if succ.len() > 1 {
            let groups = concurrency_groups(&succ, conc, k);
            if groups.len() == 1 {
                let split = b.gateway(NodeKind::AndSplit);
                b.edge(element[u], split);
                for &v in &succ {
                    out_port[u][v] = Some(split);
                }
            } else {
                let split = b.gateway(NodeKind::XorSplit);
                b.edge(element[u], split);
                for group in groups {
                    let port = if group.len() == 1 {
                        split
                    } else {
                        let and = b.gateway(NodeKind::AndSplit);
                        b.edge(split, and);
                        and
                    };
                    for v in group {
                        out_port[u][v] = Some(port);
                    }
                }
            }
        }
    }

    for v in 0..n {
        let pred: Vec<usize> = (0..n).filter(|&u| kept[u][v]).collect();
        if pred.len() == 1 {
            in_port[v][pred[0]] = Some(element[v]);
        } else if pred.len() > 1 {
            let groups = concurrency_groups(&pred, conc, k);
            if groups.len() == 1 {
                let join = b.gateway(NodeKind::AndJoin);
                b.edge(join, element[v]);
                for &u in &pred {
                    in_port[v][u] = Some(join);
                }
            } else {
                let join = b.gateway(NodeKind::XorJoin);
                b.edge(join, element[v]);
                for group in groups {
                    let port = if group.len() == 1 {
                        join
                    } else {
                        let and = b.gateway(NodeKind::AndJoin);
                        b.edge(and, join);
                        and
                    };
                    for u in group {
                        in_port[v][u] = Some(port);
                    }
                }
            }
        }
    }

    for u in 0..n {
        for v in 0..n {
            if kept[u][v] {
                let (Some(from), Some(to)) = (out_port[u][v], in_port[v][u]) else {
                    unreachable!("ports exist for every kept arc");
                };
                b.edge(from, to);
            }
        }
    }
    b.build()
}

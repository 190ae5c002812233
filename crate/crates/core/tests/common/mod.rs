//! Oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use dds_core::eventlog::{Event, EventLog, Timestamp, Trace};
use dds_core::model::{
    Branch, BranchingProbabilities, NodeKind, ProcessModelBuilder, SplitBranches,
};
use dds_core::params::{assemble_bps_model, BpsModel, DistributionSpec, Family, ResourcePool};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Every string over `alphabet` of length at most `max_len`.
pub fn all_strings(alphabet: &[char], max_len: usize) -> Vec<Vec<char>> {
    let mut out = vec![vec![]];
    let mut frontier = vec![vec![]];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for s in &frontier {
            for &c in alphabet {
                let mut t: Vec<char> = s.clone();
                t.push(c);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Shortest edit scripts from `source` to every string reachable through
/// strings of length at most `bound`, by breadth-first search over single
/// insertions, deletions, substitutions and adjacent swaps. Swaps of pairs in
/// `free` cost nothing (0-1 BFS).
pub fn edit_distances_from(
    source: &[char],
    alphabet: &[char],
    bound: usize,
    free: &BTreeSet<(char, char)>,
) -> HashMap<Vec<char>, usize> {
    let mut dist: HashMap<Vec<char>, usize> = HashMap::new();
    let mut queue: VecDeque<Vec<char>> = VecDeque::new();
    dist.insert(source.to_vec(), 0);
    queue.push_back(source.to_vec());
    while let Some(s) = queue.pop_front() {
        let d = dist[&s];
        let mut relax = |t: Vec<char>, cost: usize, queue: &mut VecDeque<Vec<char>>| {
            let nd = d + cost;
            if dist.get(&t).map_or(true, |&old| nd < old) {
                dist.insert(t.clone(), nd);
                if cost == 0 {
                    queue.push_front(t);
                } else {
                    queue.push_back(t);
                }
            }
        };
        for i in 0..=s.len() {
            if s.len() < bound {
                for &c in alphabet {
                    let mut t = s.clone();
                    t.insert(i, c);
                    relax(t, 1, &mut queue);
                }
            }
            if i < s.len() {
                let mut t = s.clone();
                t.remove(i);
                relax(t, 1, &mut queue);
                for &c in alphabet {
                    if c != s[i] {
                        let mut t = s.clone();
                        t[i] = c;
                        relax(t, 1, &mut queue);
                    }
                }
            }
            if i + 1 < s.len() && s[i] != s[i + 1] {
                let mut t = s.clone();
                t.swap(i, i + 1);
                let cost = if free.contains(&(s[i], s[i + 1])) {
                    0
                } else {
                    1
                };
                relax(t, cost, &mut queue);
            }
        }
    }
    dist
}

/// Minimum total cost over every injection of the smaller side into the larger.
pub fn brute_force_assignment(costs: &[Vec<f64>]) -> f64 {
    let rows = costs.len();
    let cols = costs.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return 0.0;
    }
    type Cost<'a> = Box<dyn Fn(usize, usize) -> f64 + 'a>;
    let (small, large, at): (usize, usize, Cost) = if rows <= cols {
        (rows, cols, Box::new(|i, j| costs[i][j]))
    } else {
        (cols, rows, Box::new(|i, j| costs[j][i]))
    };
    fn go(i: usize, small: usize, used: &mut Vec<bool>, at: &dyn Fn(usize, usize) -> f64) -> f64 {
        if i == small {
            return 0.0;
        }
        let mut best = f64::INFINITY;
        for j in 0..used.len() {
            if !used[j] {
                used[j] = true;
                best = best.min(at(i, j) + go(i + 1, small, used, at));
                used[j] = false;
            }
        }
        best
    }
    go(0, small, &mut vec![false; large], at.as_ref())
}

/// Transport LP: move `h1` onto `h2` with ground distance |i - j|.
pub fn emd_lp(h1: &[f64], h2: &[f64]) -> f64 {
    use minilp::{ComparisonOp, OptimizationDirection, Problem};
    let n = h1.len();
    let mut problem = Problem::new(OptimizationDirection::Minimize);
    let flow: Vec<Vec<minilp::Variable>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| problem.add_var((i as f64 - j as f64).abs(), (0.0, f64::INFINITY)))
                .collect()
        })
        .collect();
    for i in 0..n {
        let row: Vec<_> = (0..n).map(|j| (flow[i][j], 1.0)).collect();
        problem.add_constraint(&row, ComparisonOp::Eq, h1[i]);
    }
    for j in 0..n {
        let col: Vec<_> = (0..n).map(|i| (flow[i][j], 1.0)).collect();
        problem.add_constraint(&col, ComparisonOp::Eq, h2[j]);
    }
    problem
        .solve()
        .expect("transport LP is feasible")
        .objective()
}

/// Random log: `traces` cases over activities `A..` with random timings and
/// resources. Every case has at least one event.
pub fn random_log(seed: u64, traces: usize, activities: usize, max_len: usize) -> EventLog {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let letters: Vec<String> = (0..activities)
        .map(|i| ((b'A' + i as u8) as char).to_string())
        .collect();
    let traces = (0..traces)
        .map(|c| {
            let case = format!("case{c}");
            let len = rng.random_range(1..=max_len);
            let mut t = c as i64 * 3_600_000 + rng.random_range(0..1_800_000);
            let events = (0..len)
                .map(|_| {
                    t += rng.random_range(0..120_000);
                    let start = t;
                    t += rng.random_range(1..600_000);
                    Event {
                        case_id: case.clone(),
                        activity: letters[rng.random_range(0..letters.len())].clone(),
                        resource: Some(format!("r{}", rng.random_range(0..4))),
                        start: Timestamp::from_millis(start),
                        end: Timestamp::from_millis(t),
                    }
                })
                .collect();
            Trace::new(case, events).unwrap()
        })
        .collect();
    EventLog::new(traces).unwrap()
}

pub fn exponential(mean: f64) -> DistributionSpec {
    DistributionSpec {
        family: Family::Exponential { mean },
        fit_error: 0.0,
    }
}

/// start -> A -> xor(B p | C 1-p) -> and(D, E) -> end, exponential timings,
/// pool `front` {r1, r2} for A/B/C and pool `back` {r3, r4} for D/E.
pub fn two_gateway_model(p: f64) -> BpsModel {
    let mut b = ProcessModelBuilder::new();
    let a = b.task("A");
    let split = b.gateway(NodeKind::XorSplit);
    let task_b = b.task("B");
    let task_c = b.task("C");
    let merge = b.gateway(NodeKind::XorJoin);
    let fork = b.gateway(NodeKind::AndSplit);
    let task_d = b.task("D");
    let task_e = b.task("E");
    let sync = b.gateway(NodeKind::AndJoin);
    let (start, end) = (b.start(), b.end());
    b.chain(&[start, a, split]);
    let to_b = b.edge(split, task_b);
    let to_c = b.edge(split, task_c);
    b.chain(&[task_b, merge]);
    b.chain(&[task_c, merge, fork, task_d, sync]);
    b.chain(&[fork, task_e, sync, end]);
    let process_model = b.build().unwrap();
    let branching = BranchingProbabilities {
        splits: vec![SplitBranches {
            node: split,
            branches: vec![
                Branch {
                    edge: to_b,
                    probability: p,
                },
                Branch {
                    edge: to_c,
                    probability: 1.0 - p,
                },
            ],
        }],
        fallback: vec![],
    };
    let durations: BTreeMap<String, DistributionSpec> = [
        ("A", 300.0),
        ("B", 600.0),
        ("C", 200.0),
        ("D", 400.0),
        ("E", 250.0),
    ]
    .iter()
    .map(|(a, m)| (a.to_string(), exponential(*m)))
    .collect();
    let pool = |id: &str, names: &[&str]| ResourcePool {
        id: id.into(),
        resources: names.iter().map(|n| n.to_string()).collect(),
    };
    let activity_pool = [
        ("A", "front"),
        ("B", "front"),
        ("C", "front"),
        ("D", "back"),
        ("E", "back"),
    ]
    .iter()
    .map(|(a, p)| (a.to_string(), p.to_string()))
    .collect();
    assemble_bps_model(
        process_model,
        branching,
        exponential(600.0),
        durations,
        vec![pool("front", &["r1", "r2"]), pool("back", &["r3", "r4"])],
        activity_pool,
        4,
    )
    .unwrap()
}

/// Edit distance from `source` to `target` under the same moves as
/// [`edit_distances_from`], stopping as soon as `target` is settled.
pub fn edit_distance_to(
    source: &[char],
    target: &[char],
    alphabet: &[char],
    bound: usize,
    free: &BTreeSet<(char, char)>,
) -> usize {
    let mut dist: HashMap<Vec<char>, usize> = HashMap::new();
    let mut settled: BTreeSet<Vec<char>> = BTreeSet::new();
    let mut queue: VecDeque<Vec<char>> = VecDeque::new();
    dist.insert(source.to_vec(), 0);
    queue.push_back(source.to_vec());
    while let Some(s) = queue.pop_front() {
        if !settled.insert(s.clone()) {
            continue;
        }
        let d = dist[&s];
        if s == target {
            return d;
        }
        let mut moves: Vec<(Vec<char>, usize)> = Vec::new();
        for i in 0..=s.len() {
            if s.len() < bound {
                for &c in alphabet {
                    let mut t = s.clone();
                    t.insert(i, c);
                    moves.push((t, 1));
                }
            }
            if i < s.len() {
                let mut t = s.clone();
                t.remove(i);
                moves.push((t, 1));
                for &c in alphabet {
                    if c != s[i] {
                        let mut t = s.clone();
                        t[i] = c;
                        moves.push((t, 1));
                    }
                }
            }
            if i + 1 < s.len() && s[i] != s[i + 1] {
                let mut t = s.clone();
                t.swap(i, i + 1);
                let cost = usize::from(!free.contains(&(s[i], s[i + 1])));
                moves.push((t, cost));
            }
        }
        for (t, cost) in moves {
            let nd = d + cost;
            if dist.get(&t).map_or(true, |&old| nd < old) {
                dist.insert(t.clone(), nd);
                if cost == 0 {
                    queue.push_front(t);
                } else {
                    queue.push_back(t);
                }
            }
        }
    }
    usize::MAX
}

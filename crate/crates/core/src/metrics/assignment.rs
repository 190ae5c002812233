//! Minimum-cost bipartite assignment (Hungarian method with potentials).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Optimal one-to-one assignment for a rectangular cost matrix given as rows.
/// Returns `min(rows, cols)` `(row, col)` pairs sorted by row.
pub fn solve_assignment(costs: &[Vec<f64>]) -> Vec<(usize, usize)> {
    let rows = costs.len();
    let cols = costs.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    assert!(costs.iter().all(|r| r.len() == cols), "ragged cost matrix");
    if rows <= cols {
        hungarian(rows, cols, |i, j| costs[i][j])
    } else {
        let mut pairs: Vec<_> = hungarian(cols, rows, |i, j| costs[j][i])
            .into_iter()
            .map(|(c, r)| (r, c))
            .collect();
        pairs.sort_unstable();
        pairs
    }
}

fn hungarian(n: usize, m: usize, cost: impl Fn(usize, usize) -> f64) -> Vec<(usize, usize)> {
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    let mut min_to = vec![0.0f64; m + 1];
    let mut used = vec![false; m + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0usize;
        min_to.fill(f64::INFINITY);
        used.fill(false);
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let reduced = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if reduced < min_to[j] {
                    min_to[j] = reduced;
                    way[j] = j0;
                }
                if min_to[j] < delta {
                    delta = min_to[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_to[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut pairs: Vec<_> = (1..=m)
        .filter(|&j| owner[j] != 0)
        .map(|j| (owner[j] - 1, j - 1))
        .collect();
    pairs.sort_unstable();
    pairs
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pair {
    pub generated: usize,
    pub truth: usize,
    pub cost: f64,
}

/// Result of optimally pairing generated items with ground-truth items.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pairing {
    pub pairs: Vec<Pair>,
    pub unmatched_generated: Vec<usize>,
    pub unmatched_truth: Vec<usize>,
}

impl Pairing {
    pub fn total_cost(&self) -> f64 {
        self.pairs.iter().map(|p| p.cost).sum()
    }

    /// Mean cost over paired items; 0 when nothing was paired.
    pub fn mean_cost(&self) -> f64 {
        if self.pairs.is_empty() {
            0.0
        } else {
            self.total_cost() / self.pairs.len() as f64
        }
    }
}

/// Builds the full cost matrix in parallel and pairs items minimizing total cost.
pub fn pair_by_cost<A: Sync, B: Sync>(
    generated: &[A],
    truth: &[B],
    cost: impl Fn(&A, &B) -> f64 + Sync,
) -> Pairing {
    let matrix: Vec<Vec<f64>> = generated
        .par_iter()
        .map(|g| truth.iter().map(|t| cost(g, t)).collect())
        .collect();
    let assignment = solve_assignment(&matrix);
    let mut gen_used = vec![false; generated.len()];
    let mut truth_used = vec![false; truth.len()];
    let pairs = assignment
        .into_iter()
        .map(|(g, t)| {
            gen_used[g] = true;
            truth_used[t] = true;
            Pair {
                generated: g,
                truth: t,
                cost: matrix[g][t],
            }
        })
        .collect();
    let unmatched = |used: Vec<bool>| {
        used.iter()
            .enumerate()
            .filter(|(_, u)| !**u)
            .map(|(i, _)| i)
            .collect()
    };
    Pairing {
        pairs,
        unmatched_generated: unmatched(gen_used),
        unmatched_truth: unmatched(truth_used),
    }
}

//! Concurrency-aware Damerau-Levenshtein distances between traces.
//!
//! Both distances share one dynamic program: the unrestricted
//! Damerau-Levenshtein recurrence (Lowrance-Wagner), where insertions and
//! deletions cost 1, substituting different labels costs 1, and an adjacent
//! transposition costs 1 unless the two activities are concurrent, in which
//! case it is free. The control-flow distance charges nothing for matching
//! labels; the timed distance charges the normalized difference of the
//! matched events' processing and waiting times.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::eventlog::{ConcurrencyRelation, EventLog, Trace};

/// Dense symbol table with a concurrency matrix over the symbols.
#[derive(Debug, Clone, Default)]
pub(crate) struct Alphabet {
    ids: HashMap<String, u32>,
    concurrent: Vec<bool>,
    width: usize,
}

impl Alphabet {
    pub(crate) fn new<'a>(
        labels: impl IntoIterator<Item = &'a str>,
        conc: &ConcurrencyRelation,
    ) -> Self {
        let mut ids = HashMap::new();
        for label in labels {
            let next = ids.len() as u32;
            ids.entry(label.to_string()).or_insert(next);
        }
        for (a, b) in conc.pairs() {
            for label in [a, b] {
                let next = ids.len() as u32;
                ids.entry(label.to_string()).or_insert(next);
            }
        }
        let width = ids.len();
        let mut concurrent = vec![false; width * width];
        for (a, b) in conc.pairs() {
            let (x, y) = (ids[a] as usize, ids[b] as usize);
            concurrent[x * width + y] = true;
            concurrent[y * width + x] = true;
        }
        Alphabet {
            ids,
            concurrent,
            width,
        }
    }

    pub(crate) fn encode(&self, labels: &[&str]) -> Vec<u32> {
        labels.iter().map(|l| self.ids[*l]).collect()
    }

    pub(crate) fn len(&self) -> usize {
        self.width
    }

    pub(crate) fn concurrent(&self, a: u32, b: u32) -> bool {
        self.concurrent[a as usize * self.width + b as usize]
    }
}

/// Unrestricted Damerau-Levenshtein with pluggable match and transposition
/// costs. `match_cost(i, j)` prices aligning `a[i]` with `b[j]` when their
/// labels agree. `swap_cost(k, l, i, j)` prices the transposition pairing
/// `a[k]` with `b[j]` and `a[i]` with `b[l]`.
pub(crate) fn lowrance_wagner(
    a: &[u32],
    b: &[u32],
    symbols: usize,
    match_cost: impl Fn(usize, usize) -> f64,
    swap_cost: impl Fn(usize, usize, usize, usize) -> f64,
) -> f64 {
    let (n, m) = (a.len(), b.len());
    let w = m + 2;
    // Row/column 0 is the sentinel "-1" prefix; prefix lengths are shifted by one.
    let at = |i: usize, j: usize| i * w + j;
    let mut d = vec![0.0f64; (n + 2) * w];
    d[at(0, 0)] = f64::INFINITY;
    for i in 0..=n {
        d[at(i + 1, 0)] = f64::INFINITY;
        d[at(i + 1, 1)] = i as f64;
    }
    for j in 0..=m {
        d[at(0, j + 1)] = f64::INFINITY;
        d[at(1, j + 1)] = j as f64;
    }
    let mut last_row = vec![0usize; symbols];
    for i in 1..=n {
        let mut last_col = 0usize;
        for j in 1..=m {
            let k = last_row[b[j - 1] as usize];
            let l = last_col;
            let substitution = if a[i - 1] == b[j - 1] {
                last_col = j;
                match_cost(i - 1, j - 1)
            } else {
                1.0
            };
            let mut best = d[at(i, j)] + substitution;
            best = best.min(d[at(i + 1, j)] + 1.0);
            best = best.min(d[at(i, j + 1)] + 1.0);
            if k > 0 && l > 0 {
                let gap = (i - k - 1) as f64 + (j - l - 1) as f64;
                let swap = d[at(k, l)] + gap + swap_cost(k - 1, l - 1, i - 1, j - 1);
                best = best.min(swap);
            }
            d[at(i + 1, j + 1)] = best;
        }
        last_row[a[i - 1] as usize] = i;
    }
    d[at(n + 1, m + 1)]
}

fn cf_cost_encoded(a: &[u32], b: &[u32], alphabet: &Alphabet) -> f64 {
    lowrance_wagner(
        a,
        b,
        alphabet.len(),
        |_, _| 0.0,
        |k, _, i, _| {
            if alphabet.concurrent(a[k], a[i]) {
                0.0
            } else {
                1.0
            }
        },
    )
}

/// Raw number of edits (concurrent transpositions free).
pub fn cf_edit_cost(t1: &[&str], t2: &[&str], conc: &ConcurrencyRelation) -> f64 {
    let alphabet = Alphabet::new(t1.iter().chain(t2).copied(), conc);
    cf_cost_encoded(&alphabet.encode(t1), &alphabet.encode(t2), &alphabet)
}

/// Edit cost divided by the length of the longer sequence; 0 when both are empty.
pub fn cf_distance(t1: &[&str], t2: &[&str], conc: &ConcurrencyRelation) -> f64 {
    let longest = t1.len().max(t2.len());
    if longest == 0 {
        return 0.0;
    }
    cf_edit_cost(t1, t2, conc) / longest as f64
}

/// Normalizers for the timed distance: the largest processing and waiting
/// times observed, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeScale {
    pub max_processing_secs: f64,
    pub max_waiting_secs: f64,
}

impl TimeScale {
    pub fn from_logs(logs: &[&EventLog]) -> Self {
        let mut scale = TimeScale {
            max_processing_secs: 0.0,
            max_waiting_secs: 0.0,
        };
        for trace in logs.iter().flat_map(|l| l.traces()) {
            let timed = TimedTrace::of(trace);
            for (&p, &w) in timed.processing.iter().zip(&timed.waiting) {
                scale.max_processing_secs = scale.max_processing_secs.max(p);
                scale.max_waiting_secs = scale.max_waiting_secs.max(w);
            }
        }
        scale
    }
}

/// Relative weights of processing- and waiting-time differences in the cost
/// of matching two events with the same label.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BptdWeights {
    pub processing: f64,
    pub waiting: f64,
}

impl Default for BptdWeights {
    fn default() -> Self {
        BptdWeights {
            processing: 0.5,
            waiting: 0.5,
        }
    }
}

/// Per-event processing and waiting times of a trace. The waiting time of an
/// event is its start minus the end of the preceding event, floored at zero;
/// the first event waits zero.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct TimedTrace {
    pub(crate) processing: Vec<f64>,
    pub(crate) waiting: Vec<f64>,
}

impl TimedTrace {
    pub(crate) fn of(trace: &Trace) -> Self {
        let events = trace.events();
        let processing = events.iter().map(|e| e.duration_secs()).collect();
        let waiting = events
            .iter()
            .enumerate()
            .map(|(i, e)| match i {
                0 => 0.0,
                _ => e.start.secs_since(events[i - 1].end).max(0.0),
            })
            .collect();
        TimedTrace {
            processing,
            waiting,
        }
    }
}

pub(crate) fn bptd_encoded(
    a: &[u32],
    ta: &TimedTrace,
    b: &[u32],
    tb: &TimedTrace,
    alphabet: &Alphabet,
    scale: &TimeScale,
    weights: &BptdWeights,
) -> f64 {
    let longest = a.len().max(b.len());
    if longest == 0 {
        return 0.0;
    }
    let term = |x: f64, y: f64, max: f64| {
        if max > 0.0 {
            ((x - y).abs() / max).min(1.0)
        } else {
            0.0
        }
    };
    let penalty = |i: usize, j: usize| {
        weights.processing
            * term(
                ta.processing[i],
                tb.processing[j],
                scale.max_processing_secs,
            )
            + weights.waiting * term(ta.waiting[i], tb.waiting[j], scale.max_waiting_secs)
    };
    let cost = lowrance_wagner(a, b, alphabet.len(), penalty, |k, l, i, j| {
        if alphabet.concurrent(a[k], a[i]) {
            penalty(k, j) + penalty(i, l)
        } else {
            1.0
        }
    });
    cost / longest as f64
}

/// Timed trace distance in [0, 1].
pub fn bptd(
    t1: &Trace,
    t2: &Trace,
    conc: &ConcurrencyRelation,
    scale: &TimeScale,
    weights: &BptdWeights,
) -> f64 {
    let l1: Vec<&str> = t1.activities().collect();
    let l2: Vec<&str> = t2.activities().collect();
    let alphabet = Alphabet::new(l1.iter().chain(&l2).copied(), conc);
    bptd_encoded(
        &alphabet.encode(&l1),
        &TimedTrace::of(t1),
        &alphabet.encode(&l2),
        &TimedTrace::of(t2),
        &alphabet,
        scale,
        weights,
    )
}

pub(crate) fn cf_distance_encoded(a: &[u32], b: &[u32], alphabet: &Alphabet) -> f64 {
    let longest = a.len().max(b.len());
    if longest == 0 {
        return 0.0;
    }
    cf_cost_encoded(a, b, alphabet) / longest as f64
}

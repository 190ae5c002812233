//! Similarity measures between a generated log and a ground-truth log.

mod assignment;
mod edit;
mod emd;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub use assignment::{pair_by_cost, solve_assignment, Pair, Pairing};
pub use edit::{bptd, cf_distance, cf_edit_cost, BptdWeights, TimeScale};
pub use emd::{emd_1d, histogram, sample_emd};

use crate::error::{Error, Result};
use crate::eventlog::{discover_concurrency, EventLog, Trace};
use edit::{bptd_encoded, cf_distance_encoded, Alphabet, TimedTrace};

pub const DEFAULT_BINS: usize = 100;

/// Accuracy of one generated log against the ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub els: f64,
    pub cfls: f64,
    /// Seconds.
    pub cycle_time_mae: f64,
    pub emd: f64,
}

impl MetricReport {
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<8}{:>14}", "metric", "value");
        for (name, value) in [
            ("ELS", self.els),
            ("CFLS", self.cfls),
            ("MAE", self.cycle_time_mae),
            ("EMD", self.emd),
        ] {
            let _ = writeln!(out, "{name:<8}{value:>14.4}");
        }
        out
    }

    /// Field-wise arithmetic mean.
    pub fn mean(reports: &[MetricReport]) -> Option<MetricReport> {
        if reports.is_empty() {
            return None;
        }
        let n = reports.len() as f64;
        let sum = |f: fn(&MetricReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
        Some(MetricReport {
            els: sum(|r| r.els),
            cfls: sum(|r| r.cfls),
            cycle_time_mae: sum(|r| r.cycle_time_mae),
            emd: sum(|r| r.emd),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvaluateOptions {
    pub bins: usize,
    pub normalize_emd: bool,
    pub weights: BptdWeights,
}

impl Default for EvaluateOptions {
    fn default() -> Self {
        EvaluateOptions {
            bins: DEFAULT_BINS,
            normalize_emd: false,
            weights: BptdWeights::default(),
        }
    }
}

fn require_non_empty(gen: &EventLog, truth: &EventLog) -> Result<()> {
    if gen.is_empty() || truth.is_empty() {
        return Err(Error::EmptyLog);
    }
    Ok(())
}

/// Optimal pairing of generated traces to truth traces under `cost`.
pub fn pair_traces(
    gen: &EventLog,
    truth: &EventLog,
    cost: impl Fn(&Trace, &Trace) -> f64 + Sync,
) -> Result<Pairing> {
    require_non_empty(gen, truth)?;
    Ok(pair_by_cost(gen.traces(), truth.traces(), cost))
}

struct Encoded {
    acts: Vec<u32>,
    timed: TimedTrace,
}

fn encode_logs(gen: &EventLog, truth: &EventLog) -> (Alphabet, Vec<Encoded>, Vec<Encoded>) {
    let conc = discover_concurrency(truth);
    let alphabet = Alphabet::new(
        gen.traces()
            .iter()
            .chain(truth.traces())
            .flat_map(|t| t.activities()),
        &conc,
    );
    let encode = |log: &EventLog| {
        log.traces()
            .iter()
            .map(|t| Encoded {
                acts: alphabet.encode(&t.activities().collect::<Vec<_>>()),
                timed: TimedTrace::of(t),
            })
            .collect::<Vec<_>>()
    };
    let (g, t) = (encode(gen), encode(truth));
    (alphabet, g, t)
}

/// Control-flow log similarity: 1 minus the mean concurrency-aware
/// Damerau-Levenshtein distance over optimally paired traces. Concurrency is
/// taken from the truth log.
pub fn cfls(gen: &EventLog, truth: &EventLog) -> Result<f64> {
    require_non_empty(gen, truth)?;
    let (alphabet, g, t) = encode_logs(gen, truth);
    let pairing = pair_by_cost(&g, &t, |a, b| {
        cf_distance_encoded(&a.acts, &b.acts, &alphabet)
    });
    Ok(1.0 - pairing.mean_cost())
}

/// Event-log similarity: 1 minus the mean timed trace distance over
/// optimally paired traces.
pub fn els(gen: &EventLog, truth: &EventLog, weights: &BptdWeights) -> Result<f64> {
    require_non_empty(gen, truth)?;
    let scale = TimeScale::from_logs(&[gen, truth]);
    let (alphabet, g, t) = encode_logs(gen, truth);
    let pairing = pair_by_cost(&g, &t, |a, b| {
        bptd_encoded(
            &a.acts, &a.timed, &b.acts, &b.timed, &alphabet, &scale, weights,
        )
    });
    Ok(1.0 - pairing.mean_cost())
}

/// Mean absolute cycle-time error in seconds over traces paired to minimize it.
pub fn cycle_time_mae(gen: &EventLog, truth: &EventLog) -> Result<f64> {
    require_non_empty(gen, truth)?;
    let g: Vec<f64> = gen.traces().iter().map(Trace::cycle_time_secs).collect();
    let t: Vec<f64> = truth.traces().iter().map(Trace::cycle_time_secs).collect();
    Ok(pair_by_cost(&g, &t, |a, b| (a - b).abs()).mean_cost())
}

fn mean_activity_durations(log: &EventLog) -> Vec<f64> {
    let mut acc: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    for event in log.events() {
        let slot = acc.entry(event.activity.as_str()).or_default();
        slot.0 += event.duration_secs();
        slot.1 += 1;
    }
    acc.values().map(|(s, n)| s / *n as f64).collect()
}

/// EMD between histograms of per-activity mean durations.
pub fn activity_duration_emd(
    gen: &EventLog,
    truth: &EventLog,
    bins: usize,
    normalize: bool,
) -> Result<f64> {
    require_non_empty(gen, truth)?;
    sample_emd(
        &mean_activity_durations(gen),
        &mean_activity_durations(truth),
        bins,
        normalize,
    )
}

/// All four measures of `gen` against `truth`.
pub fn evaluate(
    gen: &EventLog,
    truth: &EventLog,
    options: &EvaluateOptions,
) -> Result<MetricReport> {
    require_non_empty(gen, truth)?;
    let ((els, cfls), (mae, emd)) = rayon::join(
        || (els(gen, truth, &options.weights), cfls(gen, truth)),
        || {
            (
                cycle_time_mae(gen, truth),
                activity_duration_emd(gen, truth, options.bins, options.normalize_emd),
            )
        },
    );
    Ok(MetricReport {
        els: els?,
        cfls: cfls?,
        cycle_time_mae: mae?,
        emd: emd?,
    })
}

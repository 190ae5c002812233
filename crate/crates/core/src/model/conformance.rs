use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{replay_sequence, ProcessModel};
use crate::error::{Error, Result};
use crate::eventlog::{discover_concurrency, Event, EventLog, Trace};
use crate::metrics::cf_edit_cost;

/// How traces that do not replay on the model are handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConformanceMode {
    /// Drop non-fitting traces.
    Remove,
    /// Swap the activity sequence of each non-fitting trace for the closest
    /// fitting one from the same log.
    Replace,
}

impl fmt::Display for ConformanceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConformanceMode::Remove => "remove",
            ConformanceMode::Replace => "replace",
        })
    }
}

impl FromStr for ConformanceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "remove" => Ok(ConformanceMode::Remove),
            "replace" => Ok(ConformanceMode::Replace),
            _ => Err(Error::Argument(format!("unknown conformance mode `{s}`"))),
        }
    }
}

/// Returns a log every trace of which replays on `model`.
///
/// In replace mode the closest fitting sequence is the one at minimal
/// concurrency-aware Damerau-Levenshtein distance (ties: shorter normalized
/// distance, then more frequent variant, then first seen). The original
/// events donate their timestamps and resources by position; surplus events
/// are dropped and missing ones are added with zero duration at the end of
/// the preceding event.
pub fn enforce_conformance(
    model: &ProcessModel,
    log: &EventLog,
    mode: ConformanceMode,
) -> Result<EventLog> {
    let mut variants: Vec<(Vec<&str>, usize)> = Vec::new();
    let mut variant_of: HashMap<Vec<&str>, usize> = HashMap::new();
    for trace in log.traces() {
        let seq: Vec<&str> = trace.activities().collect();
        let idx = *variant_of.entry(seq.clone()).or_insert_with(|| {
            variants.push((seq, 0));
            variants.len() - 1
        });
        variants[idx].1 += 1;
    }
    let fits: Vec<bool> = variants
        .iter()
        .map(|(seq, _)| replay_sequence(model, seq).fits)
        .collect();
    if !fits.iter().any(|&f| f) {
        return Err(Error::AllNonConformant);
    }
    let variant_fits = |t: &Trace| {
        let seq: Vec<&str> = t.activities().collect();
        fits[variant_of[&seq]]
    };

    match mode {
        ConformanceMode::Remove => {
            let kept = log
                .traces()
                .iter()
                .filter(|t| variant_fits(t))
                .cloned()
                .collect();
            Ok(EventLog::from_valid_traces(kept))
        }
        ConformanceMode::Replace => {
            let conc = discover_concurrency(log);
            let candidates: Vec<usize> = (0..variants.len()).filter(|&v| fits[v]).collect();
            let mut replacement: HashMap<usize, usize> = HashMap::new();
            let mut traces = Vec::with_capacity(log.len());
            for trace in log.traces() {
                if variant_fits(trace) {
                    traces.push(trace.clone());
                    continue;
                }
                let seq: Vec<&str> = trace.activities().collect();
                let v = variant_of[&seq];
                let best = *replacement.entry(v).or_insert_with(|| {
                    let mut best: Option<(f64, f64, usize, usize)> = None;
                    for &c in &candidates {
                        let target = &variants[c].0;
                        let cost = cf_edit_cost(&seq, target, &conc);
                        let norm = cost / seq.len().max(target.len()).max(1) as f64;
                        let better = match best {
                            None => true,
                            Some((bc, bn, bf, _)) => {
                                (cost, norm, std::cmp::Reverse(variants[c].1))
                                    < (bc, bn, std::cmp::Reverse(bf))
                            }
                        };
                        if better {
                            best = Some((cost, norm, variants[c].1, c));
                        }
                    }
                    best.expect("at least one fitting variant").3
                });
                traces.push(transplant(trace, &variants[best].0)?);
            }
            Ok(EventLog::from_valid_traces(traces))
        }
    }
}

fn transplant(trace: &Trace, sequence: &[&str]) -> Result<Trace> {
    let original = trace.events();
    let mut events: Vec<Event> = Vec::with_capacity(sequence.len());
    for (i, activity) in sequence.iter().enumerate() {
        let mut event = match original.get(i) {
            Some(e) => e.clone(),
            None => {
                let prev = events.last().or(original.last());
                let at = prev.map(|p| p.end).unwrap_or_default();
                Event {
                    case_id: trace.case_id().to_string(),
                    activity: String::new(),
                    resource: prev.and_then(|p| p.resource.clone()),
                    start: at,
                    end: at,
                }
            }
        };
        event.activity = activity.to_string();
        // Keep the canonical (start, end, label) order equal to the sequence
        // order by nudging ties forward one millisecond.
        if let Some(prev) = events.last() {
            let key = |e: &Event| (e.start, e.end, e.activity.clone());
            if key(&event) <= key(prev) {
                let shift = prev.start.millis() + 1 - event.start.millis();
                event.start = event.start.plus_millis(shift);
                event.end = event.end.plus_millis(shift);
            }
        }
        events.push(event);
    }
    Trace::new(trace.case_id(), events)
}

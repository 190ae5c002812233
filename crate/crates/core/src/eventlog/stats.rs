use serde::{Deserialize, Serialize};

use super::{EventLog, Trace};
use crate::error::{Error, Result};

/// Summary figures of a log. Durations are trace cycle times in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogStatistics {
    pub num_traces: usize,
    pub num_events: usize,
    pub num_activities: usize,
    pub avg_activities_per_trace: f64,
    pub max_activities_per_trace: usize,
    pub mean_duration_secs: f64,
    pub max_duration_secs: f64,
}

pub fn compute_statistics(log: &EventLog) -> Result<LogStatistics> {
    if log.is_empty() {
        return Err(Error::EmptyLog);
    }
    let num_traces = log.len();
    let num_events = log.num_events();
    let durations: Vec<f64> = log.traces().iter().map(Trace::cycle_time_secs).collect();
    Ok(LogStatistics {
        num_traces,
        num_events,
        num_activities: log.activity_alphabet().len(),
        avg_activities_per_trace: num_events as f64 / num_traces as f64,
        max_activities_per_trace: log.max_trace_len(),
        mean_duration_secs: durations.iter().sum::<f64>() / num_traces as f64,
        max_duration_secs: durations.iter().copied().fold(0.0, f64::max),
    })
}

/// Splits a log by case start time: the earliest `ceil(ratio * n)` traces
/// go to the first fold, the rest to the second. Both folds must be non-empty.
pub fn temporal_split(log: &EventLog, ratio: f64) -> Result<(EventLog, EventLog)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Argument(format!(
            "split ratio must lie in (0, 1), got {ratio}"
        )));
    }
    let n = log.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "temporal split needs at least 2 traces, log has {n}"
        )));
    }
    let mut order: Vec<&Trace> = log.traces().iter().collect();
    order.sort_by(|a, b| {
        a.first_start()
            .cmp(&b.first_start())
            .then_with(|| a.case_id().cmp(b.case_id()))
    });
    // Products such as 0.7 * 10 land a hair above the integer.
    let train_len = ((ratio * n as f64) - 1e-9).ceil().max(0.0) as usize;
    if train_len == 0 || train_len >= n {
        return Err(Error::DegenerateSplit { traces: n, ratio });
    }
    let test = order.split_off(train_len);
    let collect =
        |traces: Vec<&Trace>| EventLog::from_valid_traces(traces.into_iter().cloned().collect());
    Ok((collect(order), collect(test)))
}

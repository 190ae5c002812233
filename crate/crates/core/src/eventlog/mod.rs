//! Timestamped event logs.
//!
//! An [`EventLog`] is a set of [`Trace`]s, one per case, each holding the
//! case's [`Event`]s ordered by start time (ties broken by end time, then by
//! activity label). Every event carries both a start and an end timestamp at
//! millisecond precision in UTC.

mod concurrency;
mod csv;
mod stats;

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, NaiveDateTime, TimeZone, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub use self::concurrency::{discover_concurrency, ConcurrencyRelation};
pub use self::csv::{parse_csv, read_csv, write_csv, ColumnMapping, CSV_HEADER};
pub use self::stats::{compute_statistics, temporal_split, LogStatistics};

/// Absolute instant in milliseconds since the Unix epoch, UTC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Timestamp(i64);

impl Timestamp {
    pub const fn from_millis(millis: i64) -> Self {
        Timestamp(millis)
    }

    pub const fn millis(self) -> i64 {
        self.0
    }

    pub fn plus_millis(self, millis: i64) -> Self {
        Timestamp(self.0 + millis)
    }

    /// Signed distance `self - earlier` in seconds.
    pub fn secs_since(self, earlier: Timestamp) -> f64 {
        (self.0 - earlier.0) as f64 / 1000.0
    }

    /// Parses ISO-8601 / RFC 3339 instants. Offsets are honored; values
    /// without an offset are read as UTC. Sub-millisecond digits are truncated.
    pub fn parse(value: &str) -> Option<Self> {
        let value = value.trim();
        if let Ok(dt) = DateTime::parse_from_rfc3339(value) {
            return Some(Timestamp(dt.timestamp_millis()));
        }
        for format in [
            "%Y-%m-%dT%H:%M:%S%.f",
            "%Y-%m-%d %H:%M:%S%.f",
            "%Y-%m-%dT%H:%M:%S",
            "%Y-%m-%d %H:%M:%S",
        ] {
            if let Ok(naive) = NaiveDateTime::parse_from_str(value, format) {
                return Some(Timestamp(Utc.from_utc_datetime(&naive).timestamp_millis()));
            }
        }
        None
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match DateTime::<Utc>::from_timestamp_millis(self.0) {
            Some(dt) => write!(f, "{}", dt.format("%Y-%m-%dT%H:%M:%S%.3f+00:00")),
            None => write!(f, "@{}ms", self.0),
        }
    }
}

impl FromStr for Timestamp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Timestamp::parse(s).ok_or_else(|| Error::Argument(format!("invalid timestamp `{s}`")))
    }
}

impl Serialize for Timestamp {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Timestamp {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Timestamp::parse(&s)
            .ok_or_else(|| serde::de::Error::custom(format!("invalid timestamp `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub case_id: String,
    pub activity: String,
    pub resource: Option<String>,
    pub start: Timestamp,
    pub end: Timestamp,
}

impl Event {
    /// Processing time in seconds.
    pub fn duration_secs(&self) -> f64 {
        self.end.secs_since(self.start)
    }

    fn order_key(&self) -> (Timestamp, Timestamp, &str) {
        (self.start, self.end, self.activity.as_str())
    }
}

/// The events of one case, in canonical order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    case_id: String,
    events: Vec<Event>,
}

impl Trace {
    /// Validates and sorts `events`. A trace may be empty.
    pub fn new(case_id: impl Into<String>, mut events: Vec<Event>) -> Result<Self> {
        let case_id = case_id.into();
        for event in &events {
            if event.case_id != case_id {
                return Err(Error::InvalidLog(format!(
                    "event of case `{}` placed in trace `{case_id}`",
                    event.case_id
                )));
            }
            if event.activity.is_empty() {
                return Err(Error::InvalidLog(format!(
                    "case `{case_id}` has an event with an empty activity label"
                )));
            }
            if event.end < event.start {
                return Err(Error::InvalidLog(format!(
                    "case `{case_id}`: activity `{}` ends before it starts",
                    event.activity
                )));
            }
        }
        events.sort_by(|a, b| a.order_key().cmp(&b.order_key()));
        Ok(Trace { case_id, events })
    }

    pub fn case_id(&self) -> &str {
        &self.case_id
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn activities(&self) -> impl Iterator<Item = &str> + '_ {
        self.events.iter().map(|e| e.activity.as_str())
    }

    pub fn first_start(&self) -> Option<Timestamp> {
        self.events.iter().map(|e| e.start).min()
    }

    pub fn last_end(&self) -> Option<Timestamp> {
        self.events.iter().map(|e| e.end).max()
    }

    /// Last end minus first start, in seconds; zero for an empty trace.
    pub fn cycle_time_secs(&self) -> f64 {
        match (self.first_start(), self.last_end()) {
            (Some(start), Some(end)) => end.secs_since(start),
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EventLog {
    traces: Vec<Trace>,
    activities: BTreeSet<String>,
    resources: BTreeSet<String>,
}

impl EventLog {
    /// Builds a log from traces, rejecting duplicate case identifiers.
    pub fn new(traces: Vec<Trace>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(traces.len());
        for trace in &traces {
            if !seen.insert(trace.case_id.as_str()) {
                return Err(Error::InvalidLog(format!(
                    "duplicate case id `{}`",
                    trace.case_id
                )));
            }
        }
        Ok(Self::from_valid_traces(traces))
    }

    /// Groups events by case, keeping cases in order of first appearance.
    pub fn from_events(events: impl IntoIterator<Item = Event>) -> Result<Self> {
        let mut order: Vec<String> = Vec::new();
        let mut groups: HashMap<String, Vec<Event>> = HashMap::new();
        for event in events {
            match groups.get_mut(&event.case_id) {
                Some(group) => group.push(event),
                None => {
                    order.push(event.case_id.clone());
                    groups.insert(event.case_id.clone(), vec![event]);
                }
            }
        }
        let traces = order
            .into_iter()
            .map(|case| {
                let events = groups.remove(&case).unwrap_or_default();
                Trace::new(case, events)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_valid_traces(traces))
    }

    pub(crate) fn from_valid_traces(traces: Vec<Trace>) -> Self {
        let mut activities = BTreeSet::new();
        let mut resources = BTreeSet::new();
        for event in traces.iter().flat_map(|t| t.events.iter()) {
            if !activities.contains(&event.activity) {
                activities.insert(event.activity.clone());
            }
            if let Some(resource) = &event.resource {
                if !resources.contains(resource) {
                    resources.insert(resource.clone());
                }
            }
        }
        EventLog {
            traces,
            activities,
            resources,
        }
    }

    pub fn traces(&self) -> &[Trace] {
        &self.traces
    }

    pub fn into_traces(self) -> Vec<Trace> {
        self.traces
    }

    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    pub fn num_events(&self) -> usize {
        self.traces.iter().map(Trace::len).sum()
    }

    pub fn activity_alphabet(&self) -> &BTreeSet<String> {
        &self.activities
    }

    pub fn resource_alphabet(&self) -> &BTreeSet<String> {
        &self.resources
    }

    pub fn events(&self) -> impl Iterator<Item = &Event> + '_ {
        self.traces.iter().flat_map(|t| t.events.iter())
    }

    pub fn max_trace_len(&self) -> usize {
        self.traces.iter().map(Trace::len).max().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(case: &str, activity: &str, start: i64, end: i64) -> Event {
        Event {
            case_id: case.into(),
            activity: activity.into(),
            resource: None,
            start: Timestamp::from_millis(start),
            end: Timestamp::from_millis(end),
        }
    }

    #[test]
    fn trace_orders_by_start_then_end_then_label() {
        let trace = Trace::new(
            "c",
            vec![
                ev("c", "B", 10, 20),
                ev("c", "C", 0, 5),
                ev("c", "A", 10, 20),
                ev("c", "D", 10, 15),
            ],
        )
        .unwrap();
        let order: Vec<_> = trace.activities().collect();
        assert_eq!(order, ["C", "D", "A", "B"]);
    }

    #[test]
    fn trace_rejects_foreign_and_inverted_events() {
        assert!(Trace::new("c", vec![ev("d", "A", 0, 1)]).is_err());
        assert!(Trace::new("c", vec![ev("c", "A", 5, 1)]).is_err());
        assert!(Trace::new("c", vec![ev("c", "", 0, 1)]).is_err());
    }

    #[test]
    fn log_alphabets_and_duplicate_cases() {
        let mut e = ev("1", "A", 0, 1);
        e.resource = Some("r".into());
        let log = EventLog::from_events(vec![e, ev("2", "B", 0, 1), ev("1", "C", 2, 3)]).unwrap();
        assert_eq!(log.len(), 2);
        assert_eq!(log.traces()[0].case_id(), "1");
        assert_eq!(
            log.activity_alphabet().iter().collect::<Vec<_>>(),
            ["A", "B", "C"]
        );
        assert_eq!(log.resource_alphabet().len(), 1);

        let t1 = Trace::new("x", vec![]).unwrap();
        let t2 = Trace::new("x", vec![]).unwrap();
        assert!(EventLog::new(vec![t1, t2]).is_err());
    }

    #[test]
    fn timestamp_parsing_and_formatting() {
        let ts = Timestamp::parse("2020-01-01T10:00:00.250+01:00").unwrap();
        assert_eq!(ts.to_string(), "2020-01-01T09:00:00.250+00:00");
        assert_eq!(Timestamp::parse("2020-01-01T09:00:00.250Z"), Some(ts));
        assert_eq!(Timestamp::parse("2020-01-01 09:00:00.250"), Some(ts));
        assert_eq!(Timestamp::parse(&ts.to_string()), Some(ts));
        assert!(Timestamp::parse("yesterday").is_none());
    }
}

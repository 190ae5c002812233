use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::EventLog;

/// Symmetric relation over activity labels. Pairs are stored once, smaller
/// label first.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConcurrencyRelation {
    pairs: BTreeSet<(String, String)>,
}

impl ConcurrencyRelation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, a: &str, b: &str) {
        if a != b {
            self.pairs.insert(Self::key(a, b));
        }
    }

    pub fn contains(&self, a: &str, b: &str) -> bool {
        a != b && self.pairs.contains(&Self::key(a, b))
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&str, &str)> + '_ {
        self.pairs.iter().map(|(a, b)| (a.as_str(), b.as_str()))
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    fn key(a: &str, b: &str) -> (String, String) {
        if a <= b {
            (a.to_string(), b.to_string())
        } else {
            (b.to_string(), a.to_string())
        }
    }
}

impl FromIterator<(String, String)> for ConcurrencyRelation {
    fn from_iter<I: IntoIterator<Item = (String, String)>>(iter: I) -> Self {
        let mut rel = ConcurrencyRelation::new();
        for (a, b) in iter {
            rel.insert(&a, &b);
        }
        rel
    }
}

/// Two activities are concurrent when each directly follows the other
/// somewhere in the log.
pub fn discover_concurrency(log: &EventLog) -> ConcurrencyRelation {
    let mut follows: BTreeSet<(&str, &str)> = BTreeSet::new();
    for trace in log.traces() {
        let events = trace.events();
        for pair in events.windows(2) {
            follows.insert((pair[0].activity.as_str(), pair[1].activity.as_str()));
        }
    }
    let mut rel = ConcurrencyRelation::new();
    for &(a, b) in &follows {
        if a < b && follows.contains(&(b, a)) {
            rel.insert(a, b);
        }
    }
    rel
}

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Event, EventLog, Timestamp};
use crate::error::{Error, Result};

/// Header written by [`write_csv`] and expected by default from [`parse_csv`].
pub const CSV_HEADER: [&str; 5] = [
    "case_id",
    "activity",
    "resource",
    "start_timestamp",
    "end_timestamp",
];

/// Names of the input columns holding each event attribute.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnMapping {
    pub case: String,
    pub activity: String,
    /// Optional: when `None`, or when the column is absent, events carry no resource.
    pub resource: Option<String>,
    pub start: String,
    pub end: String,
}

impl Default for ColumnMapping {
    fn default() -> Self {
        ColumnMapping {
            case: CSV_HEADER[0].into(),
            activity: CSV_HEADER[1].into(),
            resource: Some(CSV_HEADER[2].into()),
            start: CSV_HEADER[3].into(),
            end: CSV_HEADER[4].into(),
        }
    }
}

impl FromStr for ColumnMapping {
    type Err = Error;

    /// Parses `key=column` pairs separated by commas, e.g.
    /// `case=CaseID,activity=Task,start=Start,end=End,resource=`.
    /// Unmentioned keys keep their defaults; an empty resource disables it.
    fn from_str(s: &str) -> Result<Self> {
        let mut mapping = ColumnMapping::default();
        for pair in s.split(',').filter(|p| !p.trim().is_empty()) {
            let (key, value) = pair.split_once('=').ok_or_else(|| {
                Error::Argument(format!("column mapping entry `{pair}` lacks `=`"))
            })?;
            let value = value.trim().to_string();
            match key.trim() {
                "case" => mapping.case = value,
                "activity" => mapping.activity = value,
                "resource" => mapping.resource = (!value.is_empty()).then_some(value),
                "start" => mapping.start = value,
                "end" => mapping.end = value,
                other => {
                    return Err(Error::Argument(format!(
                        "unknown column mapping key `{other}`"
                    )))
                }
            }
        }
        Ok(mapping)
    }
}

/// Reads an event log from a CSV file.
pub fn parse_csv(path: impl AsRef<Path>, mapping: &ColumnMapping) -> Result<EventLog> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(BufReader::new(file), path, mapping)
}

/// Reads an event log from any CSV source; `origin` is used in error messages.
pub fn read_csv<R: Read>(reader: R, origin: &Path, mapping: &ColumnMapping) -> Result<EventLog> {
    let csv_err = |source| Error::Csv {
        path: origin.to_path_buf(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let headers = reader.headers().map_err(csv_err)?.clone();
    let column = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let case_col = column(&mapping.case)?;
    let activity_col = column(&mapping.activity)?;
    let start_col = column(&mapping.start)?;
    let end_col = column(&mapping.end)?;
    let resource_col = match &mapping.resource {
        Some(name) => headers.iter().position(|h| h.trim() == name),
        None => None,
    };

    let mut events = Vec::new();
    let mut inverted = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |idx: usize| record.get(idx).unwrap_or("").trim();

        let case_id = field(case_col);
        if case_id.is_empty() {
            return Err(Error::Row {
                line,
                message: "empty case id".into(),
            });
        }
        let activity = field(activity_col);
        if activity.is_empty() {
            return Err(Error::Row {
                line,
                message: "empty activity label".into(),
            });
        }
        let timestamp = |idx: usize| {
            let raw = field(idx);
            Timestamp::parse(raw).ok_or_else(|| Error::Timestamp {
                line,
                value: raw.to_string(),
            })
        };
        let start = timestamp(start_col)?;
        let end = timestamp(end_col)?;
        if end < start {
            inverted.push((line, case_id.to_string()));
            continue;
        }
        let resource = resource_col
            .map(field)
            .filter(|r| !r.is_empty())
            .map(str::to_string);
        events.push(Event {
            case_id: case_id.to_string(),
            activity: activity.to_string(),
            resource,
            start,
            end,
        });
    }
    if !inverted.is_empty() {
        return Err(Error::EndBeforeStart {
            offenders: inverted,
        });
    }
    EventLog::from_events(events)
}

/// Writes a log using the canonical header, traces in log order.
pub fn write_csv(log: &EventLog, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv_to(log, BufWriter::new(file)).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn write_csv_to<W: Write>(log: &EventLog, writer: W) -> csv::Result<()> {
    let mut writer = csv::Writer::from_writer(writer);
    writer.write_record(CSV_HEADER)?;
    for event in log.events() {
        let start = event.start.to_string();
        let end = event.end.to_string();
        writer.write_record([
            event.case_id.as_str(),
            event.activity.as_str(),
            event.resource.as_deref().unwrap_or(""),
            start.as_str(),
            end.as_str(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

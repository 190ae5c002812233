use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure class, used by front-ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad caller-supplied arguments or configuration.
    Usage,
    /// Input data that is malformed or unsuitable.
    Data,
    /// A pipeline stage could not produce a result.
    Pipeline,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("missing column `{0}` in event log header")]
    MissingColumn(String),

    #[error("line {line}: cannot parse timestamp `{value}`")]
    Timestamp { line: u64, value: String },

    #[error("line {line}: {message}")]
    Row { line: u64, message: String },

    #[error("events end before they start: {}", format_offenders(.offenders))]
    EndBeforeStart { offenders: Vec<(u64, String)> },

    #[error("invalid event log: {0}")]
    InvalidLog(String),

    #[error("event log is empty")]
    EmptyLog,

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("temporal split of {traces} traces at ratio {ratio} leaves an empty fold")]
    DegenerateSplit { traces: usize, ratio: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid process model: {0}")]
    InvalidModel(String),

    #[error("discovery produced an empty model")]
    EmptyModel,

    #[error("no trace of the log conforms to the process model")]
    AllNonConformant,

    #[error("cannot assemble simulation model: {0}")]
    Assembly(String),

    #[error("simulation aborted {aborted} of {cases} cases")]
    Simulation { aborted: usize, cases: usize },

    #[error("every optimization trial failed: {}", .diagnostics.join("; "))]
    Optimization { diagnostics: Vec<String> },
}

fn format_offenders(offenders: &[(u64, String)]) -> String {
    offenders
        .iter()
        .map(|(line, case)| format!("line {line} (case {case})"))
        .collect::<Vec<_>>()
        .join(", ")
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Argument(_) => ErrorKind::Usage,
            Error::Io { .. }
            | Error::Csv { .. }
            | Error::Json { .. }
            | Error::MissingColumn(_)
            | Error::Timestamp { .. }
            | Error::Row { .. }
            | Error::EndBeforeStart { .. }
            | Error::InvalidLog(_)
            | Error::EmptyLog
            | Error::DegenerateSplit { .. }
            | Error::InsufficientData(_)
            | Error::InvalidModel(_) => ErrorKind::Data,
            Error::EmptyModel
            | Error::AllNonConformant
            | Error::Assembly(_)
            | Error::Simulation { .. }
            | Error::Optimization { .. } => ErrorKind::Pipeline,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json {
            context: context.into(),
            source,
        }
    }
}

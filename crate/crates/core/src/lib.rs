//! Data-driven business process simulation: event logs, model discovery,
//! simulation parameters, a discrete-event simulator, log similarity
//! measures, and a hyperparameter search around them.

pub mod error;
pub mod eventlog;
pub mod experiment;
pub mod metrics;
pub mod model;
pub mod optimize;
pub mod params;
pub mod rng;
pub mod sim;

pub use error::{Error, ErrorKind, Result};
pub use eventlog::{ColumnMapping, Event, EventLog, LogStatistics, Timestamp, Trace};
pub use experiment::{render_report, run_experiment, ExperimentConfig, ExperimentReport};
pub use metrics::{evaluate, EvaluateOptions, MetricReport};
pub use model::{BranchingMode, ConformanceMode, ProcessModel};
pub use optimize::{optimize_dds, run_pipeline, OptimizeConfig, PipelineConfig, SearchSpace};
pub use params::{BpsModel, DistributionSpec, Family};
pub use sim::{simulate, SimConfig, Simulation};

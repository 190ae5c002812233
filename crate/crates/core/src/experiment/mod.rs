//! End-to-end experiment: split, optimize, generate, score, report.

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::eventlog::{
    compute_statistics, parse_csv, temporal_split, ColumnMapping, EventLog, LogStatistics,
};
use crate::metrics::{evaluate, EvaluateOptions, MetricReport, DEFAULT_BINS};
use crate::optimize::{optimize_dds, OptimizeConfig, PipelineConfig, SearchSpace, TrialResult};
use crate::rng::{derive_seed, domain};
use crate::sim::{simulate, SimConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    /// Simulation of the discovered model.
    Dds,
    /// Pre-generated CSV logs read from a directory.
    External,
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Generator::Dds => "dds",
            Generator::External => "external",
        })
    }
}

impl std::str::FromStr for Generator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dds" => Ok(Generator::Dds),
            "external" => Ok(Generator::External),
            _ => Err(Error::Argument(format!("unknown generator `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub log: PathBuf,
    pub columns: ColumnMapping,
    pub split_ratio: f64,
    pub trials: usize,
    pub runs: usize,
    pub generated_logs: usize,
    pub seed: u64,
    pub generators: Vec<Generator>,
    /// Directory of CSV logs for the external generator.
    pub external_dir: Option<PathBuf>,
    pub bins: usize,
    pub normalize_emd: bool,
    pub search_space: SearchSpace,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            log: PathBuf::new(),
            columns: ColumnMapping::default(),
            split_ratio: 0.7,
            trials: crate::optimize::DEFAULT_TRIALS,
            runs: crate::optimize::DEFAULT_RUNS,
            generated_logs: 10,
            seed: 0,
            generators: vec![Generator::Dds],
            external_dir: None,
            bins: DEFAULT_BINS,
            normalize_emd: false,
            search_space: SearchSpace::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::json("experiment config", e))
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.generated_logs == 0 {
            return Err(Error::Argument("generated_logs must be at least 1".into()));
        }
        if self.generators.is_empty() {
            return Err(Error::Argument("no generators selected".into()));
        }
        if self.generators.contains(&Generator::External) && self.external_dir.is_none() {
            return Err(Error::Argument(
                "the external generator needs external_dir".into(),
            ));
        }
        if self.bins < 2 {
            return Err(Error::Argument(format!(
                "bins must be at least 2, got {}",
                self.bins
            )));
        }
        self.search_space.validate()
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        format!("{:x}", Sha256::digest(bytes))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogResult {
    pub name: String,
    pub metrics: MetricReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorReport {
    pub generator: Generator,
    pub logs: Vec<LogResult>,
    pub mean: Option<MetricReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub config_hash: String,
    pub tool_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub log_statistics: LogStatistics,
    pub train_traces: usize,
    pub test_traces: usize,
    pub generators: Vec<GeneratorReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selected_config: Option<PipelineConfig>,
    pub provenance: Provenance,
}

impl ExperimentReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::json("experiment report", e))
    }
}

/// Everything [`run_experiment`] produced, including the search history.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub report: ExperimentReport,
    pub history: Vec<TrialResult>,
}

fn finish(generator: Generator, logs: Vec<LogResult>, warnings: Vec<String>) -> GeneratorReport {
    let mean = MetricReport::mean(&logs.iter().map(|l| l.metrics).collect::<Vec<_>>());
    let error = mean
        .is_none()
        .then(|| format!("no usable logs for generator `{generator}`"));
    GeneratorReport {
        generator,
        logs,
        mean,
        warnings,
        error,
    }
}

fn external_logs(
    dir: &Path,
    columns: &ColumnMapping,
    test: &EventLog,
    options: &EvaluateOptions,
) -> Result<GeneratorReport> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("csv")))
        .collect();
    paths.sort();
    let mut warnings = Vec::new();
    let mut logs = Vec::new();
    for path in paths {
        let name = path
            .file_name()
            .unwrap_or_default()
            .to_string_lossy()
            .into_owned();
        let log = match parse_csv(&path, columns) {
            Ok(log) => log,
            Err(e) => {
                warnings.push(format!("{name}: {e}"));
                continue;
            }
        };
        if log.len() != test.len() {
            let note = format!(
                "{name}: {} traces, expected {}; excluded",
                log.len(),
                test.len()
            );
            log::warn!("{note}");
            warnings.push(note);
            continue;
        }
        logs.push(LogResult {
            name,
            metrics: evaluate(&log, test, options)?,
        });
    }
    Ok(finish(Generator::External, logs, warnings))
}

/// Runs the full protocol described by `config`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    config.validate()?;
    let log = parse_csv(&config.log, &config.columns)?;
    let log_statistics = compute_statistics(&log)?;
    let (train, test) = temporal_split(&log, config.split_ratio)?;
    let options = EvaluateOptions {
        bins: config.bins,
        normalize_emd: config.normalize_emd,
        ..EvaluateOptions::default()
    };

    let mut generators = Vec::new();
    let mut history = Vec::new();
    let mut selected_config = None;
    let mut selected: Vec<Generator> = config.generators.clone();
    selected.sort();
    selected.dedup();
    for generator in selected {
        match generator {
            Generator::Dds => {
                let opt = optimize_dds(
                    &train,
                    &config.search_space,
                    &OptimizeConfig {
                        trials: config.trials,
                        runs: config.runs,
                        seed: config.seed,
                        ..OptimizeConfig::default()
                    },
                )?;
                selected_config = Some(opt.best_result().config.clone());
                let start = test
                    .traces()
                    .iter()
                    .filter_map(|t| t.first_start())
                    .min()
                    .expect("test fold is non-empty");
                let logs = (0..config.generated_logs)
                    .into_par_iter()
                    .map(|i| {
                        let seed = derive_seed(config.seed, domain::GENERATED_LOG, i as u64);
                        let sim = simulate(&opt.best, &SimConfig::new(test.len(), seed, start))?;
                        Ok(LogResult {
                            name: format!("dds_{:02}", i + 1),
                            metrics: evaluate(&sim.log, &test, &options)?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                generators.push(finish(Generator::Dds, logs, Vec::new()));
                history = opt.history;
            }
            Generator::External => {
                let dir = config.external_dir.as_deref().expect("validated");
                generators.push(external_logs(dir, &config.columns, &test, &options)?);
            }
        }
    }

    Ok(ExperimentOutcome {
        report: ExperimentReport {
            log_statistics,
            train_traces: train.len(),
            test_traces: test.len(),
            generators,
            selected_config,
            provenance: Provenance {
                seed: config.seed,
                config_hash: config.hash(),
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
            },
        },
        history,
    })
}

/// One row per generator with its mean measures; the row with the highest
/// ELS is marked with `*`.
pub fn render_report(report: &ExperimentReport) -> String {
    let best = report
        .generators
        .iter()
        .enumerate()
        .filter_map(|(i, g)| g.mean.map(|m| (i, m.els)))
        .fold(None, |acc: Option<(usize, f64)>, (i, els)| match acc {
            Some((_, b)) if b >= els => acc,
            _ => Some((i, els)),
        })
        .map(|(i, _)| i);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "  {:<10} {:>6} {:>8} {:>8} {:>14} {:>10}",
        "generator", "logs", "ELS", "CFLS", "MAE", "EMD"
    );
    for (i, g) in report.generators.iter().enumerate() {
        let mark = if Some(i) == best { '*' } else { ' ' };
        let name = g.generator.to_string();
        match (&g.mean, &g.error) {
            (Some(m), _) => {
                let _ = writeln!(
                    out,
                    "{mark} {:<10} {:>6} {:>8.2} {:>8.2} {:>14.2} {:>10.2}",
                    name,
                    g.logs.len(),
                    m.els,
                    m.cfls,
                    m.cycle_time_mae,
                    m.emd
                );
            }
            (None, error) => {
                let _ = writeln!(
                    out,
                    "{mark} {:<10} {:>6} error: {}",
                    name,
                    g.logs.len(),
                    error.as_deref().unwrap_or("no results")
                );
            }
        }
    }
    out
}

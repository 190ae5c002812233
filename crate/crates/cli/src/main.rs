use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dds_core::eventlog::{compute_statistics, parse_csv, temporal_split, write_csv};
use dds_core::experiment::Generator;
use dds_core::optimize::write_history;
use dds_core::{
    evaluate, optimize_dds, render_report, run_experiment, simulate, BpsModel, ColumnMapping,
    Error, ErrorKind, EvaluateOptions, ExperimentConfig, OptimizeConfig, Result, SearchSpace,
    SimConfig, Timestamp,
};

/// Data-driven business process simulation.
#[derive(Debug, Parser)]
#[command(name = "dds", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print summary statistics of an event log as JSON.
    Stats {
        #[arg(long)]
        log: PathBuf,
        #[command(flatten)]
        columns: Columns,
    },
    /// Split a log temporally into training and test folds.
    Split {
        #[arg(long)]
        log: PathBuf,
        #[arg(long, default_value_t = 0.7)]
        ratio: f64,
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[command(flatten)]
        columns: Columns,
    },
    /// Search pipeline hyperparameters and write the best simulation model.
    Discover {
        #[arg(long)]
        log: PathBuf,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long, default_value_t = 5)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Search space JSON; defaults cover eta, epsilon, branching, conformance and pool threshold.
        #[arg(long)]
        search_space: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        history: Option<PathBuf>,
        #[command(flatten)]
        columns: Columns,
    },
    /// Simulate a model and write the generated log.
    Simulate {
        /// Simulation model JSON.
        model: PathBuf,
        #[arg(long)]
        cases: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// First arrival, ISO-8601.
        #[arg(long, default_value = "1970-01-01T00:00:00Z")]
        start: Timestamp,
        #[arg(long)]
        out: PathBuf,
        /// Also write the enablement/start/end audit trail as JSON lines.
        #[arg(long)]
        audit: Option<PathBuf>,
    },
    /// Compare a generated log with a ground-truth log.
    Evaluate {
        #[arg(long)]
        generated: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long, default_value_t = 100)]
        bins: usize,
        #[arg(long)]
        normalize_emd: bool,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        columns: Columns,
    },
    /// Run the full split, search, simulate and evaluate protocol.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Args)]
struct Columns {
    /// Input column names, e.g. `case=CaseID,activity=Task,start=Start,end=End,resource=`.
    #[arg(long, value_name = "MAPPING")]
    columns: Option<ColumnMapping>,
}

impl Columns {
    fn mapping(&self) -> ColumnMapping {
        self.columns.clone().unwrap_or_default()
    }
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// Experiment config JSON. Flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long)]
    split_ratio: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    generated_logs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    generators: Option<Vec<Generator>>,
    /// Directory of pre-generated CSV logs for the external generator.
    #[arg(long)]
    external_dir: Option<PathBuf>,
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long)]
    normalize_emd: bool,
    #[arg(long)]
    search_space: Option<PathBuf>,
    #[command(flatten)]
    columns: Columns,
    /// Report JSON.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    history: Option<PathBuf>,
}

fn read_search_space(path: Option<&Path>) -> Result<SearchSpace> {
    match path {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            SearchSpace::from_json(&text)
        }
        None => Ok(SearchSpace::default()),
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn to_json<T: serde::Serialize>(value: &T, what: &str) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::json(what, e))
}

fn experiment_config(args: &ExperimentArgs) -> Result<ExperimentConfig> {
    let mut config = match &args.config {
        Some(path) => {
            let mut config = ExperimentConfig::read_json(path)?;
            // Paths inside the file are relative to the file.
            let base = path.parent().unwrap_or(Path::new(""));
            if config.log.is_relative() && !config.log.as_os_str().is_empty() {
                config.log = base.join(&config.log);
            }
            if let Some(dir) = config.external_dir.as_mut().filter(|d| d.is_relative()) {
                *dir = base.join(&*dir);
            }
            config
        }
        None => ExperimentConfig::default(),
    };
    if let Some(log) = &args.log {
        config.log = log.clone();
    }
    if let Some(v) = args.split_ratio {
        config.split_ratio = v;
    }
    if let Some(v) = args.trials {
        config.trials = v;
    }
    if let Some(v) = args.runs {
        config.runs = v;
    }
    if let Some(v) = args.generated_logs {
        config.generated_logs = v;
    }
    if let Some(v) = args.seed {
        config.seed = v;
    }
    if let Some(v) = &args.generators {
        config.generators = v.clone();
    }
    if let Some(v) = &args.external_dir {
        config.external_dir = Some(v.clone());
    }
    if let Some(v) = args.bins {
        config.bins = v;
    }
    if args.normalize_emd {
        config.normalize_emd = true;
    }
    if let Some(path) = &args.search_space {
        config.search_space = read_search_space(Some(path))?;
    }
    if let Some(columns) = &args.columns.columns {
        config.columns = columns.clone();
    }
    if config.log.as_os_str().is_empty() {
        return Err(Error::Argument(
            "no input log given (--log or `log` in --config)".into(),
        ));
    }
    Ok(config)
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Stats { log, columns } => {
            let log = parse_csv(&log, &columns.mapping())?;
            println!("{}", to_json(&compute_statistics(&log)?, "statistics")?);
        }
        Command::Split {
            log,
            ratio,
            train,
            test,
            columns,
        } => {
            let log = parse_csv(&log, &columns.mapping())?;
            let (train_log, test_log) = temporal_split(&log, ratio)?;
            write_csv(&train_log, &train)?;
            write_csv(&test_log, &test)?;
            eprintln!(
                "train {} traces, test {} traces",
                train_log.len(),
                test_log.len()
            );
        }
        Command::Discover {
            log,
            trials,
            runs,
            seed,
            search_space,
            out,
            history,
            columns,
        } => {
            let log = parse_csv(&log, &columns.mapping())?;
            let space = read_search_space(search_space.as_deref())?;
            let config = OptimizeConfig {
                trials,
                runs,
                seed,
                ..OptimizeConfig::default()
            };
            let result = optimize_dds(&log, &space, &config)?;
            result.best.write_json(&out)?;
            if let Some(path) = history {
                write_history(&result.history, path)?;
            }
            let best = result.best_result();
            eprintln!(
                "best trial {} of {}: mean ELS {:.4}",
                best.trial,
                result.history.len(),
                best.mean_els.unwrap_or(f64::NAN)
            );
        }
        Command::Simulate {
            model,
            cases,
            seed,
            start,
            out,
            audit,
        } => {
            if cases == 0 {
                return Err(Error::Argument("--cases must be at least 1".into()));
            }
            let model = BpsModel::read_json(&model)?;
            let mut config = SimConfig::new(cases, seed, start);
            config.audit = audit.is_some();
            let run = simulate(&model, &config)?;
            write_csv(&run.log, &out)?;
            if let Some(path) = audit {
                run.write_audit(path)?;
            }
            for case in &run.aborted {
                log::warn!("case {} aborted: {}", case.case_id, case.reason);
            }
            eprintln!(
                "{} cases written, {} aborted",
                run.log.len(),
                run.aborted.len()
            );
        }
        Command::Evaluate {
            generated,
            truth,
            bins,
            normalize_emd,
            out,
            columns,
        } => {
            let mapping = columns.mapping();
            let generated = parse_csv(&generated, &mapping)?;
            let truth = parse_csv(&truth, &mapping)?;
            let options = EvaluateOptions {
                bins,
                normalize_emd,
                ..EvaluateOptions::default()
            };
            let report = evaluate(&generated, &truth, &options)?;
            let json = to_json(&report, "metric report")?;
            match out {
                Some(path) => write_text(&path, &json)?,
                None => println!("{json}"),
            }
            print!("{}", report.to_table());
        }
        Command::Experiment(args) => {
            let config = experiment_config(&args)?;
            let outcome = run_experiment(&config)?;
            write_text(&args.out, &outcome.report.to_json()?)?;
            if let Some(path) = &args.history {
                write_history(&outcome.history, path)?;
            }
            for generator in &outcome.report.generators {
                for warning in &generator.warnings {
                    log::warn!("{}: {warning}", generator.generator);
                }
                if let Some(error) = &generator.error {
                    log::error!("{error}");
                }
            }
            print!("{}", render_report(&outcome.report));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("DDS_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.kind() {
                ErrorKind::Usage => 1,
                ErrorKind::Data => 2,
                ErrorKind::Pipeline => 3,
            })
        }
    }
}

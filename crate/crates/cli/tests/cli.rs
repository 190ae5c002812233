use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dds_core::eventlog::{parse_csv, write_csv};
use dds_core::model::{BranchingProbabilities, NodeKind, ProcessModelBuilder};
use dds_core::params::{assemble_bps_model, DistributionSpec, Family, ResourcePool};
use dds_core::{ColumnMapping, Event, EventLog, Timestamp, Trace};
use serde_json::Value;

fn dds(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dds"))
        .args(args)
        .env("DDS_LOG", "error")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// `cases` traces A -> (B | C) -> D, one case every 20 minutes.
fn sample_log(dir: &Path, cases: usize) -> PathBuf {
    let traces = (0..cases)
        .map(|c| {
            let case = format!("c{c:03}");
            let mut t = c as i64 * 1_200_000;
            let middle = if c % 3 == 0 { "C" } else { "B" };
            let events = ["A", middle, "D"]
                .iter()
                .enumerate()
                .map(|(i, a)| {
                    let start = t + 30_000;
                    t = start + 60_000 * (i as i64 + 1) + (c as i64 * 7_919) % 50_000;
                    Event {
                        case_id: case.clone(),
                        activity: a.to_string(),
                        resource: Some(format!("clerk{}", (c + i) % 3)),
                        start: Timestamp::from_millis(start),
                        end: Timestamp::from_millis(t),
                    }
                })
                .collect();
            Trace::new(case, events).unwrap()
        })
        .collect();
    let path = dir.join("log.csv");
    write_csv(&EventLog::new(traces).unwrap(), &path).unwrap();
    path
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(code(&dds(&["--help"])), 0);
    assert_eq!(code(&dds(&["--version"])), 0);
    assert_eq!(code(&dds(&["frobnicate"])), 1);
    assert_eq!(code(&dds(&["stats"])), 1);
    assert_eq!(
        code(&dds(&["stats", "--log", "x.csv", "--columns", "bogus=1"])),
        1
    );
}

#[test]
fn data_errors() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.csv");
    assert_eq!(code(&dds(&["stats", "--log", s(&missing)])), 2);
    let bad = dir.path().join("bad.csv");
    fs::write(
        &bad,
        "case_id,activity,resource,start_timestamp,end_timestamp\n\
         c1,A,r,2024-01-01T10:00:00Z,2024-01-01T09:00:00Z\n",
    )
    .unwrap();
    let out = dds(&["stats", "--log", s(&bad)]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("c1"));
}

#[test]
fn stats_and_split() {
    let dir = tempfile::tempdir().unwrap();
    let log = sample_log(dir.path(), 40);
    let out = dds(&["stats", "--log", s(&log)]);
    assert_eq!(code(&out), 0);
    let stats: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(stats["num_traces"], 40);
    assert_eq!(stats["num_events"], 120);
    assert_eq!(stats["num_activities"], 4);

    let (train, test) = (dir.path().join("train.csv"), dir.path().join("test.csv"));
    let out = dds(&[
        "split",
        "--log",
        s(&log),
        "--train",
        s(&train),
        "--test",
        s(&test),
    ]);
    assert_eq!(code(&out), 0);
    let mapping = ColumnMapping::default();
    assert_eq!(parse_csv(&train, &mapping).unwrap().len(), 28);
    assert_eq!(parse_csv(&test, &mapping).unwrap().len(), 12);
}

#[test]
fn renamed_columns() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("renamed.csv");
    fs::write(
        &path,
        "Case,Task,Begin,Finish\n\
         1,A,2024-01-01T10:00:00Z,2024-01-01T10:01:00Z\n\
         1,B,2024-01-01T10:02:00Z,2024-01-01T10:05:00Z\n",
    )
    .unwrap();
    let out = dds(&[
        "stats",
        "--log",
        s(&path),
        "--columns",
        "case=Case,activity=Task,start=Begin,end=Finish,resource=",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let stats: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(stats["num_events"], 2);
    assert_eq!(stats["max_duration_secs"], 300.0);
}

#[test]
fn discover_simulate_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let log = sample_log(dir.path(), 40);
    let model = dir.path().join("model.json");
    let history = dir.path().join("history.json");
    let out = dds(&[
        "discover",
        "--log",
        s(&log),
        "--trials",
        "3",
        "--runs",
        "2",
        "--seed",
        "5",
        "--out",
        s(&model),
        "--history",
        s(&history),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let trials: Value = serde_json::from_str(&fs::read_to_string(&history).unwrap()).unwrap();
    let trials = trials.as_array().unwrap();
    assert_eq!(trials.len(), 3);
    let best = trials
        .iter()
        .filter_map(|t| t["mean_els"].as_f64())
        .fold(f64::MIN, f64::max);
    assert!(best > 0.0);
    let model_json: Value = serde_json::from_str(&fs::read_to_string(&model).unwrap()).unwrap();
    assert!(model_json["process_model"]["nodes"].is_array());

    let generated = dir.path().join("gen.csv");
    let again = dir.path().join("gen2.csv");
    let audit = dir.path().join("audit.jsonl");
    let sim = |out: &Path, audit: Option<&Path>| {
        let mut args = vec![
            "simulate",
            s(&model),
            "--cases",
            "12",
            "--seed",
            "9",
            "--start",
            "2024-03-01T08:00:00Z",
            "--out",
            s(out),
        ];
        if let Some(a) = audit {
            args.extend(["--audit", s(a)]);
        }
        dds(&args)
    };
    assert_eq!(code(&sim(&generated, Some(&audit))), 0);
    assert_eq!(code(&sim(&again, None)), 0);
    assert_eq!(fs::read(&generated).unwrap(), fs::read(&again).unwrap());
    let gen_log = parse_csv(&generated, &ColumnMapping::default()).unwrap();
    assert_eq!(gen_log.len(), 12);
    let records: Vec<Value> = fs::read_to_string(&audit)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(
        records.iter().filter(|r| r["kind"] == "start").count(),
        gen_log.num_events()
    );

    let out = dds(&["evaluate", "--generated", s(&log), "--truth", s(&log)]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let json_end = text.find("\n}").unwrap() + 2;
    let report: Value = serde_json::from_str(&text[..json_end]).unwrap();
    assert_eq!(report["els"], 1.0);
    assert_eq!(report["cfls"], 1.0);
    assert_eq!(report["cycle_time_mae"], 0.0);
    assert_eq!(report["emd"], 0.0);
    assert!(text[json_end..].contains("ELS"));

    let json = dir.path().join("metrics.json");
    let out = dds(&[
        "evaluate",
        "--generated",
        s(&generated),
        "--truth",
        s(&log),
        "--bins",
        "20",
        "--normalize-emd",
        "--out",
        s(&json),
    ]);
    assert_eq!(code(&out), 0);
    let report: Value = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    let els = report["els"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&els));
    assert!(report["emd"].as_f64().unwrap() <= 1.0);
}

#[test]
fn experiment_with_external_logs() {
    let dir = tempfile::tempdir().unwrap();
    let log = sample_log(dir.path(), 40);
    let external = dir.path().join("external");
    fs::create_dir(&external).unwrap();
    let (train, test) = (dir.path().join("train.csv"), dir.path().join("test.csv"));
    assert_eq!(
        code(&dds(&[
            "split",
            "--log",
            s(&log),
            "--train",
            s(&train),
            "--test",
            s(&test)
        ])),
        0
    );
    fs::copy(&test, external.join("a_copy.csv")).unwrap();
    fs::copy(&train, external.join("b_wrong_size.csv")).unwrap();

    let config = dir.path().join("experiment.json");
    fs::write(
        &config,
        r#"{"log": "log.csv", "trials": 50, "runs": 2, "generated_logs": 3,
            "generators": ["dds", "external"], "external_dir": "external", "seed": 4}"#,
    )
    .unwrap();
    let run = |out: &Path| {
        dds(&[
            "experiment",
            "--config",
            s(&config),
            "--trials",
            "2",
            "--out",
            s(out),
        ])
    };
    let (first, second) = (dir.path().join("r1.json"), dir.path().join("r2.json"));
    let a = run(&first);
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    let b = run(&second);
    assert_eq!(stdout(&a), stdout(&b));
    let table = stdout(&a);
    assert_eq!(table.lines().count(), 3);
    assert!(
        table.lines().any(|l| l.starts_with("* external")),
        "{table}"
    );

    let report: Value = serde_json::from_str(&fs::read_to_string(&first).unwrap()).unwrap();
    assert_eq!(report["test_traces"], 12);
    let generators = report["generators"].as_array().unwrap();
    let dds_row = &generators[0];
    assert_eq!(dds_row["generator"], "dds");
    let logs = dds_row["logs"].as_array().unwrap();
    assert_eq!(logs.len(), 3);
    let mean_els = logs
        .iter()
        .map(|l| l["metrics"]["els"].as_f64().unwrap())
        .sum::<f64>()
        / 3.0;
    assert!((dds_row["mean"]["els"].as_f64().unwrap() - mean_els).abs() < 1e-12);
    let external_row = &generators[1];
    assert_eq!(external_row["logs"].as_array().unwrap().len(), 1);
    assert_eq!(external_row["mean"]["els"], 1.0);
    assert_eq!(external_row["warnings"].as_array().unwrap().len(), 1);
    assert_eq!(report["provenance"]["seed"], 4);
}

#[test]
fn experiment_requires_a_log() {
    let dir = tempfile::tempdir().unwrap();
    let out = dds(&["experiment", "--out", s(&dir.path().join("r.json"))]);
    assert_eq!(code(&out), 1);
}

#[test]
fn simulation_failure_is_a_pipeline_error() {
    // Parallel branches merged by an exclusive join leave a token behind in every case.
    let mut b = ProcessModelBuilder::new();
    let (x, y) = (b.task("X"), b.task("Y"));
    let fork = b.gateway(NodeKind::AndSplit);
    let merge = b.gateway(NodeKind::XorJoin);
    b.chain(&[b.start(), fork, x, merge, b.end()]);
    b.chain(&[fork, y, merge]);
    let process_model = b.build().unwrap();
    let fixed = |v| DistributionSpec {
        family: Family::Fixed { value: v },
        fit_error: 0.0,
    };
    let model = assemble_bps_model(
        process_model,
        BranchingProbabilities::default(),
        fixed(60.0),
        [("X".into(), fixed(5.0)), ("Y".into(), fixed(5.0))].into(),
        vec![ResourcePool {
            id: "p".into(),
            resources: ["r".to_string()].into(),
        }],
        [("X".into(), "p".into()), ("Y".into(), "p".into())].into(),
        2,
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    model.write_json(&path).unwrap();
    let out = dds(&[
        "simulate",
        s(&path),
        "--cases",
        "5",
        "--out",
        s(&dir.path().join("g.csv")),
    ]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

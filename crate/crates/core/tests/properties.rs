mod common;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use common::{brute_force_assignment, emd_lp, exponential, random_log, two_gateway_model};
use dds_core::eventlog::{
    compute_statistics, discover_concurrency, parse_csv, temporal_split, write_csv, ColumnMapping,
    Event, EventLog, Timestamp, Trace,
};
use dds_core::metrics::{bptd, cf_distance, emd_1d, pair_by_cost, BptdWeights, TimeScale};
use dds_core::model::{
    compute_branching_probabilities, discover_model, enforce_conformance, replay_trace,
    BranchingMode, BranchingProbabilities, ConformanceMode, ProcessModelBuilder,
};
use dds_core::params::{
    assemble_bps_model, discover_resource_pools, fit_distribution, BpsModel, Family, ResourcePool,
    SYSTEM_POOL,
};
use dds_core::sim::{simulate, AuditKind, SimConfig};
use dds_core::Error;
use proptest::prelude::*;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

fn shifted(trace: &Trace, millis: i64) -> Trace {
    let events = trace
        .events()
        .iter()
        .map(|e| Event {
            start: e.start.plus_millis(millis),
            end: e.end.plus_millis(millis),
            ..e.clone()
        })
        .collect();
    Trace::new(trace.case_id(), events).unwrap()
}

fn sequential_bps(names: &[String]) -> BpsModel {
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let model = ProcessModelBuilder::sequence(&refs).unwrap();
    let durations = names
        .iter()
        .map(|n| (n.clone(), exponential(120.0)))
        .collect();
    let activity_pool = names
        .iter()
        .map(|n| (n.clone(), "staff".to_string()))
        .collect();
    let pool = ResourcePool {
        id: "staff".into(),
        resources: ["ann", "bob"].iter().map(|s| s.to_string()).collect(),
    };
    assemble_bps_model(
        model,
        BranchingProbabilities::default(),
        exponential(300.0),
        durations,
        vec![pool],
        activity_pool,
        names.len(),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(config(32))]

    #[test]
    fn csv_round_trip_is_idempotent(seed in any::<u64>(), traces in 1usize..30, len in 1usize..8) {
        let dir = tempfile::tempdir().unwrap();
        let log = random_log(seed, traces, 5, len);
        let first = dir.path().join("a.csv");
        write_csv(&log, &first).unwrap();
        let parsed = parse_csv(&first, &ColumnMapping::default()).unwrap();
        prop_assert_eq!(&parsed, &log);
        let second = dir.path().join("b.csv");
        write_csv(&parsed, &second).unwrap();
        prop_assert_eq!(parse_csv(&second, &ColumnMapping::default()).unwrap(), parsed);
        prop_assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
    }

    #[test]
    fn split_preserves_trace_multiset(seed in any::<u64>(), traces in 4usize..60, ratio in 0.3f64..0.9) {
        let log = random_log(seed, traces, 4, 6);
        let (train, test) = match temporal_split(&log, ratio) {
            Ok(folds) => folds,
            Err(Error::DegenerateSplit { .. }) => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        let mut joined: Vec<Trace> = train.traces().iter().chain(test.traces()).cloned().collect();
        let mut original = log.traces().to_vec();
        joined.sort_by(|a, b| a.case_id().cmp(b.case_id()));
        original.sort_by(|a, b| a.case_id().cmp(b.case_id()));
        prop_assert_eq!(joined, original);
        let last_train = train.traces().iter().filter_map(Trace::first_start).max().unwrap();
        let first_test = test.traces().iter().filter_map(Trace::first_start).min().unwrap();
        prop_assert!(last_train <= first_test);
    }

    #[test]
    fn concurrency_symmetric_and_order_free(seed in any::<u64>(), offsets in prop::collection::vec(-1_000_000_000i64..1_000_000_000, 40)) {
        let log = random_log(seed, 40, 4, 6);
        let conc = discover_concurrency(&log);
        for (a, b) in conc.pairs() {
            prop_assert!(conc.contains(b, a));
        }
        let moved: Vec<Trace> = log
            .traces()
            .iter()
            .zip(&offsets)
            .map(|(t, &o)| shifted(t, o))
            .collect();
        let reordered = EventLog::new(moved).unwrap();
        let mut before: Vec<(String, String)> = conc.pairs().map(|(a, b)| (a.into(), b.into())).collect();
        let mut after: Vec<(String, String)> = discover_concurrency(&reordered)
            .pairs()
            .map(|(a, b)| (a.into(), b.into()))
            .collect();
        before.sort();
        after.sort();
        prop_assert_eq!(before, after);
    }

    #[test]
    fn event_count_is_sum_of_lengths(seed in any::<u64>(), traces in 1usize..50, len in 1usize..10) {
        let log = random_log(seed, traces, 6, len);
        let stats = compute_statistics(&log).unwrap();
        prop_assert_eq!(stats.num_events, log.traces().iter().map(Trace::len).sum::<usize>());
        prop_assert_eq!(stats.num_traces, traces);
    }

    #[test]
    fn branching_is_a_distribution(seed in any::<u64>(), eta in 0.0f64..1.0, epsilon in 0.0f64..1.0) {
        let log = random_log(seed, 40, 5, 6);
        let model = discover_model(&log, eta, epsilon).unwrap();
        for mode in [BranchingMode::Equiprobable, BranchingMode::Replay] {
            let branching = compute_branching_probabilities(&model, &log, mode);
            prop_assert!(branching.validate(&model).is_ok());
            for split in &branching.splits {
                let total: f64 = split.branches.iter().map(|b| b.probability).sum();
                prop_assert!((total - 1.0).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn conformance_output_fits(seed in any::<u64>(), eta in 0.0f64..1.0, epsilon in 0.0f64..1.0, replace in any::<bool>()) {
        let log = random_log(seed, 30, 4, 5);
        let model = discover_model(&log, eta, epsilon).unwrap();
        let mode = if replace { ConformanceMode::Replace } else { ConformanceMode::Remove };
        match enforce_conformance(&model, &log, mode) {
            Ok(out) => {
                for trace in out.traces() {
                    prop_assert!(replay_trace(&model, trace).fits, "{:?}", trace.activities().collect::<Vec<_>>());
                }
                if replace {
                    prop_assert_eq!(out.len(), log.len());
                }
            }
            Err(Error::AllNonConformant) => {}
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        }
    }

    #[test]
    fn sequential_model_is_rediscovered(len in 1usize..7, seed in any::<u64>(), eta in 0.0f64..1.0, epsilon in 0.0f64..1.0) {
        let names: Vec<String> = (0..len).map(|i| format!("step{i}")).collect();
        let bps = sequential_bps(&names);
        let log = simulate(&bps, &SimConfig::new(60, seed, Timestamp::from_millis(0))).unwrap().log;
        let model = discover_model(&log, eta, epsilon).unwrap();
        for trace in log.traces() {
            prop_assert!(replay_trace(&model, trace).fits);
        }
    }

    #[test]
    fn bps_model_json_round_trip(p in 0.0f64..=1.0, mean in 1e-3f64..1e6) {
        let mut model = two_gateway_model(p);
        model.interarrival = exponential(mean);
        let text = model.to_json().unwrap();
        let back = BpsModel::from_json(&text).unwrap();
        prop_assert_eq!(&back, &model);
        prop_assert_eq!(back.to_json().unwrap(), text);
    }

    #[test]
    fn fixed_fit_scales(value in 0.0f64..1e5, scale in 1e-3f64..1e3, n in 1usize..200) {
        let base = fit_distribution(&vec![value; n]).unwrap();
        let scaled = fit_distribution(&vec![value * scale; n]).unwrap();
        prop_assert!(matches!(base.family, Family::Fixed { .. }), "not fixed");
        match scaled.family {
            Family::Fixed { value: v } => prop_assert!((v - value * scale).abs() <= 1e-9 * (1.0 + v.abs())),
            other => return Err(TestCaseError::fail(format!("{other:?}"))),
        }
    }

    #[test]
    fn pools_partition_resources(seed in any::<u64>(), threshold in 0.0f64..=1.0, drop_every in 0usize..5) {
        let log = random_log(seed, 30, 5, 6);
        let events: Vec<Event> = log
            .events()
            .enumerate()
            .map(|(i, e)| Event {
                resource: if drop_every > 0 && i % (drop_every + 2) == 0 { None } else { e.resource.clone() },
                ..e.clone()
            })
            .collect();
        let log = EventLog::from_events(events).unwrap();
        let assignment = discover_resource_pools(&log, threshold).unwrap();
        let mut seen = BTreeSet::new();
        for pool in &assignment.pools {
            prop_assert!(!pool.resources.is_empty());
            for r in &pool.resources {
                prop_assert!(seen.insert(r.clone()), "{} in two pools", r);
            }
        }
        let mut expected = log.resource_alphabet().clone();
        if log.events().any(|e| e.resource.is_none()) {
            expected.insert(SYSTEM_POOL.to_string());
        }
        prop_assert_eq!(seen, expected);
        for activity in log.activity_alphabet() {
            let pool = &assignment.activity_pool[activity];
            prop_assert!(assignment.pools.iter().any(|p| &p.id == pool));
        }
    }
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn trace_distances_are_symmetric(seed in any::<u64>(), i in 0usize..20, j in 0usize..20) {
        let log = random_log(seed, 20, 4, 7);
        let conc = discover_concurrency(&log);
        let scale = TimeScale::from_logs(&[&log]);
        let weights = BptdWeights::default();
        let (a, b) = (&log.traces()[i], &log.traces()[j]);
        let la: Vec<&str> = a.activities().collect();
        let lb: Vec<&str> = b.activities().collect();
        let d = cf_distance(&la, &lb, &conc);
        prop_assert!((d - cf_distance(&lb, &la, &conc)).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert_eq!(cf_distance(&la, &la, &conc), 0.0);
        let t = bptd(a, b, &conc, &scale, &weights);
        prop_assert!((t - bptd(b, a, &conc, &scale, &weights)).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&t));
        prop_assert_eq!(bptd(a, a, &conc, &scale, &weights), 0.0);
    }

    #[test]
    fn hungarian_matches_enumeration(costs in (1usize..=7, 1usize..=7).prop_flat_map(|(r, c)| {
        prop::collection::vec(prop::collection::vec(0.0f64..100.0, c), r)
    })) {
        let idx: Vec<usize> = (0..costs[0].len()).collect();
        let rows: Vec<usize> = (0..costs.len()).collect();
        let pairing = pair_by_cost(&rows, &idx, |&g, &t| costs[g][t]);
        prop_assert_eq!(pairing.pairs.len(), rows.len().min(idx.len()));
        let gens: BTreeSet<usize> = pairing.pairs.iter().map(|p| p.generated).collect();
        let truths: BTreeSet<usize> = pairing.pairs.iter().map(|p| p.truth).collect();
        prop_assert_eq!(gens.len(), pairing.pairs.len());
        prop_assert_eq!(truths.len(), pairing.pairs.len());
        prop_assert_eq!(pairing.unmatched_generated.len() + gens.len(), rows.len());
        prop_assert_eq!(pairing.unmatched_truth.len() + truths.len(), idx.len());
        prop_assert!((pairing.total_cost() - brute_force_assignment(&costs)).abs() < 1e-9);
    }

    #[test]
    fn emd_matches_transport_lp(masses in (1usize..=10).prop_flat_map(|n| {
        (prop::collection::vec(0.01f64..1.0, n), prop::collection::vec(0.01f64..1.0, n))
    })) {
        let norm = |v: &[f64]| {
            let s: f64 = v.iter().sum();
            v.iter().map(|x| x / s).collect::<Vec<_>>()
        };
        let (a, b) = (norm(&masses.0), norm(&masses.1));
        prop_assert!((emd_1d(&a, &b) - emd_lp(&a, &b)).abs() < 1e-6);
        prop_assert!((emd_1d(&a, &b) - emd_1d(&b, &a)).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(config(12))]

    #[test]
    fn simulation_invariants(p in 0.0f64..=1.0, seed in any::<u64>(), start in 0i64..4_000_000_000_000) {
        let model = two_gateway_model(p);
        let mut cfg = SimConfig::new(300, seed, Timestamp::from_millis(start));
        cfg.audit = true;
        let run = simulate(&model, &cfg).unwrap();
        prop_assert!(run.aborted.is_empty());
        prop_assert_eq!(run.log.len(), 300);

        for trace in run.log.traces() {
            prop_assert!(replay_trace(&model.process_model, trace).fits);
        }

        let mut by_resource: BTreeMap<&str, Vec<(Timestamp, Timestamp)>> = BTreeMap::new();
        for e in run.log.events() {
            prop_assert!(e.end >= e.start);
            by_resource.entry(e.resource.as_deref().unwrap()).or_default().push((e.start, e.end));
        }
        for spans in by_resource.values_mut() {
            spans.sort();
            for w in spans.windows(2) {
                prop_assert!(w[0].1 <= w[1].0, "overlap {:?}", w);
            }
        }

        let mut arrival: BTreeMap<&str, Timestamp> = BTreeMap::new();
        let mut enabled: HashMap<(&str, usize), Timestamp> = HashMap::new();
        let mut started: Vec<(&str, Timestamp, Timestamp)> = Vec::new();
        let mut busy: BTreeMap<&str, Vec<(Timestamp, Timestamp)>> = BTreeMap::new();
        let mut open: HashMap<(&str, usize), Timestamp> = HashMap::new();
        for r in &run.audit {
            let key = (r.case_id.as_str(), r.instance);
            match r.kind {
                AuditKind::Enable => {
                    enabled.insert(key, r.time);
                    let first = arrival.entry(&r.case_id).or_insert(r.time);
                    *first = (*first).min(r.time);
                }
                AuditKind::Start => {
                    started.push((r.pool.as_str(), enabled[&key], r.time));
                    open.insert(key, r.time);
                }
                AuditKind::End => {
                    let s = open.remove(&key).unwrap();
                    busy.entry(r.resource.as_deref().unwrap()).or_default().push((s, r.time));
                }
            }
        }
        prop_assert!(open.is_empty());
        let arrivals: Vec<Timestamp> = arrival.values().copied().collect();
        prop_assert_eq!(arrivals[0], Timestamp::from_millis(start));
        prop_assert!(arrivals.windows(2).all(|w| w[0] <= w[1]));

        // A resource covers [from, to) when its busy spans leave no gap there.
        let covers = |spans: &[(Timestamp, Timestamp)], from: Timestamp, to: Timestamp| {
            let mut reach = from;
            for &(s, e) in spans {
                if s <= reach && e > reach {
                    reach = e;
                }
                if reach >= to {
                    return true;
                }
            }
            reach >= to
        };
        for spans in busy.values_mut() {
            spans.sort();
        }
        let mut waited = 0;
        for (pool, enable, start) in started {
            if start > enable {
                waited += 1;
                let members = &model.pool(pool).unwrap().resources;
                for m in members {
                    let spans = busy.get(m.as_str()).map(Vec::as_slice).unwrap_or(&[]);
                    prop_assert!(covers(spans, enable, start), "{} idle while work waited", m);
                }
            }
        }

        prop_assert!(waited > 0);

        let again = simulate(&model, &cfg).unwrap();
        prop_assert_eq!(&again.log, &run.log);
        prop_assert_eq!(again.audit, run.audit);
    }
}

//! Fixtures for the benchmarks in `benches/`.

use dds_core::model::{
    Branch, BranchingProbabilities, NodeKind, ProcessModelBuilder, SplitBranches,
};
use dds_core::params::{assemble_bps_model, BpsModel, DistributionSpec, Family, ResourcePool};
use dds_core::{simulate, EventLog, SimConfig, Timestamp};

fn exponential(mean: f64) -> DistributionSpec {
    DistributionSpec {
        family: Family::Exponential { mean },
        fit_error: 0.0,
    }
}

/// start -> A -> xor(B 0.3 | C 0.7) -> and(D, E) -> end, with two pools of two.
pub fn two_gateway_model() -> BpsModel {
    let mut b = ProcessModelBuilder::new();
    let a = b.task("A");
    let split = b.gateway(NodeKind::XorSplit);
    let (tb, tc) = (b.task("B"), b.task("C"));
    let merge = b.gateway(NodeKind::XorJoin);
    let fork = b.gateway(NodeKind::AndSplit);
    let (td, te) = (b.task("D"), b.task("E"));
    let sync = b.gateway(NodeKind::AndJoin);
    let (start, end) = (b.start(), b.end());
    b.chain(&[start, a, split]);
    let to_b = b.edge(split, tb);
    let to_c = b.edge(split, tc);
    b.chain(&[tb, merge]);
    b.chain(&[tc, merge, fork, td, sync]);
    b.chain(&[fork, te, sync, end]);
    let branching = BranchingProbabilities {
        splits: vec![SplitBranches {
            node: split,
            branches: vec![
                Branch {
                    edge: to_b,
                    probability: 0.3,
                },
                Branch {
                    edge: to_c,
                    probability: 0.7,
                },
            ],
        }],
        fallback: vec![],
    };
    let durations = [
        ("A", 300.0),
        ("B", 600.0),
        ("C", 200.0),
        ("D", 400.0),
        ("E", 250.0),
    ]
    .iter()
    .map(|(a, m)| (a.to_string(), exponential(*m)))
    .collect();
    let pool = |id: &str, names: &[&str]| ResourcePool {
        id: id.into(),
        resources: names.iter().map(|n| n.to_string()).collect(),
    };
    let activity_pool = [
        ("A", "front"),
        ("B", "front"),
        ("C", "front"),
        ("D", "back"),
        ("E", "back"),
    ]
    .iter()
    .map(|(a, p)| (a.to_string(), p.to_string()))
    .collect();
    assemble_bps_model(
        b.build().expect("valid model"),
        branching,
        exponential(600.0),
        durations,
        vec![pool("front", &["r1", "r2"]), pool("back", &["r3", "r4"])],
        activity_pool,
        4,
    )
    .expect("consistent model")
}

/// A simulated log of `cases` traces from [`two_gateway_model`].
pub fn synthetic_log(cases: usize, seed: u64) -> EventLog {
    simulate(
        &two_gateway_model(),
        &SimConfig::new(cases, seed, Timestamp::from_millis(1_700_000_000_000)),
    )
    .expect("simulation succeeds")
    .log
}

//! Discrete-event execution of a [`BpsModel`] with eager resources.
//!
//! Time advances in whole milliseconds. Every case draws from its own
//! ChaCha8 stream (stream index = case number) and arrivals from stream 0,
//! so a run is fully determined by the model and the seed.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, VecDeque};
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eventlog::{Event, EventLog, Timestamp, Trace};
use crate::model::{EdgeId, NodeId, NodeKind};
use crate::params::{BpsModel, DistributionSpec};

/// Fraction of aborted cases above which a run fails.
pub const MAX_ABORT_FRACTION: f64 = 0.1;

const MAX_RESAMPLES: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub num_cases: usize,
    pub seed: u64,
    pub start_instant: Timestamp,
    /// Keep the per-instance audit trail.
    #[serde(default)]
    pub audit: bool,
}

impl SimConfig {
    pub fn new(num_cases: usize, seed: u64, start_instant: Timestamp) -> Self {
        SimConfig {
            num_cases,
            seed,
            start_instant,
            audit: false,
        }
    }
}

/// Draw from `spec` in seconds. Negative draws are redrawn, then clamped to 0.
pub fn sample<R: Rng + ?Sized>(spec: &DistributionSpec, rng: &mut R) -> f64 {
    for _ in 0..MAX_RESAMPLES {
        let x = spec.family.draw(rng);
        if x >= 0.0 {
            return x;
        }
    }
    0.0
}

fn sample_millis<R: Rng + ?Sized>(spec: &DistributionSpec, rng: &mut R) -> i64 {
    let ms = (sample(spec, rng) * 1000.0).round();
    if ms.is_finite() {
        ms.min(i64::MAX as f64 / 4.0) as i64
    } else {
        0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditKind {
    Enable,
    Start,
    End,
}

/// One step in the life of an activity instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub kind: AuditKind,
    pub time: Timestamp,
    pub case_id: String,
    pub instance: usize,
    pub activity: String,
    pub node: NodeId,
    pub pool: String,
    pub resource: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbortedCase {
    pub case_id: String,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub log: EventLog,
    pub aborted: Vec<AbortedCase>,
    /// Empty unless auditing was requested.
    pub audit: Vec<AuditRecord>,
}

impl Simulation {
    pub fn write_audit(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = std::io::BufWriter::new(file);
        for record in &self.audit {
            serde_json::to_writer(&mut out, record).map_err(|e| Error::json("audit record", e))?;
            out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }
}

// Same-instant ordering: completions, then arrivals, then dispatching.
const END: u8 = 0;
const ARRIVAL: u8 = 1;
const DISPATCH: u8 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Key {
    time: i64,
    kind: u8,
    case: usize,
    node: usize,
    seq: u64,
}

#[derive(Debug, Clone, Copy)]
enum Payload {
    Arrival,
    End {
        resource: usize,
        event: usize,
        instance: usize,
    },
    Dispatch,
}

struct Pending {
    case: usize,
    node: NodeId,
    instance: usize,
}

struct Pool {
    id: String,
    names: Vec<String>,
    free: BTreeSet<usize>,
    queue: VecDeque<Pending>,
    dispatch_pending: bool,
}

struct Case {
    id: String,
    rng: ChaCha8Rng,
    marking: Vec<u32>,
    events: Vec<Event>,
    active: usize,
    enabled: usize,
    done: bool,
    aborted: Option<String>,
}

struct Engine<'m> {
    model: &'m BpsModel,
    origin: i64,
    now: i64,
    seq: u64,
    heap: BinaryHeap<Reverse<(Key, usize)>>,
    payloads: Vec<Payload>,
    pools: Vec<Pool>,
    task_pool: Vec<usize>,
    cases: Vec<Case>,
    audit: Option<Vec<AuditRecord>>,
    width: usize,
    seed: u64,
}

impl<'m> Engine<'m> {
    fn new(model: &'m BpsModel, config: &SimConfig) -> Result<Self> {
        let pools: Vec<Pool> = model
            .pools
            .iter()
            .map(|p| Pool {
                id: p.id.clone(),
                names: p.resources.iter().cloned().collect(),
                free: (0..p.resources.len()).collect(),
                queue: VecDeque::new(),
                dispatch_pending: false,
            })
            .collect();
        let pm = &model.process_model;
        let mut task_pool = vec![usize::MAX; pm.nodes().len()];
        for node in pm.tasks() {
            let label = node.label.as_deref().unwrap_or_default();
            let pool_id = model
                .activity_pool
                .get(label)
                .ok_or_else(|| Error::Assembly(format!("`{label}` has no pool")))?;
            task_pool[node.id.0] = pools
                .iter()
                .position(|p| &p.id == pool_id)
                .ok_or_else(|| Error::Assembly(format!("unknown pool `{pool_id}`")))?;
        }
        Ok(Engine {
            model,
            origin: config.start_instant.millis(),
            now: 0,
            seq: 0,
            heap: BinaryHeap::new(),
            payloads: Vec::new(),
            pools,
            task_pool,
            cases: Vec::with_capacity(config.num_cases),
            audit: config.audit.then(Vec::new),
            width: config.num_cases.to_string().len(),
            seed: config.seed,
        })
    }

    fn schedule(&mut self, time: i64, kind: u8, case: usize, node: usize, payload: Payload) {
        self.seq += 1;
        let key = Key {
            time,
            kind,
            case,
            node,
            seq: self.seq,
        };
        self.payloads.push(payload);
        self.heap.push(Reverse((key, self.payloads.len() - 1)));
    }

    fn stamp(&self, t: i64) -> Timestamp {
        Timestamp::from_millis(self.origin + t)
    }

    fn record(
        &mut self,
        kind: AuditKind,
        case: usize,
        node: NodeId,
        instance: usize,
        resource: Option<String>,
    ) {
        if self.audit.is_none() {
            return;
        }
        let record = AuditRecord {
            kind,
            time: self.stamp(self.now),
            case_id: self.cases[case].id.clone(),
            instance,
            activity: self.label(node).to_string(),
            node,
            pool: self.pools[self.task_pool[node.0]].id.clone(),
            resource,
        };
        self.audit.as_mut().expect("checked").push(record);
    }

    fn label(&self, node: NodeId) -> &'m str {
        let model: &'m BpsModel = self.model;
        model
            .process_model
            .node(node)
            .label
            .as_deref()
            .unwrap_or_default()
    }

    fn abort(&mut self, case: usize, reason: String) {
        if self.cases[case].aborted.is_none() {
            self.cases[case].aborted = Some(reason);
        }
    }

    fn arrive(&mut self, case: usize) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(case as u64 + 1);
        let edges = self.model.process_model.edges().len();
        self.cases.push(Case {
            id: format!("{:0width$}", case + 1, width = self.width),
            rng,
            marking: vec![0; edges],
            events: Vec::new(),
            active: 0,
            enabled: 0,
            done: false,
            aborted: None,
        });
        let model: &'m BpsModel = self.model;
        let pm = &model.process_model;
        let first = pm.outgoing(pm.start())[0];
        self.propagate(case, first);
    }

    fn choose_branch(&mut self, case: usize, split: NodeId) -> EdgeId {
        let model: &'m BpsModel = self.model;
        let pm = &model.process_model;
        let u: f64 = self.cases[case].rng.random();
        match self.model.branching.get(split) {
            Some(entry) => {
                let mut acc = 0.0;
                for b in &entry.branches {
                    acc += b.probability;
                    if u < acc {
                        return b.edge;
                    }
                }
                entry
                    .branches
                    .iter()
                    .rev()
                    .find(|b| b.probability > 0.0)
                    .map_or(pm.outgoing(split)[0], |b| b.edge)
            }
            None => {
                let outs = pm.outgoing(split);
                outs[((u * outs.len() as f64) as usize).min(outs.len() - 1)]
            }
        }
    }

    /// Moves a fresh token along `edge` through gateways until it reaches tasks,
    /// a waiting join, or the end event.
    fn propagate(&mut self, case: usize, edge: EdgeId) {
        let model: &'m BpsModel = self.model;
        let pm = &model.process_model;
        let mut work = vec![edge];
        while let Some(edge) = work.pop() {
            if self.cases[case].aborted.is_some() {
                return;
            }
            if self.cases[case].done {
                self.abort(case, "token produced after reaching the end".into());
                return;
            }
            let target = pm.edge(edge).target;
            match pm.node(target).kind {
                NodeKind::Task => self.enable(case, target),
                NodeKind::XorSplit => work.push(self.choose_branch(case, target)),
                NodeKind::AndSplit => work.extend(pm.outgoing(target).iter().rev()),
                NodeKind::XorJoin => work.push(pm.outgoing(target)[0]),
                NodeKind::AndJoin => {
                    let c = &mut self.cases[case];
                    c.marking[edge.0] += 1;
                    let ins = pm.incoming(target);
                    if ins.iter().all(|e| c.marking[e.0] > 0) {
                        ins.iter().for_each(|e| c.marking[e.0] -= 1);
                        work.push(pm.outgoing(target)[0]);
                    }
                }
                NodeKind::End => {
                    let c = &mut self.cases[case];
                    c.done = true;
                    if c.active > 0 || !work.is_empty() || c.marking.iter().any(|&m| m > 0) {
                        self.abort(case, "case ended with work outstanding".into());
                    }
                }
                NodeKind::Start => unreachable!("start event has no incoming edges"),
            }
        }
        let c = &self.cases[case];
        if !c.done && c.active == 0 && c.aborted.is_none() {
            self.abort(case, "deadlocked at a parallel join".into());
        }
    }

    fn enable(&mut self, case: usize, node: NodeId) {
        let cap = self.model.loop_cap();
        let c = &mut self.cases[case];
        c.enabled += 1;
        if c.enabled > cap {
            self.abort(case, format!("exceeded {cap} activity instances"));
            return;
        }
        c.active += 1;
        let instance = c.enabled - 1;
        let pool = self.task_pool[node.0];
        self.pools[pool].queue.push_back(Pending {
            case,
            node,
            instance,
        });
        self.record(AuditKind::Enable, case, node, instance, None);
        self.request_dispatch(pool);
    }

    fn request_dispatch(&mut self, pool: usize) {
        if !self.pools[pool].dispatch_pending {
            self.pools[pool].dispatch_pending = true;
            self.schedule(self.now, DISPATCH, 0, pool, Payload::Dispatch);
        }
    }

    fn dispatch(&mut self, pool: usize) {
        self.pools[pool].dispatch_pending = false;
        while let Some(&resource) = self.pools[pool].free.first() {
            let Some(pending) = self.pools[pool].queue.pop_front() else {
                break;
            };
            let case = pending.case;
            if self.cases[case].aborted.is_some() {
                self.cases[case].active -= 1;
                continue;
            }
            self.pools[pool].free.remove(&resource);
            let label = self.label(pending.node);
            let spec = &self.model.activity_durations[label];
            let duration = sample_millis(spec, &mut self.cases[case].rng);
            let name = self.pools[pool].names[resource].clone();
            let start = self.stamp(self.now);
            let c = &mut self.cases[case];
            c.events.push(Event {
                case_id: c.id.clone(),
                activity: label.to_string(),
                resource: Some(name.clone()),
                start,
                end: start,
            });
            let event = c.events.len() - 1;
            self.record(
                AuditKind::Start,
                case,
                pending.node,
                pending.instance,
                Some(name),
            );
            self.schedule(
                self.now + duration,
                END,
                case,
                pending.node.0,
                Payload::End {
                    resource,
                    event,
                    instance: pending.instance,
                },
            );
        }
    }

    fn complete(
        &mut self,
        case: usize,
        node: NodeId,
        resource: usize,
        event: usize,
        instance: usize,
    ) {
        let pool = self.task_pool[node.0];
        self.pools[pool].free.insert(resource);
        self.request_dispatch(pool);
        let end = self.stamp(self.now);
        let c = &mut self.cases[case];
        c.events[event].end = end;
        c.active -= 1;
        let name = self.pools[pool].names[resource].clone();
        self.record(AuditKind::End, case, node, instance, Some(name));
        if self.cases[case].aborted.is_none() {
            let next = self.model.process_model.outgoing(node)[0];
            self.propagate(case, next);
        }
    }

    fn run(mut self, num_cases: usize, arrivals: &mut ChaCha8Rng) -> Simulation {
        self.schedule(0, ARRIVAL, 0, 0, Payload::Arrival);
        while let Some(Reverse((key, slot))) = self.heap.pop() {
            self.now = key.time;
            match self.payloads[slot] {
                Payload::Arrival => {
                    self.arrive(key.case);
                    if key.case + 1 < num_cases {
                        let gap = sample_millis(&self.model.interarrival, arrivals);
                        self.schedule(self.now + gap, ARRIVAL, key.case + 1, 0, Payload::Arrival);
                    }
                }
                Payload::End {
                    resource,
                    event,
                    instance,
                } => self.complete(key.case, NodeId(key.node), resource, event, instance),
                Payload::Dispatch => self.dispatch(key.node),
            }
        }

        let mut traces = Vec::with_capacity(self.cases.len());
        let mut aborted = Vec::new();
        for case in self.cases {
            match case.aborted {
                Some(reason) => {
                    log::warn!("simulated case {} aborted: {reason}", case.id);
                    aborted.push(AbortedCase {
                        case_id: case.id,
                        reason,
                    });
                }
                None => traces.push(
                    Trace::new(case.id, case.events).expect("simulated events are well formed"),
                ),
            }
        }
        Simulation {
            log: EventLog::from_valid_traces(traces),
            aborted,
            audit: self.audit.unwrap_or_default(),
        }
    }
}

/// Generates `config.num_cases` cases. Cases that exceed the loop cap or get
/// stuck are dropped and reported; more than [`MAX_ABORT_FRACTION`] of them
/// fails the run.
pub fn simulate(model: &BpsModel, config: &SimConfig) -> Result<Simulation> {
    if config.num_cases == 0 {
        return Err(Error::Argument("number of cases must be at least 1".into()));
    }
    model.validate()?;
    let mut arrivals = ChaCha8Rng::seed_from_u64(config.seed);
    arrivals.set_stream(0);
    let result = Engine::new(model, config)?.run(config.num_cases, &mut arrivals);
    if result.aborted.len() as f64 > MAX_ABORT_FRACTION * config.num_cases as f64 {
        return Err(Error::Simulation {
            aborted: result.aborted.len(),
            cases: config.num_cases,
        });
    }
    Ok(result)
}

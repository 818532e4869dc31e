//! Cycle-counting simulator of the accelerator partition.
//!
//! Actors communicate through first-word-fall-through queues exposing count,
//! free space, and head without consumption. A per-actor *trigger* invokes
//! its controller; within one invocation the controller never revisits a
//! state, so invocations are bounded and can run "as far as possible".
//! Boundary traffic enters through input stages (burst-copying staged batches
//! into a queue) and leaves through output stages (draining a queue into an
//! unbounded host buffer).
//!
//! Idleness detection is a two-phase protocol over trigger phases AT
//! (asynchronous triggering), ST (synchronous triggering), and ID (idle):
//! when every trigger observed WAIT from its last invocation and nothing is
//! in flight, asynchronous invocation stops (barrier), every trigger
//! re-invokes its unit exactly once, and the network is declared idle iff all
//! ST invocations return WAIT and no queue count changed across the check;
//! any EXEC or count change resumes AT. Liveness: once the network is truly
//! quiescent, idleness is declared within `PROTOCOL_SLACK + max invocation
//! cost` cycles per trigger, i.e. within `K * |triggers|` cycles with
//! `K = max_invocation_cost + PROTOCOL_SLACK`.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::am::{ActorMachine, Instruction};
use crate::eval::{
    eval_guard, exec_transition, init_actor_state, ActorIo, ActorState, EvalCtx, EvalFault,
    HostTable, Value,
};
use crate::graph::NetworkGraph;
use crate::reference::{basic_select, EvalCounter, Selection};
use crate::xcf::PartitionPlan;

/// Cycles of protocol overhead per trigger beyond invocation latency.
pub const PROTOCOL_SLACK: u64 = 3;

pub const DEFAULT_QUEUE_DEPTH: usize = 4096;
pub const DEFAULT_CYCLE_CAP: u64 = 10_000_000;

/// First-word-fall-through queue: head, count, and free space are readable
/// without consuming; the first token written is immediately visible.
#[derive(Clone, Debug)]
pub struct FwftQueue {
    buf: VecDeque<i64>,
    cap: usize,
    pushed_total: u64,
    trace: Option<Vec<i64>>,
}

impl FwftQueue {
    pub fn new(cap: usize) -> Self {
        FwftQueue {
            buf: VecDeque::with_capacity(cap.min(1 << 16)),
            cap,
            pushed_total: 0,
            trace: None,
        }
    }

    pub fn set_tracing(&mut self, on: bool) {
        self.trace = if on { Some(Vec::new()) } else { None };
    }

    pub fn pushed_total(&self) -> u64 {
        self.pushed_total
    }

    pub fn trace(&self) -> Option<&[i64]> {
        self.trace.as_deref()
    }

    pub fn count(&self) -> usize {
        self.buf.len()
    }

    /// Free slots: capacity minus count.
    pub fn size(&self) -> usize {
        self.cap - self.buf.len()
    }

    pub fn head(&self) -> Option<i64> {
        self.buf.front().copied()
    }

    pub fn peek(&self, offset: usize) -> i64 {
        self.buf[offset]
    }

    pub fn push(&mut self, v: i64) {
        debug_assert!(self.size() > 0, "fwft overflow");
        self.buf.push_back(v);
        self.pushed_total += 1;
        if let Some(t) = &mut self.trace {
            t.push(v);
        }
    }

    pub fn pop(&mut self) -> i64 {
        self.buf.pop_front().expect("fwft underflow")
    }
}

/// Per-action cycle costs. EXEC of an action costs the table entry when
/// present, else `1 + weight` from its `@weight` annotation (default 1).
/// TEST steps are scheduled within an invocation's first cycle and cost 0.
#[derive(Clone, Debug, Default)]
pub struct CostTable {
    pub per_action: HashMap<String, u64>,
}

impl CostTable {
    pub fn exec_cost(&self, instance: &str, actor: &str, action: &str, weight: u64) -> u64 {
        if let Some(&c) = self.per_action.get(&format!("{instance}.{action}")) {
            return c;
        }
        if let Some(&c) = self.per_action.get(&format!("{actor}.{action}")) {
            return c;
        }
        1 + weight
    }

    /// Text form: one `name.action = cycles` entry per line; `#` comments.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut per_action = HashMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (name, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected `name.action = cycles`", lineno + 1))?;
            let cycles: u64 = value
                .trim()
                .parse()
                .map_err(|_| format!("line {}: bad cycle count", lineno + 1))?;
            per_action.insert(name.trim().to_string(), cycles);
        }
        Ok(CostTable { per_action })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TriggerPhase {
    /// Asynchronous triggering: invoke whenever the unit is not busy.
    Asynchronous,
    /// Synchronous check invocation.
    Synchronous,
    /// Disabled: network declared idle.
    Idle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReturnCode {
    Exec,
    Wait,
}

#[derive(Clone, Debug)]
pub struct Trigger {
    pub phase: TriggerPhase,
    pub last_return: ReturnCode,
    busy_until: u64,
}

impl Trigger {
    fn new() -> Self {
        Trigger {
            phase: TriggerPhase::Asynchronous,
            // force one invocation before the first idleness check
            last_return: ReturnCode::Exec,
            busy_until: 0,
        }
    }
}

/// Outcome of one hardware controller invocation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Invocation {
    pub last_return: ReturnCode,
    pub instructions: u64,
    pub execs: u64,
    pub cost: u64,
}

/// Statistics of one `run_until_idle` call.
#[derive(Clone, Copy, Debug, Default)]
pub struct KernelRunStats {
    pub cycles: u64,
    pub declared_idle_at: u64,
    pub last_exec_cycle: u64,
    pub max_invocation_cost: u64,
    pub execs: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize, Default)]
pub struct ActorCycleStats {
    pub min: u64,
    pub max: u64,
    pub avg: f64,
    pub firings: u64,
    pub total: u64,
}

/// Structured simulation report, JSON-serializable for the profiler.
#[derive(Clone, Debug, Serialize, Deserialize, Default)]
pub struct SimReport {
    pub total_cycles: u64,
    pub kernel_runs: u64,
    pub tests_executed: u64,
    pub actors: BTreeMap<String, ActorCycleStats>,
    pub triggers: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("simulation exceeded the cycle budget of {0}")]
    CycleBudget(u64),
    #[error(transparent)]
    Fault(#[from] EvalFault),
}

struct SimActor {
    instance: String,
    am: Arc<ActorMachine>,
    params: HashMap<String, Value>,
    state: ActorState,
    in_map: Vec<Option<usize>>,
    out_map: Vec<Vec<usize>>,
    /// scratch for the no-revisit walk, epoch-stamped
    visited: Vec<u64>,
    cycle_stats: ActorCycleStats,
}

struct InputStage {
    /// Staged host batch (modeled DDR buffer, unbounded).
    staged: VecDeque<i64>,
    queue: usize,
}

struct OutputStage {
    queue: usize,
    collected: Vec<i64>,
    /// Full trace of everything that ever left through this stage.
    trace: Vec<i64>,
}

enum Unit {
    Actor(usize),
    In(usize),
    Out(usize),
}

enum Phase {
    Async,
    Sync {
        next_unit: usize,
        counts: Vec<usize>,
        failed: bool,
    },
}

/// IO view for one actor over the queue pool.
struct QueueIo<'a> {
    queues: &'a mut [FwftQueue],
    in_map: &'a [Option<usize>],
    out_map: &'a [Vec<usize>],
}

impl ActorIo for QueueIo<'_> {
    fn input_available(&self, port: usize) -> usize {
        self.in_map[port]
            .map(|q| self.queues[q].count())
            .unwrap_or(0)
    }

    fn input_peek(&self, port: usize, offset: usize) -> i64 {
        self.queues[self.in_map[port].expect("connected port")].peek(offset)
    }

    fn input_consume(&mut self, port: usize, count: usize) {
        if let Some(q) = self.in_map[port] {
            for _ in 0..count {
                self.queues[q].pop();
            }
        }
    }

    fn output_space(&self, port: usize) -> usize {
        self.out_map[port]
            .iter()
            .map(|&q| self.queues[q].size())
            .min()
            .unwrap_or(usize::MAX)
    }

    fn output_produce(&mut self, port: usize, value: i64) {
        for &q in &self.out_map[port] {
            self.queues[q].push(value);
        }
    }
}

/// The accelerator-partition simulator. Persistent across kernel runs: actor
/// state, queue contents, and statistics carry over, like a configured device
/// between kernel invocations.
pub struct Simulator {
    host: HostTable,
    cost: CostTable,
    queues: Vec<FwftQueue>,
    actors: Vec<SimActor>,
    input_stages: Vec<InputStage>,
    output_stages: Vec<OutputStage>,
    /// Boundary connection keys, aligned with `input_stages`/`output_stages`.
    pub input_keys: Vec<String>,
    pub output_keys: Vec<String>,
    /// Internal connection keys aligned with the head of `queues`.
    internal_keys: Vec<String>,
    /// Connection key per queue, aligned with `queues`.
    queue_keys: Vec<String>,
    triggers: Vec<Trigger>,
    units: Vec<Unit>,
    clock: u64,
    epoch: u64,
    rng: ChaCha8Rng,
    cycle_cap: u64,
    controller: ControllerKind,
    report: SimReport,
    /// True when some actor can fire spontaneously (an input-free action),
    /// in which case the device needs a kernel start even with no host data.
    pub has_autonomous_actor: bool,
}

/// Construction parameters for the simulator.
pub struct SimBuild<'a> {
    pub graph: &'a NetworkGraph,
    pub plan: &'a PartitionPlan,
    pub host: &'a HostTable,
    pub cost: CostTable,
    pub seed: u64,
    pub cycle_cap: u64,
    pub default_depth: usize,
    /// Record the full push trace of every device queue.
    pub trace: bool,
    /// Action-selection strategy for every device actor.
    pub controller: ControllerKind,
}

/// How device actors select actions: the knowledge-tracking actor machine,
/// or the re-test-everything baseline used for efficiency comparisons.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ControllerKind {
    #[default]
    ActorMachine,
    Basic,
}

impl Simulator {
    /// Build the simulator for the plan's accelerator partition. Connections
    /// with both endpoints on the accelerator become internal queues; each
    /// crossing gets an input or output stage.
    pub fn build(
        b: SimBuild,
        machines: &HashMap<String, Arc<ActorMachine>>,
    ) -> Result<Self, EvalFault> {
        let accel = b.plan.accelerator();
        let member = |name: &str| -> bool {
            accel
                .map(|p| p.members.iter().any(|m| m == name))
                .unwrap_or(false)
        };

        let mut actors: Vec<SimActor> = Vec::new();
        let mut actor_index: HashMap<usize, usize> = HashMap::new();
        for (gi, inst) in b.graph.instances.iter().enumerate() {
            if !member(&inst.name) {
                continue;
            }
            let am = Arc::clone(&machines[&inst.name]);
            let ctx = EvalCtx {
                actor: &inst.actor,
                instance: &inst.name,
                params: &inst.params,
                host: b.host,
            };
            let state = init_actor_state(&ctx)?;
            actor_index.insert(gi, actors.len());
            actors.push(SimActor {
                instance: inst.name.clone(),
                params: inst.params.clone(),
                state,
                in_map: vec![None; inst.actor.in_ports.len()],
                out_map: vec![Vec::new(); inst.actor.out_ports.len()],
                visited: vec![0; am.states.len()],
                am,
                cycle_stats: ActorCycleStats {
                    min: u64::MAX,
                    ..Default::default()
                },
            });
        }

        let depth_for = |key: &str| -> usize {
            b.plan
                .channel_configs
                .get(key)
                .and_then(|c| c.depth)
                .map(|d| d as usize)
                .unwrap_or(b.default_depth)
        };

        let mut queues = Vec::new();
        let mut input_stages = Vec::new();
        let mut output_stages = Vec::new();
        let mut input_keys = Vec::new();
        let mut output_keys = Vec::new();
        let mut internal_keys = Vec::new();
        let mut queue_keys = Vec::new();
        for conn in &b.graph.connections {
            let key = b.graph.connection_key(conn);
            let src_in = member(&b.graph.instances[conn.source.instance].name);
            let dst_in = member(&b.graph.instances[conn.target.instance].name);
            if !src_in && !dst_in {
                continue;
            }
            let qi = queues.len();
            let mut q = FwftQueue::new(depth_for(&key));
            q.set_tracing(b.trace);
            queues.push(q);
            queue_keys.push(key.clone());
            if src_in {
                let a = actor_index[&conn.source.instance];
                let p = actors[a]
                    .am
                    .actor
                    .out_port_index(&conn.source.port)
                    .unwrap();
                actors[a].out_map[p].push(qi);
            } else {
                input_stages.push(InputStage {
                    staged: VecDeque::new(),
                    queue: qi,
                });
                input_keys.push(key.clone());
            }
            if dst_in {
                let a = actor_index[&conn.target.instance];
                let p = actors[a].am.actor.in_port_index(&conn.target.port).unwrap();
                actors[a].in_map[p] = Some(qi);
            } else {
                output_stages.push(OutputStage {
                    queue: qi,
                    collected: Vec::new(),
                    trace: Vec::new(),
                });
                output_keys.push(key.clone());
            }
            if src_in && dst_in {
                internal_keys.push(key);
            }
        }

        let mut units: Vec<Unit> = Vec::new();
        for i in 0..actors.len() {
            units.push(Unit::Actor(i));
        }
        for i in 0..input_stages.len() {
            units.push(Unit::In(i));
        }
        for i in 0..output_stages.len() {
            units.push(Unit::Out(i));
        }
        let triggers = (0..units.len()).map(|_| Trigger::new()).collect();
        let has_autonomous_actor = actors.iter().any(|a| {
            a.am.actor
                .actions
                .iter()
                .any(|act| act.inputs.iter().all(|p| p.vars.is_empty()))
        });
        let n_triggers = units.len();
        Ok(Simulator {
            host: b.host.clone(),
            cost: b.cost,
            queues,
            actors,
            input_stages,
            output_stages,
            input_keys,
            output_keys,
            internal_keys,
            queue_keys,
            triggers,
            units,
            clock: 0,
            epoch: 0,
            rng: ChaCha8Rng::seed_from_u64(b.seed),
            cycle_cap: b.cycle_cap,
            controller: b.controller,
            report: SimReport {
                triggers: n_triggers,
                ..Default::default()
            },
            has_autonomous_actor,
        })
    }

    /// Stage a host batch for the input stage serving `key`.
    pub fn stage_input(&mut self, key: &str, tokens: &[i64]) {
        let idx = self
            .input_keys
            .iter()
            .position(|k| k == key)
            .expect("unknown input stage");
        self.input_stages[idx].staged.extend(tokens.iter().copied());
    }

    /// Take everything the output stage serving `key` has collected.
    pub fn take_output(&mut self, key: &str) -> Vec<i64> {
        let idx = self
            .output_keys
            .iter()
            .position(|k| k == key)
            .expect("unknown output stage");
        std::mem::take(&mut self.output_stages[idx].collected)
    }

    pub fn output_trace(&self, key: &str) -> &[i64] {
        let idx = self
            .output_keys
            .iter()
            .position(|k| k == key)
            .expect("unknown output stage");
        &self.output_stages[idx].trace
    }

    pub fn report(&self) -> SimReport {
        let mut r = self.report.clone();
        for a in &self.actors {
            let mut s = a.cycle_stats.clone();
            if s.firings == 0 {
                s.min = 0;
            } else {
                s.avg = s.total as f64 / s.firings as f64;
            }
            r.actors.insert(a.instance.clone(), s);
        }
        r
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    fn invoke_unit(&mut self, u: usize) -> Result<Invocation, EvalFault> {
        match self.units[u] {
            Unit::Actor(a) => self.invoke_actor(a),
            Unit::In(i) => {
                let stage = &mut self.input_stages[i];
                let q = &mut self.queues[stage.queue];
                let mut moved = 0u64;
                while q.size() > 0 {
                    match stage.staged.pop_front() {
                        Some(v) => {
                            q.push(v);
                            moved += 1;
                        }
                        None => break,
                    }
                }
                Ok(Invocation {
                    last_return: if moved > 0 {
                        ReturnCode::Exec
                    } else {
                        ReturnCode::Wait
                    },
                    instructions: moved,
                    execs: moved,
                    cost: 1,
                })
            }
            Unit::Out(o) => {
                let stage = &mut self.output_stages[o];
                let q = &mut self.queues[stage.queue];
                let mut moved = 0u64;
                while q.count() > 0 {
                    let v = q.pop();
                    stage.collected.push(v);
                    stage.trace.push(v);
                    moved += 1;
                }
                Ok(Invocation {
                    last_return: if moved > 0 {
                        ReturnCode::Exec
                    } else {
                        ReturnCode::Wait
                    },
                    instructions: moved,
                    execs: moved,
                    cost: 1,
                })
            }
        }
    }

    fn invoke_actor(&mut self, a: usize) -> Result<Invocation, EvalFault> {
        self.epoch += 1;
        let epoch = self.epoch;
        let controller = self.controller;
        let Simulator {
            actors,
            queues,
            host,
            cost,
            report,
            ..
        } = self;
        let actor = &mut actors[a];
        let am = Arc::clone(&actor.am);
        let mut io = QueueIo {
            queues,
            in_map: &actor.in_map,
            out_map: &actor.out_map,
        };
        let ctx = EvalCtx {
            actor: &am.actor,
            instance: &actor.instance,
            params: &actor.params,
            host,
        };
        match controller {
            ControllerKind::ActorMachine => run_controller_hw(
                &am,
                &ctx,
                &mut actor.state,
                &mut io,
                &mut actor.visited,
                epoch,
                cost,
                &mut actor.cycle_stats,
                &mut report.tests_executed,
            ),
            ControllerKind::Basic => run_basic_invocation(
                &am,
                &ctx,
                &mut actor.state,
                &mut io,
                cost,
                &mut actor.cycle_stats,
                &mut report.tests_executed,
            ),
        }
    }

    fn queue_counts(&self) -> Vec<usize> {
        let mut counts: Vec<usize> = self.queues.iter().map(|q| q.count()).collect();
        counts.extend(self.input_stages.iter().map(|s| s.staged.len()));
        counts
    }

    /// Run the device until the idleness protocol declares the network idle.
    pub fn run_until_idle(&mut self) -> Result<KernelRunStats, SimError> {
        let start = self.clock;
        let mut stats = KernelRunStats {
            last_exec_cycle: self.clock,
            ..Default::default()
        };
        // a fresh kernel start re-enables every trigger
        for t in &mut self.triggers {
            t.phase = TriggerPhase::Asynchronous;
            t.last_return = ReturnCode::Exec;
            t.busy_until = self.clock;
        }
        let mut phase = Phase::Async;
        loop {
            if self.clock - start >= self.cycle_cap {
                return Err(SimError::CycleBudget(self.cycle_cap));
            }
            match &mut phase {
                Phase::Async => {
                    let mut order: Vec<usize> = (0..self.units.len()).collect();
                    order.shuffle(&mut self.rng);
                    for u in order {
                        if self.triggers[u].busy_until > self.clock {
                            continue;
                        }
                        let inv = self.invoke_unit(u)?;
                        let t = &mut self.triggers[u];
                        t.last_return = inv.last_return;
                        t.busy_until = self.clock + inv.cost.max(1);
                        stats.max_invocation_cost = stats.max_invocation_cost.max(inv.cost.max(1));
                        if inv.execs > 0 {
                            stats.execs += inv.execs;
                            stats.last_exec_cycle = self.clock;
                        }
                    }
                    self.clock += 1;
                    let all_waiting = self
                        .triggers
                        .iter()
                        .all(|t| t.last_return == ReturnCode::Wait && t.busy_until <= self.clock);
                    if all_waiting {
                        for t in &mut self.triggers {
                            t.phase = TriggerPhase::Synchronous;
                        }
                        phase = Phase::Sync {
                            next_unit: 0,
                            counts: self.queue_counts(),
                            failed: false,
                        };
                    }
                }
                Phase::Sync {
                    next_unit,
                    counts,
                    failed,
                } => {
                    if *next_unit < self.units.len() {
                        let u = *next_unit;
                        *next_unit += 1;
                        let inv = self.invoke_unit(u)?;
                        self.triggers[u].last_return = inv.last_return;
                        if inv.execs > 0 {
                            stats.execs += inv.execs;
                            stats.last_exec_cycle = self.clock;
                            *failed = true;
                        }
                        self.clock += 1;
                    } else {
                        let pass = !*failed && *counts == self.queue_counts();
                        self.clock += 1;
                        if pass {
                            for t in &mut self.triggers {
                                t.phase = TriggerPhase::Idle;
                            }
                            stats.cycles = self.clock - start;
                            stats.declared_idle_at = self.clock;
                            self.report.total_cycles += stats.cycles;
                            self.report.kernel_runs += 1;
                            return Ok(stats);
                        }
                        for t in &mut self.triggers {
                            t.phase = TriggerPhase::Asynchronous;
                        }
                        phase = Phase::Async;
                    }
                }
            }
        }
    }

    /// Post-hoc scan: is any action enabled under the live queue state? Used
    /// by the idleness safety check. Applies the same selection rule as the
    /// reference interpreter; a backpressured high-priority action stalls its
    /// actor rather than enabling lower ones.
    pub fn any_enabled_action(&mut self) -> Result<Option<String>, EvalFault> {
        let Simulator {
            actors,
            queues,
            host,
            ..
        } = self;
        for actor in actors.iter() {
            let io = QueueIo {
                queues: &mut queues[..],
                in_map: &actor.in_map,
                out_map: &actor.out_map,
            };
            let ctx = EvalCtx {
                actor: &actor.am.actor,
                instance: &actor.instance,
                params: &actor.params,
                host,
            };
            let mut counter = EvalCounter::default();
            if let Selection::Fire(ai) = basic_select(&ctx, &actor.state, &io, &mut counter)? {
                return Ok(Some(format!(
                    "{}.{}",
                    actor.instance,
                    actor.am.actor.actions[ai].display_name(ai)
                )));
            }
        }
        for s in &self.input_stages {
            if !s.staged.is_empty() && self.queues[s.queue].size() > 0 {
                return Ok(Some("input-stage".into()));
            }
        }
        for s in &self.output_stages {
            if self.queues[s.queue].count() > 0 {
                return Ok(Some("output-stage".into()));
            }
        }
        Ok(None)
    }

    /// Per-queue accounting by connection key.
    pub fn queue_index(&self, key: &str) -> Option<usize> {
        self.queue_keys.iter().position(|k| k == key)
    }

    pub fn queue_pushed(&self, key: &str) -> u64 {
        self.queue_index(key)
            .map(|i| self.queues[i].pushed_total())
            .unwrap_or(0)
    }

    pub fn queue_count(&self, key: &str) -> usize {
        self.queue_index(key)
            .map(|i| self.queues[i].count())
            .unwrap_or(0)
    }

    pub fn queue_trace(&self, key: &str) -> Option<&[i64]> {
        self.queue_index(key).and_then(|i| self.queues[i].trace())
    }

    /// Staged tokens not yet moved into the device queue, per input key.
    pub fn staged_count(&self, key: &str) -> usize {
        self.input_keys
            .iter()
            .position(|k| k == key)
            .map(|i| self.input_stages[i].staged.len())
            .unwrap_or(0)
    }

    /// Stage a host batch by input-stage index (helper-thread fast path).
    pub fn stage_input_idx(&mut self, idx: usize, tokens: Vec<i64>) {
        self.input_stages[idx].staged.extend(tokens);
    }

    /// Take collected output by output-stage index.
    pub fn take_output_idx(&mut self, idx: usize) -> Vec<i64> {
        std::mem::take(&mut self.output_stages[idx].collected)
    }

    /// Tokens still sitting in device queues (artificial deadlock indicator).
    pub fn residual_tokens(&self) -> usize {
        self.queues.iter().map(|q| q.count()).sum::<usize>()
            + self
                .input_stages
                .iter()
                .map(|s| s.staged.len())
                .sum::<usize>()
    }

    /// Trace of tokens written into each internal queue is not kept; internal
    /// keys are exposed for structural tests.
    pub fn internal_connection_keys(&self) -> &[String] {
        &self.internal_keys
    }
}

/// One hardware controller invocation: executes TEST/EXEC instructions
/// without revisiting any controller state, exits on WAIT (after taking its
/// transition) or when the next state was already visited. Returns EXEC if
/// any action fired, WAIT otherwise.
#[allow(clippy::too_many_arguments)]
pub fn run_controller_hw(
    am: &ActorMachine,
    ctx: &EvalCtx,
    state: &mut ActorState,
    io: &mut dyn ActorIo,
    visited: &mut [u64],
    epoch: u64,
    cost: &CostTable,
    stats: &mut ActorCycleStats,
    tests_executed: &mut u64,
) -> Result<Invocation, EvalFault> {
    let mut instructions = 0u64;
    let mut execs = 0u64;
    let mut total_cost = 0u64;
    loop {
        if visited[state.pc] == epoch {
            break;
        }
        visited[state.pc] = epoch;
        match am.states[state.pc].instruction {
            Instruction::Test {
                condition,
                if_true,
                if_false,
            } => {
                instructions += 1;
                *tests_executed += 1;
                let holds = eval_condition_live(am, ctx, state, condition, io)?;
                state.pc = if holds { if_true } else { if_false };
            }
            Instruction::Exec { action, next } => {
                instructions += 1;
                let c = cost.exec_cost(
                    ctx.instance,
                    &am.actor.name,
                    &am.actor.actions[action].display_name(action),
                    am.actor.actions[action].weight,
                );
                exec_transition(ctx, state, action, io)?;
                execs += 1;
                total_cost += c;
                stats.firings += 1;
                stats.total += c;
                stats.min = stats.min.min(c);
                stats.max = stats.max.max(c);
                state.pc = next;
            }
            Instruction::Wait { next } => {
                instructions += 1;
                state.pc = next;
                break;
            }
        }
    }
    Ok(Invocation {
        last_return: if execs > 0 {
            ReturnCode::Exec
        } else {
            ReturnCode::Wait
        },
        instructions,
        execs,
        cost: total_cost.max(1),
    })
}

/// One invocation of the baseline controller: re-checks every firing
/// condition from scratch, fires while it can, and exits on the first
/// failure. Every availability, guard, and space predicate counts toward
/// `tests_executed`, which is what the actor machine's knowledge reuse is
/// measured against.
pub fn run_basic_invocation(
    am: &ActorMachine,
    ctx: &EvalCtx,
    state: &mut ActorState,
    io: &mut dyn ActorIo,
    cost: &CostTable,
    stats: &mut ActorCycleStats,
    tests_executed: &mut u64,
) -> Result<Invocation, EvalFault> {
    let mut counter = EvalCounter::default();
    let mut execs = 0u64;
    let mut total_cost = 0u64;
    while let Selection::Fire(action) = basic_select(ctx, state, &*io, &mut counter)? {
        let c = cost.exec_cost(
            ctx.instance,
            &am.actor.name,
            &am.actor.actions[action].display_name(action),
            am.actor.actions[action].weight,
        );
        exec_transition(ctx, state, action, io)?;
        execs += 1;
        total_cost += c;
        stats.firings += 1;
        stats.total += c;
        stats.min = stats.min.min(c);
        stats.max = stats.max.max(c);
    }
    *tests_executed += counter.total();
    Ok(Invocation {
        last_return: if execs > 0 {
            ReturnCode::Exec
        } else {
            ReturnCode::Wait
        },
        instructions: counter.total() + execs,
        execs,
        cost: total_cost.max(1),
    })
}

/// Evaluate a controller condition against live channel state.
pub fn eval_condition_live(
    am: &ActorMachine,
    ctx: &EvalCtx,
    state: &ActorState,
    condition: usize,
    io: &dyn ActorIo,
) -> Result<bool, EvalFault> {
    use crate::am::ConditionKind::*;
    match am.conditions[condition].kind {
        InputTokens { port, count } => Ok(io.input_available(port) >= count),
        OutputSpace { port, count } => Ok(io.output_space(port) >= count),
        Guard { action, guard_idx } => eval_guard(ctx, state, action, guard_idx, io),
    }
}

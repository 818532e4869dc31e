//! Multi-threaded software runtime.
//!
//! One scheduler thread per software partition. Each round runs three
//! phases: *pre-fire* snapshots the published channel counters into local
//! caches, *fire* round-robins the partition's actors (each controller runs
//! up to the iteration threshold or until WAIT), then the thread publishes
//! its cached writes and frees and *post-fire* decides whether to iterate,
//! sleep, or terminate. Tokens move through lock-less SPSC ring channels;
//! other threads see them only after the publication step.
//!
//! Termination: a thread with a fruitless round (no EXECs, nothing newly
//! published, and no publication anywhere since it last looked) registers as
//! asleep; the last thread to fall asleep, with no kernel in flight,
//! declares the whole network quiescent. Any publication wakes the sleepers,
//! so a producer can never strand a consumer (no lost wakeups: generation
//! checks and waits share one mutex).

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc;
use std::sync::{Arc, Condvar, Mutex};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::am::{build_siam, ActorMachine, AmError, Instruction};
use crate::eval::{
    exec_transition, init_actor_state, ActorIo, ActorState, EvalCtx, EvalFault, HostTable, Value,
};
use crate::graph::NetworkGraph;
use crate::hwsim::{
    eval_condition_live, ControllerKind, CostTable, SimBuild, SimReport, Simulator,
    DEFAULT_CYCLE_CAP, DEFAULT_QUEUE_DEPTH,
};
use crate::plink::{Curve, KernelResponse, PlinkActor, TransferRecord, DEFAULT_BOUNDARY_TOKENS};
use crate::ring::{endpoints, Consumer, Producer, RingChannel};
use crate::xcf::PartitionPlan;

pub const DEFAULT_CONTROLLER_THRESHOLD: usize = 120;

#[derive(Clone, Debug)]
pub struct RunOptions {
    /// Channel capacity in tokens when the plan leaves it unset.
    pub default_capacity: usize,
    /// Max controller instructions per actor per scheduling slot.
    pub controller_threshold: usize,
    /// Collect full per-channel token traces.
    pub trace: bool,
    /// Seed for the simulator's per-cycle trigger shuffle.
    pub seed: u64,
    /// Pin scheduler threads to cores when the host allows it.
    pub pin_threads: bool,
    /// Time every EXEC with the monotonic clock (profiling).
    pub collect_exec_timing: bool,
    pub cost_table: CostTable,
    /// Boundary buffer capacity in tokens.
    pub boundary_capacity: usize,
    pub sim_cycle_cap: u64,
    /// Synthetic boundary-transfer curves used for the transfer log.
    pub xi_write: Curve,
    pub xi_read: Curve,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            default_capacity: DEFAULT_QUEUE_DEPTH,
            controller_threshold: DEFAULT_CONTROLLER_THRESHOLD,
            trace: false,
            seed: 0,
            pin_threads: true,
            collect_exec_timing: false,
            cost_table: CostTable::default(),
            boundary_capacity: DEFAULT_BOUNDARY_TOKENS,
            sim_cycle_cap: DEFAULT_CYCLE_CAP,
            xi_write: Curve::linear(2.0),
            xi_read: Curve::linear(2.0),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct ExecTiming {
    pub total_ns: u64,
    pub firings: u64,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct RunResult {
    /// Firings per instance (per action summed).
    pub firings: BTreeMap<String, u64>,
    /// Tokens ever produced per connection.
    pub channel_tokens: BTreeMap<String, u64>,
    /// Tokens still buffered anywhere on the connection at exit.
    pub residues: BTreeMap<String, u64>,
    pub channels_nonempty_at_exit: bool,
    pub traces: Option<BTreeMap<String, Vec<i64>>>,
    /// Per-instance EXEC timing, when collected.
    pub exec_ns: BTreeMap<String, ExecTiming>,
    pub kernel_calls: u64,
    pub transfer_log: Vec<TransferRecord>,
    pub sim: Option<SimReport>,
    pub wall_ns: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Fault(#[from] EvalFault),
    #[error(transparent)]
    Am(#[from] AmError),
    #[error("invalid plan: {0}")]
    Plan(#[from] crate::xcf::XcfError),
    #[error("plan has no software partition")]
    NoSoftwarePartition,
    #[error("device error: {0}")]
    Device(String),
}

// ---------------------------------------------------------------------------
// coordinator: sleep/wake and quiescent termination

pub(crate) struct Coordinator {
    state: Mutex<CoordState>,
    cv: Condvar,
    stop: AtomicBool,
}

struct CoordState {
    asleep: Vec<bool>,
    /// Publication generation each thread has fully processed (its last
    /// fruitless round started at or after this generation).
    seen: Vec<u64>,
    pub_gen: u64,
    /// Kernel calls issued but not yet collected by plink. Counts from
    /// launch until the response tokens are back in plink's hands, so a
    /// completed-but-uncollected response can never be terminated away.
    pending_ops: usize,
    fault: Option<RunError>,
}

pub(crate) enum Park {
    Retry,
    Stop,
}

impl Coordinator {
    fn new(threads: usize) -> Self {
        Coordinator {
            state: Mutex::new(CoordState {
                asleep: vec![false; threads],
                seen: vec![0; threads],
                pub_gen: 0,
                pending_ops: 0,
                fault: None,
            }),
            cv: Condvar::new(),
            stop: AtomicBool::new(false),
        }
    }

    pub(crate) fn should_stop(&self) -> bool {
        self.stop.load(Ordering::Acquire)
    }

    /// A thread made tokens or frees visible: bump the generation and wake
    /// everyone so consumers with new input re-check.
    pub(crate) fn publish_notify(&self, me: usize) -> u64 {
        let mut st = self.state.lock().unwrap();
        st.pub_gen += 1;
        st.seen[me] = st.pub_gen;
        self.cv.notify_all();
        st.pub_gen
    }

    /// The device helper produced an event (kernel finished): wake every
    /// thread so plink collects the response.
    pub(crate) fn device_event(&self) {
        let mut st = self.state.lock().unwrap();
        st.pub_gen += 1;
        self.cv.notify_all();
    }

    pub(crate) fn kernel_launched(&self) {
        let mut st = self.state.lock().unwrap();
        st.pending_ops += 1;
    }

    /// Plink collected a kernel response; its tokens are now ordinary
    /// visible work.
    pub(crate) fn kernel_collected(&self) {
        let mut st = self.state.lock().unwrap();
        st.pending_ops -= 1;
    }

    fn report_fault(&self, fault: RunError) {
        let mut st = self.state.lock().unwrap();
        if st.fault.is_none() {
            st.fault = Some(fault);
        }
        self.stop.store(true, Ordering::Release);
        self.cv.notify_all();
    }

    fn take_fault(&self) -> Option<RunError> {
        self.state.lock().unwrap().fault.take()
    }

    /// Idle path after a fruitless round. Returns Retry when something was
    /// published since `seen`, Stop on termination or fault.
    ///
    /// The network terminates only when every thread is asleep, no kernel
    /// call is outstanding, and every thread's last fruitless round covered
    /// the final publication generation; the last condition keeps a stale
    /// `asleep` flag from hiding unprocessed input.
    pub(crate) fn park(&self, me: usize, seen: &mut u64) -> Park {
        let mut st = self.state.lock().unwrap();
        loop {
            if self.stop.load(Ordering::Acquire) {
                return Park::Stop;
            }
            if st.pub_gen != *seen {
                *seen = st.pub_gen;
                st.seen[me] = st.pub_gen;
                st.asleep[me] = false;
                return Park::Retry;
            }
            st.seen[me] = *seen;
            st.asleep[me] = true;
            let quiescent = st.asleep.iter().all(|&a| a)
                && st.pending_ops == 0
                && st.seen.iter().all(|&s| s == st.pub_gen);
            if quiescent {
                self.stop.store(true, Ordering::Release);
                self.cv.notify_all();
                return Park::Stop;
            }
            st = self.cv.wait(st).unwrap();
            st.asleep[me] = false;
        }
    }
}

// ---------------------------------------------------------------------------
// per-thread actor containers

struct SwIo<'a> {
    inputs: &'a mut [Option<Consumer>],
    outputs: &'a mut [Vec<Producer>],
}

impl ActorIo for SwIo<'_> {
    fn input_available(&self, port: usize) -> usize {
        self.inputs[port]
            .as_ref()
            .map(|c| c.available())
            .unwrap_or(0)
    }

    fn input_peek(&self, port: usize, offset: usize) -> i64 {
        self.inputs[port]
            .as_ref()
            .expect("connected port")
            .peek(offset)
    }

    fn input_consume(&mut self, port: usize, count: usize) {
        if let Some(c) = &mut self.inputs[port] {
            for _ in 0..count {
                c.pop();
            }
        }
    }

    fn output_space(&self, port: usize) -> usize {
        self.outputs[port]
            .iter()
            .map(|p| p.space())
            .min()
            .unwrap_or(usize::MAX)
    }

    fn output_produce(&mut self, port: usize, value: i64) {
        for p in &mut self.outputs[port] {
            p.push(value);
        }
    }
}

struct CalActor {
    instance: String,
    am: Arc<ActorMachine>,
    params: HashMap<String, Value>,
    state: ActorState,
    inputs: Vec<Option<Consumer>>,
    outputs: Vec<Vec<Producer>>,
    /// Connection key per producer endpoint, aligned with flattened outputs.
    out_keys: Vec<Vec<String>>,
    in_keys: Vec<Option<String>>,
    timing: ExecTiming,
}

/// Run one controller slot: up to `threshold` instructions, yielding early
/// on WAIT. The controller may revisit states within a slot.
fn run_controller_sw(
    actor: &mut CalActor,
    host: &HostTable,
    threshold: usize,
    time_execs: bool,
) -> Result<(u64, u64), EvalFault> {
    let am = Arc::clone(&actor.am);
    let mut io = SwIo {
        inputs: &mut actor.inputs,
        outputs: &mut actor.outputs,
    };
    let ctx = EvalCtx {
        actor: &am.actor,
        instance: &actor.instance,
        params: &actor.params,
        host,
    };
    let state = &mut actor.state;
    let mut steps = 0u64;
    let mut execs = 0u64;
    while (steps as usize) < threshold {
        match am.states[state.pc].instruction {
            Instruction::Test {
                condition,
                if_true,
                if_false,
            } => {
                steps += 1;
                let holds = eval_condition_live(&am, &ctx, state, condition, &io)?;
                state.pc = if holds { if_true } else { if_false };
            }
            Instruction::Exec { action, next } => {
                steps += 1;
                if time_execs {
                    let t0 = Instant::now();
                    exec_transition(&ctx, state, action, &mut io)?;
                    actor.timing.total_ns += t0.elapsed().as_nanos() as u64;
                    actor.timing.firings += 1;
                } else {
                    exec_transition(&ctx, state, action, &mut io)?;
                }
                execs += 1;
                state.pc = next;
            }
            Instruction::Wait { next } => {
                steps += 1;
                state.pc = next;
                break;
            }
        }
    }
    Ok((steps, execs))
}

enum Schedulable {
    Cal(CalActor),
    Plink(PlinkActor),
}

/// What one scheduler thread reports back after the run.
struct ThreadOutcome {
    actor_stats: Vec<(String, u64, ExecTiming)>,
    /// (connection key, produced total, trace)
    produced: Vec<(String, u64, Option<Vec<i64>>)>,
    /// (connection key, consumed total)
    consumed: Vec<(String, u64)>,
    plink: Option<PlinkOutcome>,
}

struct PlinkOutcome {
    kernel_calls: u64,
    transfer_log: Vec<TransferRecord>,
    held: Vec<(String, u64)>,
}

fn thread_main(
    me: usize,
    mut actors: Vec<Schedulable>,
    host: HostTable,
    threshold: usize,
    time_execs: bool,
    coord: Arc<Coordinator>,
) -> ThreadOutcome {
    let mut seen_gen = 0u64;
    'rounds: loop {
        if coord.should_stop() {
            break;
        }
        // pre-fire: refresh every endpoint snapshot
        for s in &mut actors {
            match s {
                Schedulable::Cal(a) => {
                    for c in a.inputs.iter_mut().flatten() {
                        c.refresh();
                    }
                    for p in a.outputs.iter_mut().flatten() {
                        p.refresh();
                    }
                }
                Schedulable::Plink(p) => p.refresh(),
            }
        }
        // fire: round-robin with per-actor instruction threshold
        let mut execs = 0u64;
        let mut plink_progress = false;
        for s in &mut actors {
            match s {
                Schedulable::Cal(a) => match run_controller_sw(a, &host, threshold, time_execs) {
                    Ok((_steps, e)) => execs += e,
                    Err(f) => {
                        coord.report_fault(RunError::Fault(f));
                        break 'rounds;
                    }
                },
                Schedulable::Plink(p) => match p.step() {
                    Ok(progress) => {
                        if progress.launched_kernel {
                            coord.kernel_launched();
                        }
                        if progress.completed_kernel {
                            coord.kernel_collected();
                        }
                        plink_progress |= progress.any();
                    }
                    Err(msg) => {
                        coord.report_fault(RunError::Device(msg));
                        break 'rounds;
                    }
                },
            }
        }
        // publication: make this round's writes and frees visible
        let mut delta = 0u64;
        for s in &mut actors {
            match s {
                Schedulable::Cal(a) => {
                    for c in a.inputs.iter_mut().flatten() {
                        delta += c.publish();
                    }
                    for p in a.outputs.iter_mut().flatten() {
                        delta += p.publish();
                    }
                }
                Schedulable::Plink(p) => delta += p.publish(),
            }
        }
        if delta > 0 {
            seen_gen = coord.publish_notify(me);
        }
        // post-fire
        if execs == 0 && delta == 0 && !plink_progress {
            match coord.park(me, &mut seen_gen) {
                Park::Retry => continue,
                Park::Stop => break,
            }
        }
    }

    let mut outcome = ThreadOutcome {
        actor_stats: Vec::new(),
        produced: Vec::new(),
        consumed: Vec::new(),
        plink: None,
    };
    for s in actors {
        match s {
            Schedulable::Cal(mut a) => {
                outcome.actor_stats.push((
                    a.instance.clone(),
                    a.state.firings.iter().sum(),
                    a.timing,
                ));
                for (port, producers) in a.outputs.iter_mut().enumerate() {
                    for (i, p) in producers.iter_mut().enumerate() {
                        outcome.produced.push((
                            a.out_keys[port][i].clone(),
                            p.total_pushed(),
                            p.trace.take(),
                        ));
                    }
                }
                for (port, c) in a.inputs.iter().enumerate() {
                    if let (Some(c), Some(key)) = (c, &a.in_keys[port]) {
                        outcome.consumed.push((key.clone(), c.total_popped()));
                    }
                }
            }
            Schedulable::Plink(p) => {
                for (key, total) in p.consumer_totals() {
                    outcome.consumed.push((key, total));
                }
                for (key, total) in p.producer_totals() {
                    outcome.produced.push((key, total, None));
                }
                let held = p
                    .consumer_totals()
                    .into_iter()
                    .map(|(k, _)| (k.clone(), p.held_for(&k)))
                    .chain(
                        p.producer_totals()
                            .into_iter()
                            .map(|(k, _)| (k.clone(), p.held_for(&k))),
                    )
                    .collect();
                outcome.plink = Some(PlinkOutcome {
                    kernel_calls: p.kernel_calls,
                    transfer_log: p.transfer_log.clone(),
                    held,
                });
            }
        }
    }
    outcome
}

#[cfg(target_os = "linux")]
fn pin_to_core(core: usize) {
    unsafe {
        let mut set: libc::cpu_set_t = std::mem::zeroed();
        libc::CPU_ZERO(&mut set);
        libc::CPU_SET(core % libc::CPU_SETSIZE as usize, &mut set);
        // best effort: ignore failures (containers often forbid affinity)
        libc::sched_setaffinity(0, std::mem::size_of::<libc::cpu_set_t>(), &set);
    }
}

#[cfg(not(target_os = "linux"))]
fn pin_to_core(_core: usize) {}

// ---------------------------------------------------------------------------
// network assembly

/// Build the actor machines for every instance of the graph.
pub fn build_machines(graph: &NetworkGraph) -> Result<HashMap<String, Arc<ActorMachine>>, AmError> {
    let mut map = HashMap::new();
    for inst in &graph.instances {
        map.insert(inst.name.clone(), Arc::new(build_siam(&inst.actor)?));
    }
    Ok(map)
}

/// Execute the network under the plan. Terminates when the network
/// quiesces; deadlock from undersized FIFOs terminates identically and is
/// flagged through `channels_nonempty_at_exit`.
pub fn run_network(
    graph: &NetworkGraph,
    plan: &PartitionPlan,
    host: &HostTable,
    options: &RunOptions,
) -> Result<RunResult, RunError> {
    let wall_start = Instant::now();
    plan.validate(graph)?;
    let machines = build_machines(graph)?;

    let sw_parts: Vec<_> = plan.software_partitions().collect();
    if sw_parts.is_empty() {
        return Err(RunError::NoSoftwarePartition);
    }
    let accel_members: Vec<String> = plan
        .accelerator()
        .map(|p| p.members.clone())
        .unwrap_or_default();
    let on_accel = |name: &str| accel_members.iter().any(|m| m == name);

    // per software instance container
    let mut cal_actors: HashMap<String, CalActor> = HashMap::new();
    let mut thread_of: HashMap<String, usize> = HashMap::new();
    for (ti, part) in sw_parts.iter().enumerate() {
        for m in &part.members {
            let gi = graph.instance_index(m).expect("validated plan");
            let inst = &graph.instances[gi];
            let am = Arc::clone(&machines[m]);
            let ctx = EvalCtx {
                actor: &inst.actor,
                instance: &inst.name,
                params: &inst.params,
                host,
            };
            let state = init_actor_state(&ctx)?;
            thread_of.insert(m.clone(), ti);
            cal_actors.insert(
                m.clone(),
                CalActor {
                    instance: m.clone(),
                    params: inst.params.clone(),
                    state,
                    inputs: (0..inst.actor.in_ports.len()).map(|_| None).collect(),
                    outputs: (0..inst.actor.out_ports.len())
                        .map(|_| Vec::new())
                        .collect(),
                    out_keys: vec![Vec::new(); inst.actor.out_ports.len()],
                    in_keys: vec![None; inst.actor.in_ports.len()],
                    am,
                    timing: ExecTiming::default(),
                },
            );
        }
    }

    // channels
    let capacity_for = |key: &str| -> usize {
        plan.channel_configs
            .get(key)
            .and_then(|c| c.depth)
            .map(|d| d as usize)
            .unwrap_or(options.default_capacity)
    };
    let mut plink_ins: Vec<(String, Consumer)> = Vec::new();
    let mut plink_outs: Vec<(String, Producer)> = Vec::new();
    for conn in &graph.connections {
        let key = graph.connection_key(conn);
        let src_name = &graph.instances[conn.source.instance].name;
        let dst_name = &graph.instances[conn.target.instance].name;
        let src_hw = on_accel(src_name);
        let dst_hw = on_accel(dst_name);
        if src_hw && dst_hw {
            continue; // device-internal, simulator owns it
        }
        let ch = RingChannel::with_capacity(capacity_for(&key));
        let (mut prod, cons) = endpoints(ch);
        if options.trace && !src_hw {
            prod.trace = Some(Vec::new());
        }
        if src_hw {
            // device produces: plink feeds the ring
            plink_outs.push((key.clone(), prod));
        } else {
            let a = cal_actors.get_mut(src_name).expect("sw instance");
            let p = a.am.actor.out_port_index(&conn.source.port).unwrap();
            a.outputs[p].push(prod);
            a.out_keys[p].push(key.clone());
        }
        if dst_hw {
            plink_ins.push((key.clone(), cons));
        } else {
            let a = cal_actors.get_mut(dst_name).expect("sw instance");
            let p = a.am.actor.in_port_index(&conn.target.port).unwrap();
            a.inputs[p] = Some(cons);
            a.in_keys[p] = Some(key.clone());
        }
    }

    // device partition: simulator on a helper thread, plink on thread 0
    let coord = Arc::new(Coordinator::new(sw_parts.len()));
    let mut helper: Option<std::thread::JoinHandle<Simulator>> = None;
    let mut plink: Option<PlinkActor> = None;
    if !accel_members.is_empty() {
        let sim = Simulator::build(
            SimBuild {
                graph,
                plan,
                host,
                cost: options.cost_table.clone(),
                seed: options.seed,
                cycle_cap: options.sim_cycle_cap,
                default_depth: options.default_capacity,
                trace: options.trace,
                controller: ControllerKind::default(),
            },
            &machines,
        )?;
        let autonomous = sim.has_autonomous_actor;
        let n_outputs = sim.output_keys.len();
        let (to_dev, dev_rx) = mpsc::channel::<crate::plink::KernelRequest>();
        let (dev_tx, from_dev) = mpsc::channel::<KernelResponse>();
        let coord_dev = Arc::clone(&coord);
        helper = Some(std::thread::spawn(move || {
            let mut sim = sim;
            while let Ok(req) = dev_rx.recv() {
                for (idx, tokens) in req.batches {
                    sim.stage_input_idx(idx, tokens);
                }
                let (stats, error) = match sim.run_until_idle() {
                    Ok(s) => (Some(s), None),
                    Err(e) => (None, Some(e.to_string())),
                };
                let outputs = (0..n_outputs)
                    .map(|i| (i, sim.take_output_idx(i)))
                    .collect();
                let _ = dev_tx.send(KernelResponse {
                    outputs,
                    stats,
                    error,
                });
                coord_dev.device_event();
            }
            sim
        }));
        plink = Some(PlinkActor::new(
            plink_ins,
            plink_outs,
            options.boundary_capacity,
            autonomous,
            to_dev,
            from_dev,
            options.xi_write.clone(),
            options.xi_read.clone(),
        ));
    }

    // assemble per-thread schedulables in partition order; plink goes on p1
    let mut per_thread: Vec<Vec<Schedulable>> = (0..sw_parts.len()).map(|_| Vec::new()).collect();
    for (ti, part) in sw_parts.iter().enumerate() {
        for m in &part.members {
            per_thread[ti].push(Schedulable::Cal(
                cal_actors.remove(m).expect("each member once"),
            ));
        }
    }
    if let Some(p) = plink {
        per_thread[0].push(Schedulable::Plink(p));
    }

    // run
    let outcomes: Vec<ThreadOutcome> = std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for (ti, actors) in per_thread.into_iter().enumerate() {
            let host = host.clone();
            let coord = Arc::clone(&coord);
            let threshold = options.controller_threshold;
            let time_execs = options.collect_exec_timing;
            let pin = options.pin_threads;
            handles.push(scope.spawn(move || {
                if pin {
                    pin_to_core(ti);
                }
                thread_main(ti, actors, host, threshold, time_execs, coord)
            }));
        }
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });

    // helper shutdown: plink's sender was dropped with its thread outcome
    let sim_final = helper.map(|h| h.join().unwrap());

    if let Some(fault) = coord.take_fault() {
        return Err(fault);
    }

    // assemble the result
    let mut result = RunResult {
        wall_ns: wall_start.elapsed().as_nanos() as u64,
        ..Default::default()
    };
    if options.trace {
        result.traces = Some(BTreeMap::new());
    }
    let mut produced: BTreeMap<String, u64> = BTreeMap::new();
    let mut consumed: BTreeMap<String, u64> = BTreeMap::new();
    let mut plink_held: BTreeMap<String, u64> = BTreeMap::new();
    for o in outcomes {
        for (inst, firings, timing) in o.actor_stats {
            result.firings.insert(inst.clone(), firings);
            if options.collect_exec_timing {
                result.exec_ns.insert(inst, timing);
            }
        }
        for (key, total, trace) in o.produced {
            *produced.entry(key.clone()).or_default() += total;
            if let (Some(traces), Some(t)) = (&mut result.traces, trace) {
                traces.insert(key, t);
            }
        }
        for (key, total) in o.consumed {
            *consumed.entry(key).or_default() += total;
        }
        if let Some(p) = o.plink {
            result.kernel_calls = p.kernel_calls;
            result.transfer_log = p.transfer_log;
            for (key, held) in p.held {
                plink_held.insert(key, held);
            }
        }
    }

    if let Some(sim) = &sim_final {
        let report = sim.report();
        for (inst, stats) in &report.actors {
            result.firings.insert(inst.clone(), stats.firings);
        }
        result.sim = Some(report);
    }

    for conn in &graph.connections {
        let key = graph.connection_key(conn);
        let src_hw = on_accel(&graph.instances[conn.source.instance].name);
        let dst_hw = on_accel(&graph.instances[conn.target.instance].name);
        let device_count = sim_final
            .as_ref()
            .map(|s| s.queue_count(&key) as u64 + s.staged_count(&key) as u64)
            .unwrap_or(0);
        let held = plink_held.get(&key).copied().unwrap_or(0);
        let (produced_total, residue) = match (src_hw, dst_hw) {
            (true, true) => {
                let sim = sim_final.as_ref().expect("accel members imply simulator");
                (sim.queue_pushed(&key), device_count)
            }
            (false, false) => {
                let p = produced.get(&key).copied().unwrap_or(0);
                let c = consumed.get(&key).copied().unwrap_or(0);
                (p, p - c)
            }
            (false, true) => {
                // sw producer -> ring -> plink -> device queue
                let p = produced.get(&key).copied().unwrap_or(0);
                let ring_c = consumed.get(&key).copied().unwrap_or(0);
                (p, (p - ring_c) + held + device_count)
            }
            (true, false) => {
                let sim = sim_final.as_ref().expect("accel members imply simulator");
                let p = sim.queue_pushed(&key);
                let ring_c = consumed.get(&key).copied().unwrap_or(0);
                let ring_p = produced.get(&key).copied().unwrap_or(0);
                (p, device_count + held + (ring_p - ring_c))
            }
        };
        result.channel_tokens.insert(key.clone(), produced_total);
        result.residues.insert(key.clone(), residue);
        if let (Some(traces), Some(sim)) = (&mut result.traces, &sim_final) {
            if src_hw {
                if let Some(t) = sim.queue_trace(&key) {
                    traces.insert(key.clone(), t.to_vec());
                }
            }
        }
    }
    result.channels_nonempty_at_exit = result.residues.values().any(|&r| r > 0);

    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference::run_reference;
    use crate::testutil::{collecting_host, listing2_xcf, top_filter_graph};
    use crate::xcf::{parse_xcf, Partition, PartitionKind, PartitionPlan};

    fn sw_plan(graph: &NetworkGraph, threads: &[&[&str]]) -> PartitionPlan {
        PartitionPlan {
            network: graph.name.clone(),
            partitions: threads
                .iter()
                .enumerate()
                .map(|(i, members)| Partition {
                    id: format!("p{i}"),
                    kind: PartitionKind::Software,
                    codegen: None,
                    members: members.iter().map(|s| s.to_string()).collect(),
                    settings: vec![],
                })
                .collect(),
            channel_configs: Default::default(),
        }
    }

    /// Build one CalActor over explicit endpoints for slot-level tests.
    fn filter_actor_with_io(queued: &[i64], out_cap: usize) -> (CalActor, HostTable) {
        let graph = top_filter_graph();
        let gi = graph.instance_index("filter").unwrap();
        let inst = &graph.instances[gi];
        let am = Arc::new(crate::am::build_siam(&inst.actor).unwrap());
        let host = HostTable::with_defaults();
        let ctx = EvalCtx {
            actor: &inst.actor,
            instance: &inst.name,
            params: &inst.params,
            host: &host,
        };
        let state = init_actor_state(&ctx).unwrap();
        let (mut in_tx, mut in_rx) = crate::ring::channel(4096);
        in_tx.refresh();
        for &v in queued {
            in_tx.push(v);
        }
        in_tx.publish();
        in_rx.refresh();
        let (mut out_tx, _out_rx) = crate::ring::channel(out_cap);
        out_tx.refresh();
        let actor = CalActor {
            instance: inst.name.clone(),
            am,
            params: inst.params.clone(),
            state,
            inputs: vec![Some(in_rx)],
            outputs: vec![vec![out_tx]],
            out_keys: vec![vec!["filter.OUT->sink.IN".into()]],
            in_keys: vec![Some("source.OUT->filter.IN".into())],
            timing: ExecTiming::default(),
        };
        (actor, host)
    }

    /// With every condition persistently true, a slot of threshold 8 runs
    /// exactly eight instructions: two TEST-TEST-TEST-EXEC rounds.
    #[test]
    fn slot_runs_exactly_threshold_instructions() {
        let (mut actor, host) = filter_actor_with_io(&[100, 200, 300, 400], 4096);
        let (steps, execs) = run_controller_sw(&mut actor, &host, 8, false).unwrap();
        assert_eq!(steps, 8);
        assert_eq!(execs, 2);
        // a wide-open slot drains the remaining tokens and yields on WAIT
        let (steps, execs) = run_controller_sw(&mut actor, &host, 120, false).unwrap();
        assert_eq!(execs, 2, "two tokens were left");
        // 2 firings at 4 instructions, then TEST c0 false and the WAIT
        assert_eq!(steps, 10);
    }

    /// No input: one TEST and the WAIT, regardless of the threshold.
    #[test]
    fn slot_yields_at_wait() {
        for threshold in [2usize, 8, 1000] {
            let (mut actor, host) = filter_actor_with_io(&[], 4096);
            let (steps, execs) = run_controller_sw(&mut actor, &host, threshold, false).unwrap();
            assert_eq!(execs, 0);
            assert_eq!(steps, 2, "TEST c0 then WAIT under threshold {threshold}");
        }
    }

    #[test]
    fn single_thread_matches_reference() {
        let graph = top_filter_graph();
        let (host, collected) = collecting_host();
        let oracle = run_reference(&graph, &host, 10_000_000).unwrap();
        collected.lock().unwrap().clear();

        let plan = sw_plan(&graph, &[&["source", "filter", "sink"]]);
        let options = RunOptions {
            trace: true,
            ..Default::default()
        };
        let res = run_network(&graph, &plan, &host, &options).unwrap();
        assert_eq!(res.firings["source"], 4096);
        assert_eq!(
            res.traces.as_ref().unwrap()["filter.OUT->sink.IN"],
            oracle.traces["filter.OUT->sink.IN"]
        );
        assert_eq!(
            *collected.lock().unwrap(),
            oracle.traces["filter.OUT->sink.IN"]
        );
        assert!(!res.channels_nonempty_at_exit);
        assert_eq!(res.channel_tokens["source.OUT->filter.IN"], 4096);
    }

    #[test]
    fn three_threads_match_reference() {
        let graph = top_filter_graph();
        let (host, _) = collecting_host();
        let oracle = run_reference(&graph, &host, 10_000_000).unwrap();
        let plan = sw_plan(&graph, &[&["source"], &["filter"], &["sink"]]);
        let options = RunOptions {
            trace: true,
            ..Default::default()
        };
        let res = run_network(&graph, &plan, &host, &options).unwrap();
        for (key, trace) in res.traces.as_ref().unwrap() {
            assert_eq!(trace, &oracle.traces[key], "trace mismatch on {key}");
        }
    }

    #[test]
    fn empty_network_terminates_immediately() {
        let graph =
            crate::graph::parse_program(&[("e.cal".into(), "network E () ==> : end".into())], "E")
                .unwrap();
        let host = HostTable::with_defaults();
        let plan = PartitionPlan::single_thread(&graph);
        let res = run_network(&graph, &plan, &host, &RunOptions::default()).unwrap();
        assert!(res.firings.is_empty());
        assert!(!res.channels_nonempty_at_exit);
    }

    #[test]
    fn mixed_run_with_listing2_plan_matches_reference() {
        let graph = top_filter_graph();
        let (host, collected) = collecting_host();
        let oracle = run_reference(&graph, &host, 10_000_000).unwrap();
        collected.lock().unwrap().clear();

        let plan = parse_xcf(&listing2_xcf(), &graph).unwrap();
        let options = RunOptions {
            trace: true,
            ..Default::default()
        };
        let res = run_network(&graph, &plan, &host, &options).unwrap();
        assert_eq!(
            *collected.lock().unwrap(),
            oracle.traces["filter.OUT->sink.IN"],
            "sink trace must match the reference"
        );
        assert!(res.kernel_calls >= 1);
        assert!(res.sim.is_some());
        assert_eq!(res.firings["source"], 4096);
        assert!(!res.channels_nonempty_at_exit);
        // hardware-produced channel trace equals the oracle too
        assert_eq!(
            res.traces.as_ref().unwrap()["filter.OUT->sink.IN"],
            oracle.traces["filter.OUT->sink.IN"]
        );
    }

    #[test]
    fn controller_threshold_limits_slot_instructions() {
        // filter with queued tokens and a tiny threshold: strictly fewer
        // consumed per slot than available
        let graph = top_filter_graph();
        let host = HostTable::with_defaults();
        let plan = sw_plan(&graph, &[&["source", "filter", "sink"]]);
        let tight = RunOptions {
            controller_threshold: 3,
            ..Default::default()
        };
        let res = run_network(&graph, &plan, &host, &tight).unwrap();
        // slots of three instructions still drain the network eventually
        assert_eq!(res.firings["source"], 4096);
        assert!(!res.channels_nonempty_at_exit);
    }

    #[test]
    fn undersized_fifo_deadlock_is_flagged() {
        // merge wants pairs, but A-side capacity 1 starves forever when the
        // producer bursts two tokens to A before B
        let src = r#"
actor Two () ==> int A, int B :
  int n := 0;
  go: action ==> A:[n], B:[n]
  guard n < 8
  do
    n := n + 1;
  end
end
actor Join () int A, int B ==> :
  both: action A:[x, y], B:[z] ==> end
end
network D () ==> :
  entities t = Two(); j = Join();
  structure t.A --> j.A; t.B --> j.B;
end
"#;
        let graph = crate::graph::parse_program(&[("d.cal".into(), src.into())], "D").unwrap();
        let host = HostTable::with_defaults();
        let mut plan = PartitionPlan::single_thread(&graph);
        plan.channel_configs.insert(
            "t.B->j.B".into(),
            crate::xcf::ChannelConfig {
                depth: Some(2),
                boundary_bytes: None,
            },
        );
        // j consumes pairs from A and singles from B; B fills at depth 2
        // while A lags, so the producer wedges: artificial deadlock
        plan.channel_configs.insert(
            "t.A->j.A".into(),
            crate::xcf::ChannelConfig {
                depth: Some(1),
                boundary_bytes: None,
            },
        );
        let res = run_network(&graph, &plan, &host, &RunOptions::default()).unwrap();
        assert!(
            res.channels_nonempty_at_exit,
            "deadlock leaves tokens behind"
        );
    }
}

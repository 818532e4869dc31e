//! Profiling: the four partitioner inputs.
//!
//! Per-actor software timing (ns per firing, EXEC bodies only), per-actor
//! hardware cycle counts from the simulator's triggers, per-connection token
//! counts, and the four communication bandwidth curves: software FIFO
//! transfers same-core and cross-core, and boundary writes/reads. Everything
//! serializes into one JSON document; times are stored in nanoseconds except
//! hardware cycles, which the partitioner converts using the assumed clock.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::eval::HostTable;
use crate::graph::NetworkGraph;
use crate::hwsim::ActorCycleStats;
use crate::plink::Curve;
use crate::ring::channel;
use crate::runtime::{run_network, RunError, RunOptions, RunResult};
use crate::xcf::PartitionPlan;

pub const DEFAULT_ASSUMED_CLOCK_MHZ: f64 = 300.0;
/// Fallback ratio when the host cannot host a cross-core measurement.
pub const DEFAULT_INTER_FACTOR: f64 = 3.0;

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ProfileReport {
    /// Average ns per firing, EXEC bodies only. Actors that never fired are
    /// absent.
    pub exec_sw_ns: BTreeMap<String, f64>,
    /// Cycle statistics per actor from hardware profiling.
    pub exec_hw_cycles: BTreeMap<String, ActorCycleStats>,
    /// Tokens transferred per connection during the profiled run.
    pub tokens: BTreeMap<String, u64>,
    /// Firings per instance during the profiled run; with the averages
    /// above this recovers each actor's total workload time.
    #[serde(default)]
    pub firings: BTreeMap<String, u64>,
    pub xi_read: Option<Curve>,
    pub xi_write: Option<Curve>,
    pub xi_intra: Option<Curve>,
    pub xi_inter: Option<Curve>,
    /// The cross-core curve was estimated, not measured.
    pub inter_estimated: bool,
    /// Guessed final accelerator frequency, used to convert cycles to ns.
    pub assumed_clock_mhz: f64,
    /// Boundary transfer log from the profiled run, when one existed.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub transfer_log: Vec<crate::plink::TransferRecord>,
}

impl ProfileReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| e.to_string())
    }

    /// Merge another report into this one; `other` wins on collisions.
    pub fn merge(&mut self, other: ProfileReport) {
        self.exec_sw_ns.extend(other.exec_sw_ns);
        self.exec_hw_cycles.extend(other.exec_hw_cycles);
        self.tokens.extend(other.tokens);
        if other.xi_read.is_some() {
            self.xi_read = other.xi_read;
        }
        if other.xi_write.is_some() {
            self.xi_write = other.xi_write;
        }
        if other.xi_intra.is_some() {
            self.xi_intra = other.xi_intra;
            self.inter_estimated = other.inter_estimated;
        }
        if other.xi_inter.is_some() {
            self.xi_inter = other.xi_inter;
        }
        if other.assumed_clock_mhz > 0.0 {
            self.assumed_clock_mhz = other.assumed_clock_mhz;
        }
        if !other.transfer_log.is_empty() {
            self.transfer_log = other.transfer_log;
        }
        self.firings.extend(other.firings);
    }
}

/// Software profile: run the plan with EXEC timing enabled and fold the
/// result into a report. Requires an all-software plan.
pub fn profile_software(
    graph: &NetworkGraph,
    plan: &PartitionPlan,
    host: &HostTable,
    options: &RunOptions,
) -> Result<(ProfileReport, RunResult), RunError> {
    let mut opts = options.clone();
    opts.collect_exec_timing = true;
    let run = run_network(graph, plan, host, &opts)?;
    let mut report = ProfileReport {
        assumed_clock_mhz: DEFAULT_ASSUMED_CLOCK_MHZ,
        ..Default::default()
    };
    for (inst, timing) in &run.exec_ns {
        if timing.firings > 0 {
            report
                .exec_sw_ns
                .insert(inst.clone(), timing.total_ns as f64 / timing.firings as f64);
        }
    }
    report.tokens = run.channel_tokens.clone();
    report.firings = run.firings.clone();
    Ok((report, run))
}

/// Hardware profile: run the plan (accelerator members on the simulator)
/// and fold the trigger statistics into a report.
pub fn profile_hardware(
    graph: &NetworkGraph,
    plan: &PartitionPlan,
    host: &HostTable,
    options: &RunOptions,
) -> Result<(ProfileReport, RunResult), RunError> {
    let run = run_network(graph, plan, host, options)?;
    let mut report = ProfileReport {
        assumed_clock_mhz: DEFAULT_ASSUMED_CLOCK_MHZ,
        ..Default::default()
    };
    if let Some(sim) = &run.sim {
        for (inst, stats) in &sim.actors {
            if stats.firings > 0 {
                report.exec_hw_cycles.insert(inst.clone(), stats.clone());
            }
        }
    }
    report.tokens = run.channel_tokens.clone();
    report.firings = run.firings.clone();
    report.transfer_log = run.transfer_log.clone();
    Ok((report, run))
}

fn reps_for(size: usize) -> usize {
    ((1 << 18) / size.max(1)).clamp(8, 8192)
}

/// Move `size` tokens through source -> pass-through -> sink on this thread
/// and return the per-direction time (roundtrip halved), in ns.
fn intra_roundtrip_ns(size: usize) -> f64 {
    let (mut a_tx, mut a_rx) = channel(size);
    let (mut b_tx, mut b_rx) = channel(size);
    let reps = reps_for(size);
    // warmup round
    for _ in 0..2 {
        pump(&mut a_tx, &mut a_rx, &mut b_tx, &mut b_rx, size);
    }
    let t0 = Instant::now();
    for _ in 0..reps {
        pump(&mut a_tx, &mut a_rx, &mut b_tx, &mut b_rx, size);
    }
    let total = t0.elapsed().as_nanos() as f64;
    total / reps as f64 / 2.0
}

fn pump(
    a_tx: &mut crate::ring::Producer,
    a_rx: &mut crate::ring::Consumer,
    b_tx: &mut crate::ring::Producer,
    b_rx: &mut crate::ring::Consumer,
    size: usize,
) {
    a_tx.refresh();
    for i in 0..size {
        a_tx.push(i as i64);
    }
    a_tx.publish();
    // pass-through hop
    a_rx.refresh();
    b_tx.refresh();
    let mut acc = 0i64;
    for _ in 0..size {
        b_tx.push(a_rx.pop());
    }
    a_rx.publish();
    b_tx.publish();
    b_rx.refresh();
    for _ in 0..size {
        acc ^= b_rx.pop();
    }
    b_rx.publish();
    std::hint::black_box(acc);
}

/// Cross-core variant: the pass-through hop runs on a helper thread.
fn inter_roundtrip_ns(size: usize) -> f64 {
    let (mut a_tx, mut a_rx) = channel(size);
    let (mut b_tx, mut b_rx) = channel(size);
    let stop = Arc::new(AtomicBool::new(false));
    let stop_h = Arc::clone(&stop);
    let reps = reps_for(size);
    let helper = std::thread::spawn(move || {
        while !stop_h.load(Ordering::Relaxed) {
            a_rx.refresh();
            b_tx.refresh();
            let n = a_rx.available().min(b_tx.space());
            if n == 0 {
                std::hint::spin_loop();
                continue;
            }
            for _ in 0..n {
                b_tx.push(a_rx.pop());
            }
            a_rx.publish();
            b_tx.publish();
        }
    });
    let mut run_once = |sz: usize| {
        let mut sent = 0usize;
        let mut recv = 0usize;
        while recv < sz {
            if sent < sz {
                a_tx.refresh();
                let n = a_tx.space().min(sz - sent);
                for i in 0..n {
                    a_tx.push((sent + i) as i64);
                }
                if n > 0 {
                    sent += n;
                    a_tx.publish();
                }
            }
            b_rx.refresh();
            let n = b_rx.available().min(sz - recv);
            for _ in 0..n {
                std::hint::black_box(b_rx.pop());
            }
            if n > 0 {
                recv += n;
                b_rx.publish();
            }
        }
    };
    for _ in 0..2 {
        run_once(size);
    }
    let t0 = Instant::now();
    for _ in 0..reps {
        run_once(size);
    }
    let total = t0.elapsed().as_nanos() as f64;
    stop.store(true, Ordering::Relaxed);
    helper.join().unwrap();
    total / reps as f64 / 2.0
}

/// Measure the software FIFO bandwidth curves over the given sizes. On hosts
/// without a second core the inter-core curve is estimated as
/// `intra * factor` and flagged.
pub fn measure_fifo_bandwidth(sizes: &[usize], inter_factor: f64) -> (Curve, Curve, bool) {
    assert!(sizes.len() >= 2, "need at least two sizes for a curve");
    let mut intra_pts = Vec::new();
    for &s in sizes {
        intra_pts.push((s as f64, intra_roundtrip_ns(s)));
    }
    let intra = Curve::new(intra_pts).isotonic();
    let cores = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    if cores < 2 {
        let inter = Curve::new(
            intra
                .points
                .iter()
                .map(|&(s, v)| (s, v * inter_factor))
                .collect(),
        );
        return (intra, inter, true);
    }
    let mut inter_pts = Vec::new();
    for &s in sizes {
        inter_pts.push((s as f64, inter_roundtrip_ns(s)));
    }
    (intra, Curve::new(inter_pts).isotonic(), false)
}

/// Measure the boundary handoff curves: batches bounced through an mpsc
/// pair to a helper thread, mimicking the plink write/read paths. In pure
/// simulation mode pass synthetic curves through unchanged.
pub fn measure_boundary_bandwidth(
    sizes: &[usize],
    synthetic: Option<(Curve, Curve)>,
) -> (Curve, Curve) {
    if let Some((w, r)) = synthetic {
        return (w, r);
    }
    let (to_dev, dev_rx) = std::sync::mpsc::channel::<Vec<i64>>();
    let (dev_tx, from_dev) = std::sync::mpsc::channel::<Vec<i64>>();
    let helper = std::thread::spawn(move || {
        while let Ok(batch) = dev_rx.recv() {
            // model device ingestion: one pass over the batch
            let mut q = std::collections::VecDeque::with_capacity(batch.len());
            for v in &batch {
                q.push_back(*v);
            }
            let out: Vec<i64> = q.into_iter().collect();
            if dev_tx.send(out).is_err() {
                break;
            }
        }
    });
    let mut w_pts = Vec::new();
    let mut r_pts = Vec::new();
    for &s in sizes {
        let reps = reps_for(s).min(512);
        let batch: Vec<i64> = (0..s as i64).collect();
        // warmup
        to_dev.send(batch.clone()).unwrap();
        from_dev.recv().unwrap();
        let t0 = Instant::now();
        for _ in 0..reps {
            to_dev.send(batch.clone()).unwrap();
            std::hint::black_box(from_dev.recv().unwrap());
        }
        let per_roundtrip = t0.elapsed().as_nanos() as f64 / reps as f64;
        w_pts.push((s as f64, per_roundtrip / 2.0));
        r_pts.push((s as f64, per_roundtrip / 2.0));
    }
    drop(to_dev);
    helper.join().unwrap();
    (Curve::new(w_pts).isotonic(), Curve::new(r_pts).isotonic())
}

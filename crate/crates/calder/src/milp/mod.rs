//! Hardware/software partitioning as mixed-integer linear programming.
//!
//! Decision booleans `d[a][p]` place each actor on exactly one partition:
//! software threads `p1..pn` or the accelerator. The objective is predicted
//! execution time:
//!
//! ```text
//! T_p      = sum_a d[a][p] * exec(a, sw)                    (per thread)
//! T_plink  = max_a { d[a][accel] * exec(a, accel) } + T_read + T_write
//! T_exec   = max({T_p} u {T_plink}) + T_intra + T_inter
//! ```
//!
//! with the communication terms built from the tau transfer-time formulas
//! evaluated at each connection's profiled token count and configured buffer
//! capacity, so every coefficient is a constant and the program stays
//! linear. T_inter counts thread crossings asymmetrically: connections
//! between two non-p1 threads are counted once per ordered pair, i.e.
//! twice per unordered pair, while p1/accelerator crossings count once.
//!
//! `evaluate_assignment` computes the same terms arithmetically with the
//! booleans fixed; the LP encoding and this evaluator must agree at every
//! feasible point, which the acceptance suite checks through the emitted
//! LP text itself.

pub mod explore;
pub mod lp;
pub mod solve;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::graph::NetworkGraph;
use crate::plink::{transfer_time_read, transfer_time_write, Curve};
use crate::profile::ProfileReport;
use crate::xcf::PartitionPlan;

/// Per-connection constants entering the model.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConnData {
    pub key: String,
    pub src: usize,
    pub dst: usize,
    pub tokens: u64,
    pub tau_write_ns: f64,
    pub tau_read_ns: f64,
    pub tau_intra_ns: f64,
    pub tau_inter_ns: f64,
}

/// The built model: actors, partitions, and all coefficient tables.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MilpInstance {
    pub actors: Vec<String>,
    pub n_threads: usize,
    pub use_accel: bool,
    /// ns per firing on a software thread; `None` bars the actor from threads.
    pub exec_thread_ns: Vec<Option<f64>>,
    /// ns per firing on the accelerator; `None` bars the actor from it.
    pub exec_accel_ns: Vec<Option<f64>>,
    pub conns: Vec<ConnData>,
    pub max_crossings: Option<usize>,
    /// Cycle-to-ns conversion used for `exec_accel_ns`.
    pub ns_per_cycle: f64,
}

#[derive(Clone, Debug)]
pub struct MilpOptions {
    pub n_threads: usize,
    pub use_accel: bool,
    pub max_crossings: Option<usize>,
    /// Boundary buffer capacity in tokens for crossing connections.
    pub buffer_tokens: u64,
    /// Override the profile's assumed accelerator clock.
    pub assumed_clock_mhz: Option<f64>,
}

impl Default for MilpOptions {
    fn default() -> Self {
        MilpOptions {
            n_threads: 1,
            use_accel: false,
            max_crossings: None,
            buffer_tokens: crate::plink::DEFAULT_BOUNDARY_TOKENS as u64,
            assumed_clock_mhz: None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("actor `{0}` has no profile entry on any allowed platform")]
    Unplaceable(String),
    #[error("model needs at least one software thread")]
    NoThreads,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum EvalError {
    #[error("actor `{actor}` may not be placed on partition `{partition}`")]
    Barred { actor: String, partition: String },
    #[error("assignment has {found} boundary crossings, limit is {limit}")]
    TooManyCrossings { found: usize, limit: usize },
    #[error("assignment malformed: {0}")]
    Malformed(String),
}

/// Term-by-term decomposition of the objective at a fixed assignment.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Breakdown {
    pub objective_ns: f64,
    pub thread_ns: Vec<f64>,
    pub accel_max_ns: f64,
    pub plink_write_ns: f64,
    pub plink_read_ns: f64,
    pub plink_total_ns: f64,
    pub intra_per_thread_ns: Vec<f64>,
    pub plink_intra_ns: f64,
    pub intra_ns: f64,
    pub inter_ns: f64,
    pub crossings: usize,
    pub ns_per_cycle: f64,
}

impl MilpInstance {
    /// Partition count: threads, plus the accelerator when enabled. Thread 0
    /// is p1 (it hosts plink); the accelerator is the last index.
    pub fn n_partitions(&self) -> usize {
        self.n_threads + usize::from(self.use_accel)
    }

    pub fn accel_index(&self) -> Option<usize> {
        self.use_accel.then_some(self.n_threads)
    }

    pub fn partition_name(&self, p: usize) -> String {
        if Some(p) == self.accel_index() {
            "accel".to_string()
        } else {
            format!("p{}", p + 1)
        }
    }

    pub fn allowed(&self, actor: usize, p: usize) -> bool {
        if Some(p) == self.accel_index() {
            self.exec_accel_ns[actor].is_some()
        } else {
            self.exec_thread_ns[actor].is_some()
        }
    }
}

/// Assemble an instance from a graph and profile. Actors missing a profile
/// entry on one platform are barred from it; missing on both is an error.
pub fn build_model(
    graph: &NetworkGraph,
    profile: &ProfileReport,
    plan_configs: Option<&PartitionPlan>,
    opts: &MilpOptions,
) -> Result<MilpInstance, ModelError> {
    if opts.n_threads == 0 {
        return Err(ModelError::NoThreads);
    }
    let clock = opts
        .assumed_clock_mhz
        .unwrap_or(if profile.assumed_clock_mhz > 0.0 {
            profile.assumed_clock_mhz
        } else {
            crate::profile::DEFAULT_ASSUMED_CLOCK_MHZ
        });
    let ns_per_cycle = 1e3 / clock;

    // exec(a, p) enters the model as the actor's total workload time: the
    // thread term sums whole-actor times and the communication terms use
    // whole-run token counts, so per-firing averages are scaled by the
    // profiled firing count
    let actors: Vec<String> = graph.instances.iter().map(|i| i.name.clone()).collect();
    let mut exec_thread_ns = Vec::with_capacity(actors.len());
    let mut exec_accel_ns = Vec::with_capacity(actors.len());
    for name in &actors {
        let firings = profile.firings.get(name).copied().unwrap_or(1).max(1);
        let sw = profile.exec_sw_ns.get(name).map(|avg| avg * firings as f64);
        let hw = if opts.use_accel {
            profile.exec_hw_cycles.get(name).map(|s| {
                if s.total > 0 {
                    s.total as f64 * ns_per_cycle
                } else {
                    s.avg * s.firings.max(1) as f64 * ns_per_cycle
                }
            })
        } else {
            None
        };
        if sw.is_none() && hw.is_none() {
            return Err(ModelError::Unplaceable(name.clone()));
        }
        exec_thread_ns.push(sw);
        exec_accel_ns.push(hw);
    }

    let zero = Curve::linear(0.0);
    let xi_w = profile.xi_write.as_ref().unwrap_or(&zero);
    let xi_r = profile.xi_read.as_ref().unwrap_or(&zero);
    let xi_intra = profile.xi_intra.as_ref().unwrap_or(&zero);
    let xi_inter = profile.xi_inter.as_ref().unwrap_or(&zero);

    let mut conns = Vec::with_capacity(graph.connections.len());
    for conn in &graph.connections {
        let key = graph.connection_key(conn);
        let n = profile.tokens.get(&key).copied().unwrap_or(0);
        let fifo_depth = plan_configs
            .and_then(|p| p.channel_configs.get(&key))
            .and_then(|c| c.depth)
            .unwrap_or(crate::hwsim::DEFAULT_QUEUE_DEPTH as u64)
            .max(1);
        let boundary = plan_configs
            .and_then(|p| p.channel_configs.get(&key))
            .and_then(|c| c.boundary_bytes)
            .map(|b| (b / crate::plink::TOKEN_BYTES).max(1))
            .unwrap_or(opts.buffer_tokens)
            .max(1);
        conns.push(ConnData {
            key,
            src: conn.source.instance,
            dst: conn.target.instance,
            tokens: n,
            tau_write_ns: transfer_time_write(n, boundary, xi_w),
            tau_read_ns: transfer_time_read(n, boundary, xi_r),
            tau_intra_ns: transfer_time_write(n, fifo_depth, xi_intra),
            tau_inter_ns: transfer_time_write(n, fifo_depth, xi_inter),
        });
    }

    Ok(MilpInstance {
        actors,
        n_threads: opts.n_threads,
        use_accel: opts.use_accel,
        exec_thread_ns,
        exec_accel_ns,
        conns,
        max_crossings: opts.max_crossings,
        ns_per_cycle,
    })
}

/// Direct arithmetic evaluation of the model at a fixed total assignment
/// (`assign[a]` = partition index). The independent oracle against the LP
/// encoding.
pub fn evaluate_assignment(inst: &MilpInstance, assign: &[usize]) -> Result<Breakdown, EvalError> {
    if assign.len() != inst.actors.len() {
        return Err(EvalError::Malformed(format!(
            "{} assignments for {} actors",
            assign.len(),
            inst.actors.len()
        )));
    }
    let parts = inst.n_partitions();
    for (a, &p) in assign.iter().enumerate() {
        if p >= parts {
            return Err(EvalError::Malformed(format!(
                "actor `{}` assigned to partition {p} of {parts}",
                inst.actors[a]
            )));
        }
        if !inst.allowed(a, p) {
            return Err(EvalError::Barred {
                actor: inst.actors[a].clone(),
                partition: inst.partition_name(p),
            });
        }
    }
    let accel = inst.accel_index();
    let on_accel = |a: usize| Some(assign[a]) == accel;

    let mut thread_ns = vec![0.0; inst.n_threads];
    let mut accel_max_ns: f64 = 0.0;
    for (a, &p) in assign.iter().enumerate() {
        if on_accel(a) {
            accel_max_ns = accel_max_ns.max(inst.exec_accel_ns[a].unwrap());
        } else {
            thread_ns[p] += inst.exec_thread_ns[a].unwrap();
        }
    }

    let mut plink_write_ns = 0.0;
    let mut plink_read_ns = 0.0;
    let mut crossings = 0usize;
    for c in &inst.conns {
        let s_hw = on_accel(c.src);
        let t_hw = on_accel(c.dst);
        if !s_hw && t_hw {
            plink_write_ns += c.tau_write_ns;
            crossings += 1;
        }
        if s_hw && !t_hw {
            plink_read_ns += c.tau_read_ns;
            crossings += 1;
        }
    }
    if let Some(m) = inst.max_crossings {
        if crossings > m {
            return Err(EvalError::TooManyCrossings {
                found: crossings,
                limit: m,
            });
        }
    }
    let plink_total_ns = accel_max_ns + plink_write_ns + plink_read_ns;

    // intra-core: same-thread connections, plus p1<->accel crossings folded
    // into p1's term because the data passes through plink's thread
    let mut intra_per_thread_ns = vec![0.0; inst.n_threads];
    let mut plink_intra_ns = 0.0;
    for c in &inst.conns {
        if !on_accel(c.src) && assign[c.src] == assign[c.dst] && !on_accel(c.dst) {
            intra_per_thread_ns[assign[c.src]] += c.tau_intra_ns;
        }
        let p1_to_acc = assign[c.src] == 0 && on_accel(c.dst);
        let acc_to_p1 = on_accel(c.src) && assign[c.dst] == 0;
        if p1_to_acc || acc_to_p1 {
            plink_intra_ns += c.tau_intra_ns;
        }
    }
    let intra_ns = (0..inst.n_threads)
        .map(|p| intra_per_thread_ns[p] + if p == 0 { plink_intra_ns } else { 0.0 })
        .fold(0.0f64, f64::max);

    // inter-core crossing count, taken literally from the model: the first sum
    // handles q <-> {p1, accel} once per thread q; the second counts each
    // ordered non-p1 thread pair, which double-counts unordered pairs.
    let mut inter_ns = 0.0;
    for c in &inst.conns {
        let s = assign[c.src];
        let t = assign[c.dst];
        let s_side1 = s == 0 || on_accel(c.src);
        let t_side1 = t == 0 || on_accel(c.dst);
        let mut multiplicity = 0u32;
        for q in 1..inst.n_threads {
            let first = s_side1 && t == q && !on_accel(c.dst);
            let second = s == q && !on_accel(c.src) && t_side1;
            if first || second {
                multiplicity += 1;
            }
        }
        for p in 1..inst.n_threads {
            for q in 1..inst.n_threads {
                if q == p {
                    continue;
                }
                let first = s == p && !on_accel(c.src) && t == q && !on_accel(c.dst);
                let second = s == q && !on_accel(c.src) && t == p && !on_accel(c.dst);
                if first || second {
                    multiplicity += 1;
                }
            }
        }
        inter_ns += multiplicity as f64 * c.tau_inter_ns;
    }

    let exec_max = thread_ns.iter().copied().fold(plink_total_ns, f64::max);
    let objective_ns = exec_max + intra_ns + inter_ns;
    Ok(Breakdown {
        objective_ns,
        thread_ns,
        accel_max_ns,
        plink_write_ns,
        plink_read_ns,
        plink_total_ns,
        intra_per_thread_ns,
        plink_intra_ns,
        intra_ns,
        inter_ns,
        crossings,
        ns_per_cycle: inst.ns_per_cycle,
    })
}

/// Build a partition plan from a solved assignment.
pub fn plan_from_assignment(
    graph: &NetworkGraph,
    inst: &MilpInstance,
    assign: &[usize],
    boundary_tokens: u64,
) -> PartitionPlan {
    use crate::xcf::{ChannelConfig, Partition, PartitionKind};
    let mut partitions: Vec<Partition> = (0..inst.n_threads)
        .map(|p| Partition {
            id: format!("p{}", p + 1),
            kind: PartitionKind::Software,
            codegen: Some("sw".into()),
            members: vec![],
            settings: vec![],
        })
        .collect();
    let accel_idx = inst.accel_index();
    if accel_idx.is_some() {
        partitions.push(Partition {
            id: "accel".into(),
            kind: PartitionKind::Accelerator,
            codegen: Some("hw".into()),
            members: vec![],
            settings: vec![],
        });
    }
    for (a, &p) in assign.iter().enumerate() {
        partitions[p].members.push(inst.actors[a].clone());
    }
    let mut channel_configs = BTreeMap::new();
    if let Some(acc) = accel_idx {
        for c in &inst.conns {
            if (assign[c.src] == acc) != (assign[c.dst] == acc) {
                channel_configs.insert(
                    c.key.clone(),
                    ChannelConfig {
                        depth: None,
                        boundary_bytes: Some(boundary_tokens * crate::plink::TOKEN_BYTES),
                    },
                );
            }
        }
    }
    PartitionPlan {
        network: graph.name.clone(),
        partitions,
        channel_configs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Instance mirroring the worked example: one actor on p1 at 100 ns, one
    /// on the accelerator at 40 cycles under a 1 GHz guess, one connection
    /// with n=8, b=4, xi_w(k)=10k, xi_intra(k)=k.
    pub(crate) fn two_actor_instance() -> MilpInstance {
        MilpInstance {
            actors: vec!["a1".into(), "a2".into()],
            n_threads: 1,
            use_accel: true,
            exec_thread_ns: vec![Some(100.0), Some(55.0)],
            exec_accel_ns: vec![Some(90.0), Some(40.0)],
            conns: vec![ConnData {
                key: "a1.OUT->a2.IN".into(),
                src: 0,
                dst: 1,
                tokens: 8,
                tau_write_ns: 80.0, // xi_w(4)*2 + xi_w(0)
                tau_read_ns: 80.0,
                tau_intra_ns: 8.0, // xi_intra(4)*2
                tau_inter_ns: 24.0,
            }],
            max_crossings: None,
            ns_per_cycle: 1.0,
        }
    }

    #[test]
    fn hand_computed_objective_128ns() {
        let inst = two_actor_instance();
        let b = evaluate_assignment(&inst, &[0, 1]).unwrap();
        assert_eq!(b.thread_ns, vec![100.0]);
        assert_eq!(b.accel_max_ns, 40.0);
        assert_eq!(b.plink_write_ns, 80.0);
        assert_eq!(b.plink_read_ns, 0.0);
        assert_eq!(b.plink_total_ns, 120.0);
        assert_eq!(b.plink_intra_ns, 8.0);
        assert_eq!(b.intra_ns, 8.0);
        assert_eq!(b.inter_ns, 0.0);
        assert_eq!(b.objective_ns, 128.0);
        assert_eq!(b.crossings, 1);
    }

    #[test]
    fn single_actor_single_thread_is_pure_exec() {
        let inst = MilpInstance {
            actors: vec!["a".into()],
            n_threads: 1,
            use_accel: false,
            exec_thread_ns: vec![Some(77.0)],
            exec_accel_ns: vec![None],
            conns: vec![],
            max_crossings: None,
            ns_per_cycle: 1.0,
        };
        let b = evaluate_assignment(&inst, &[0]).unwrap();
        assert_eq!(b.objective_ns, 77.0);
    }

    #[test]
    fn all_on_one_thread_has_no_inter_cost() {
        let mut inst = two_actor_instance();
        inst.use_accel = false;
        inst.n_threads = 2;
        let b = evaluate_assignment(&inst, &[0, 0]).unwrap();
        assert_eq!(b.inter_ns, 0.0);
        assert_eq!(b.intra_ns, 8.0);
        assert_eq!(b.objective_ns, 155.0 + 8.0);
    }

    #[test]
    fn p1_to_thread_crossing_counts_once_and_pairs_twice() {
        // three threads, conn from p1 to p2 counts once; conn p2->p3 twice
        let mk = |src: usize, dst: usize| MilpInstance {
            actors: vec!["x".into(), "y".into(), "z".into()],
            n_threads: 3,
            use_accel: false,
            exec_thread_ns: vec![Some(1.0), Some(1.0), Some(1.0)],
            exec_accel_ns: vec![None, None, None],
            conns: vec![ConnData {
                key: "x.O->y.I".into(),
                src,
                dst,
                tokens: 1,
                tau_write_ns: 0.0,
                tau_read_ns: 0.0,
                tau_intra_ns: 0.0,
                tau_inter_ns: 5.0,
            }],
            max_crossings: None,
            ns_per_cycle: 1.0,
        };
        let b = evaluate_assignment(&mk(0, 1), &[0, 1, 2]).unwrap();
        assert_eq!(b.inter_ns, 5.0, "p1 -> p2 counts once");
        let b = evaluate_assignment(&mk(1, 2), &[0, 1, 2]).unwrap();
        assert_eq!(
            b.inter_ns, 10.0,
            "p2 -> p3 counts for both ordered pairs, as the formula reads"
        );
    }

    #[test]
    fn crossing_limit_enforced() {
        let mut inst = two_actor_instance();
        inst.max_crossings = Some(0);
        assert_eq!(
            evaluate_assignment(&inst, &[0, 1]).unwrap_err(),
            EvalError::TooManyCrossings { found: 1, limit: 0 }
        );
        assert!(evaluate_assignment(&inst, &[0, 0]).is_ok());
    }

    #[test]
    fn barred_platform_rejected() {
        let mut inst = two_actor_instance();
        inst.exec_accel_ns[1] = None;
        assert!(matches!(
            evaluate_assignment(&inst, &[0, 1]).unwrap_err(),
            EvalError::Barred { .. }
        ));
    }
}

//! Exact branch-and-bound over total assignments.
//!
//! Depth-first in lexicographic order (actors in index order, partitions
//! p1, p2, ..., accelerator last) with an admissible bound that ignores
//! communication: the max of current thread loads, assigned accelerator
//! execs, and each unassigned actor's best-platform time never exceeds the
//! true objective. Pruning on `bound >= best` plus strict-improvement
//! updates make the first optimum found the lexicographically smallest one.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{evaluate_assignment, Breakdown, EvalError, MilpInstance};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    /// Search hit a limit; the reported solution is the best found.
    Feasible,
    Infeasible,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PartitionSolution {
    pub assignment: Vec<usize>,
    pub predicted_ns: f64,
    pub breakdown: Breakdown,
    pub status: SolveStatus,
    pub nodes_explored: u64,
}

#[derive(Clone, Copy, Debug)]
pub struct SolveLimits {
    pub max_actors: usize,
    pub max_partitions: usize,
    pub timeout: Duration,
}

impl Default for SolveLimits {
    fn default() -> Self {
        SolveLimits {
            max_actors: 16,
            max_partitions: 6,
            timeout: Duration::from_secs(60),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SolveError {
    #[error(
        "instance too large for exact search ({actors} actors, {partitions} partitions); \
         emit an LP file for an external solver instead"
    )]
    TooLarge { actors: usize, partitions: usize },
    #[error("no feasible assignment exists")]
    Infeasible,
}

struct Search<'a> {
    inst: &'a MilpInstance,
    deadline: Instant,
    timed_out: bool,
    nodes: u64,
    best_obj: f64,
    best: Option<(Vec<usize>, Breakdown)>,
    assign: Vec<usize>,
    thread_load: Vec<f64>,
    accel_max: f64,
    /// Suffix maxima of each unassigned actor's best-platform time.
    tail_bound: Vec<f64>,
}

impl Search<'_> {
    fn best_platform_ns(inst: &MilpInstance, a: usize) -> f64 {
        let sw = inst.exec_thread_ns[a].unwrap_or(f64::INFINITY);
        let hw = inst.exec_accel_ns[a].unwrap_or(f64::INFINITY);
        sw.min(hw)
    }

    fn dfs(&mut self, depth: usize) {
        self.nodes += 1;
        if self.nodes.is_multiple_of(4096) && Instant::now() >= self.deadline {
            self.timed_out = true;
        }
        if self.timed_out {
            return;
        }
        if depth == self.inst.actors.len() {
            match evaluate_assignment(self.inst, &self.assign) {
                Ok(bd) => {
                    if bd.objective_ns < self.best_obj {
                        self.best_obj = bd.objective_ns;
                        self.best = Some((self.assign.clone(), bd));
                    }
                }
                Err(EvalError::TooManyCrossings { .. }) => {}
                Err(_) => {}
            }
            return;
        }
        // admissible bound: exec terms only, communication is nonnegative
        let bound = self
            .thread_load
            .iter()
            .copied()
            .fold(self.accel_max.max(self.tail_bound[depth]), f64::max);
        if bound >= self.best_obj {
            return;
        }
        let accel = self.inst.accel_index();
        for p in 0..self.inst.n_partitions() {
            if !self.inst.allowed(depth, p) {
                continue;
            }
            self.assign[depth] = p;
            if Some(p) == accel {
                let old = self.accel_max;
                self.accel_max = old.max(self.inst.exec_accel_ns[depth].unwrap());
                self.dfs(depth + 1);
                self.accel_max = old;
            } else {
                let e = self.inst.exec_thread_ns[depth].unwrap();
                self.thread_load[p] += e;
                self.dfs(depth + 1);
                self.thread_load[p] -= e;
            }
        }
    }
}

/// Find the minimum-objective assignment by exhaustive search with pruning.
/// Deterministic: among equal optima the lexicographically smallest
/// assignment wins.
pub fn solve_exact(
    inst: &MilpInstance,
    limits: &SolveLimits,
) -> Result<PartitionSolution, SolveError> {
    if inst.actors.len() > limits.max_actors || inst.n_partitions() > limits.max_partitions {
        return Err(SolveError::TooLarge {
            actors: inst.actors.len(),
            partitions: inst.n_partitions(),
        });
    }
    let n = inst.actors.len();
    let mut tail_bound = vec![0.0f64; n + 1];
    for a in (0..n).rev() {
        tail_bound[a] = tail_bound[a + 1].max(Search::best_platform_ns(inst, a));
    }
    let mut search = Search {
        inst,
        deadline: Instant::now() + limits.timeout,
        timed_out: false,
        nodes: 0,
        best_obj: f64::INFINITY,
        best: None,
        assign: vec![0; n],
        thread_load: vec![0.0; inst.n_threads],
        accel_max: 0.0,
        tail_bound,
    };
    search.dfs(0);
    let nodes = search.nodes;
    let timed_out = search.timed_out;
    match search.best {
        Some((assignment, breakdown)) => Ok(PartitionSolution {
            predicted_ns: breakdown.objective_ns,
            assignment,
            breakdown,
            status: if timed_out {
                SolveStatus::Feasible
            } else {
                SolveStatus::Optimal
            },
            nodes_explored: nodes,
        }),
        None if timed_out => Err(SolveError::Infeasible),
        None => Err(SolveError::Infeasible),
    }
}

/// Plain exhaustive enumeration, no pruning: the oracle for `solve_exact`.
pub fn brute_force(inst: &MilpInstance) -> Option<(Vec<usize>, f64)> {
    let n = inst.actors.len();
    let parts = inst.n_partitions();
    let mut best: Option<(Vec<usize>, f64)> = None;
    let mut assign = vec![0usize; n];
    loop {
        if let Ok(bd) = evaluate_assignment(inst, &assign) {
            let better = match &best {
                Some((_, b)) => bd.objective_ns < *b,
                None => true,
            };
            if better {
                best = Some((assign.clone(), bd.objective_ns));
            }
        }
        // odometer increment in lexicographic order
        let mut i = n;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            assign[i] += 1;
            if assign[i] < parts {
                break;
            }
            assign[i] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::two_actor_instance;
    use super::super::{ConnData, MilpInstance};
    use super::*;

    use crate::testutil::random_milp_instance as random_instance;

    #[test]
    fn heavy_traffic_colocates() {
        // two actors, two threads, crushing inter-core cost
        let inst = MilpInstance {
            actors: vec!["a".into(), "b".into()],
            n_threads: 2,
            use_accel: false,
            exec_thread_ns: vec![Some(100.0), Some(100.0)],
            exec_accel_ns: vec![None, None],
            conns: vec![ConnData {
                key: "a->b".into(),
                src: 0,
                dst: 1,
                tokens: 1000,
                tau_write_ns: 0.0,
                tau_read_ns: 0.0,
                tau_intra_ns: 10.0,
                tau_inter_ns: 100_000.0,
            }],
            max_crossings: None,
            ns_per_cycle: 1.0,
        };
        let sol = solve_exact(&inst, &SolveLimits::default()).unwrap();
        assert_eq!(sol.assignment[0], sol.assignment[1], "must co-locate");
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert_eq!(sol.predicted_ns, 210.0);
    }

    #[test]
    fn independent_equal_actors_spread_out() {
        let inst = MilpInstance {
            actors: (0..4).map(|i| format!("a{i}")).collect(),
            n_threads: 4,
            use_accel: false,
            exec_thread_ns: vec![Some(50.0); 4],
            exec_accel_ns: vec![None; 4],
            conns: vec![],
            max_crossings: None,
            ns_per_cycle: 1.0,
        };
        let sol = solve_exact(&inst, &SolveLimits::default()).unwrap();
        assert_eq!(sol.predicted_ns, 50.0);
        // lexicographically smallest optimum: one actor per thread in order
        assert_eq!(sol.assignment, vec![0, 1, 2, 3]);
    }

    #[test]
    fn matches_brute_force_on_random_instances() {
        for seed in 0..10 {
            let inst = random_instance(seed, 6, 2, seed % 2 == 0);
            let sol = solve_exact(&inst, &SolveLimits::default()).unwrap();
            let (bf_assign, bf_obj) = brute_force(&inst).unwrap();
            assert_eq!(
                sol.predicted_ns, bf_obj,
                "seed {seed}: bnb {} vs brute {}",
                sol.predicted_ns, bf_obj
            );
            assert_eq!(sol.assignment, bf_assign, "lexicographic tie-break");
        }
    }

    #[test]
    fn refuses_oversized_instances() {
        let inst = random_instance(1, 20, 2, false);
        assert!(matches!(
            solve_exact(&inst, &SolveLimits::default()),
            Err(SolveError::TooLarge { .. })
        ));
    }

    #[test]
    fn adding_a_thread_never_hurts() {
        for seed in 20..26 {
            let a = random_instance(seed, 5, 2, false);
            let mut b = a.clone();
            b.n_threads = 3;
            let sa = solve_exact(&a, &SolveLimits::default()).unwrap();
            let sb = solve_exact(&b, &SolveLimits::default()).unwrap();
            assert!(
                sb.predicted_ns <= sa.predicted_ns + 1e-9,
                "seed {seed}: {} threads {} > {}",
                3,
                sb.predicted_ns,
                sa.predicted_ns
            );
        }
    }

    #[test]
    fn scaling_covariance() {
        let inst = two_actor_instance();
        let sol = solve_exact(&inst, &SolveLimits::default()).unwrap();
        let k = 3.5;
        let mut scaled = inst.clone();
        for e in scaled.exec_thread_ns.iter_mut().flatten() {
            *e *= k;
        }
        for e in scaled.exec_accel_ns.iter_mut().flatten() {
            *e *= k;
        }
        for c in &mut scaled.conns {
            c.tau_write_ns *= k;
            c.tau_read_ns *= k;
            c.tau_intra_ns *= k;
            c.tau_inter_ns *= k;
        }
        let ssol = solve_exact(&scaled, &SolveLimits::default()).unwrap();
        assert!((ssol.predicted_ns - k * sol.predicted_ns).abs() <= 1e-9 * ssol.predicted_ns);
        assert_eq!(ssol.assignment, sol.assignment);
    }
}

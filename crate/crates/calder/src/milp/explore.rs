//! Design-space exploration: one exact solve per (thread count, accelerator
//! on/off, boundary buffer size) combination, with an XCF emitted per
//! solution, a CSV summary, and plot data for throughput-vs-cores charts.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::solve::{solve_exact, PartitionSolution, SolveLimits};
use super::{build_model, plan_from_assignment, MilpOptions};
use crate::graph::NetworkGraph;
use crate::profile::ProfileReport;
use crate::xcf::emit_xcf;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AccelMode {
    On,
    Off,
    Both,
}

impl AccelMode {
    fn variants(self) -> Vec<bool> {
        match self {
            AccelMode::On => vec![true],
            AccelMode::Off => vec![false],
            AccelMode::Both => vec![false, true],
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExploreConfig {
    pub thread_range: Vec<usize>,
    pub accel: AccelMode,
    /// Boundary buffer sizes in tokens, swept for accelerator points.
    pub buffer_sizes: Vec<u64>,
    pub max_crossings: Option<usize>,
    pub assumed_clock_mhz: Option<f64>,
    pub limits: SolveLimits,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExplorePoint {
    pub n_threads: usize,
    pub accel: bool,
    pub buffer_tokens: u64,
    pub result: Result<SolvedPoint, String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolvedPoint {
    pub solution: PartitionSolution,
    pub crossings: usize,
    pub accel_members: Vec<String>,
    pub xcf: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExploreReport {
    pub points: Vec<ExplorePoint>,
    /// Distinct nonempty accelerator member sets across all solutions — the
    /// number of hardware builds the sweep would actually require.
    pub unique_hw_partitions: usize,
    /// Predicted time of the single-thread software baseline, for
    /// normalization.
    pub baseline_ns: f64,
}

/// Run the sweep. Individual solve failures are recorded per point and the
/// exploration continues.
pub fn explore(
    graph: &NetworkGraph,
    profile: &ProfileReport,
    cfg: &ExploreConfig,
) -> ExploreReport {
    assert!(
        !cfg.thread_range.is_empty(),
        "thread range must be nonempty"
    );
    let solve_point = |n_threads: usize, accel: bool, buffer: u64| -> Result<SolvedPoint, String> {
        let opts = MilpOptions {
            n_threads,
            use_accel: accel,
            max_crossings: cfg.max_crossings,
            buffer_tokens: buffer,
            assumed_clock_mhz: cfg.assumed_clock_mhz,
        };
        let inst = build_model(graph, profile, None, &opts).map_err(|e| e.to_string())?;
        let solution = solve_exact(&inst, &cfg.limits).map_err(|e| e.to_string())?;
        let plan = plan_from_assignment(graph, &inst, &solution.assignment, buffer);
        let accel_members = plan
            .accelerator()
            .map(|p| {
                let mut m = p.members.clone();
                m.sort();
                m
            })
            .unwrap_or_default();
        Ok(SolvedPoint {
            crossings: solution.breakdown.crossings,
            accel_members,
            xcf: emit_xcf(&plan),
            solution,
        })
    };

    // single-thread software baseline, always computed for normalization
    let baseline_ns = solve_point(1, false, cfg.buffer_sizes.first().copied().unwrap_or(1))
        .map(|p| p.solution.predicted_ns)
        .unwrap_or(f64::NAN);

    let mut points = Vec::new();
    for &n_threads in &cfg.thread_range {
        for accel in cfg.accel.variants() {
            let buffers: &[u64] = if accel {
                &cfg.buffer_sizes
            } else {
                &cfg.buffer_sizes[..1]
            };
            for &buffer in buffers {
                points.push(ExplorePoint {
                    n_threads,
                    accel,
                    buffer_tokens: buffer,
                    result: solve_point(n_threads, accel, buffer),
                });
            }
        }
    }

    let unique: BTreeSet<Vec<String>> = points
        .iter()
        .filter_map(|p| p.result.as_ref().ok())
        .map(|s| s.accel_members.clone())
        .filter(|m| !m.is_empty())
        .collect();

    ExploreReport {
        points,
        unique_hw_partitions: unique.len(),
        baseline_ns,
    }
}

impl ExploreReport {
    /// Summary CSV: one row per point.
    pub fn to_csv(&self, xcf_paths: &[Option<String>]) -> String {
        let mut out = String::from("threads,accel,buffer_tokens,predicted_ns,crossings,xcf\n");
        for (i, p) in self.points.iter().enumerate() {
            let path = xcf_paths.get(i).and_then(|o| o.as_deref()).unwrap_or("");
            match &p.result {
                Ok(s) => {
                    writeln!(
                        out,
                        "{},{},{},{},{},{}",
                        p.n_threads,
                        p.accel,
                        p.buffer_tokens,
                        s.solution.predicted_ns,
                        s.crossings,
                        path
                    )
                    .unwrap();
                }
                Err(e) => {
                    writeln!(
                        out,
                        "{},{},{},error,error,\"{}\"",
                        p.n_threads,
                        p.accel,
                        p.buffer_tokens,
                        e.replace('"', "'")
                    )
                    .unwrap();
                }
            }
        }
        out
    }

    /// Plot data: `threads accel normalized_throughput` per solved point,
    /// throughput normalized to the single-thread software baseline.
    pub fn plot_data(&self) -> String {
        let mut out = String::from("# threads accel normalized_throughput\n");
        for p in &self.points {
            if let Ok(s) = &p.result {
                let norm = self.baseline_ns / s.solution.predicted_ns;
                writeln!(out, "{} {} {:.6}", p.n_threads, u8::from(p.accel), norm).unwrap();
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::profile_software;
    use crate::runtime::RunOptions;
    use crate::testutil::top_filter_graph;
    use crate::xcf::{parse_xcf, PartitionPlan};

    fn profile_with_hw() -> (crate::graph::NetworkGraph, ProfileReport) {
        let graph = top_filter_graph();
        let (host, _) = crate::testutil::collecting_host();
        let plan = PartitionPlan::single_thread(&graph);
        let (mut report, _) =
            profile_software(&graph, &plan, &host, &RunOptions::default()).unwrap();
        // synthetic hardware numbers and curves keep the test host-independent
        for (i, name) in ["source", "filter", "sink"].iter().enumerate() {
            report.exec_hw_cycles.insert(
                name.to_string(),
                crate::hwsim::ActorCycleStats {
                    min: 1,
                    max: 3,
                    avg: 2.0 + i as f64,
                    firings: 100,
                    total: 200,
                },
            );
        }
        report.xi_intra = Some(crate::plink::Curve::linear(1.0));
        report.xi_inter = Some(crate::plink::Curve::linear(4.0));
        report.xi_write = Some(crate::plink::Curve::linear(12.0));
        report.xi_read = Some(crate::plink::Curve::linear(12.0));
        (graph, report)
    }

    #[test]
    fn sweep_produces_valid_xcfs_and_counts_unique_hw() {
        let (graph, profile) = profile_with_hw();
        let cfg = ExploreConfig {
            thread_range: vec![1, 2],
            accel: AccelMode::Both,
            buffer_sizes: vec![1024, 4096],
            max_crossings: None,
            assumed_clock_mhz: Some(300.0),
            limits: SolveLimits::default(),
        };
        let report = explore(&graph, &profile, &cfg);
        // 2 thread counts x (off + on x 2 buffers) = 6 points
        assert_eq!(report.points.len(), 6);
        for p in &report.points {
            let s = p.result.as_ref().expect("all points solve");
            let plan = parse_xcf(&s.xcf, &graph).expect("emitted XCF parses");
            plan.validate(&graph).unwrap();
        }
        assert!(report.baseline_ns > 0.0);
        let csv = report.to_csv(&vec![None; report.points.len()]);
        assert_eq!(csv.lines().count(), 7);
        let plot = report.plot_data();
        assert!(plot.lines().count() >= 7);
        // identical hardware member sets across buffer sizes deduplicate
        let distinct: std::collections::BTreeSet<Vec<String>> = report
            .points
            .iter()
            .filter_map(|p| p.result.as_ref().ok())
            .map(|s| s.accel_members.clone())
            .filter(|m| !m.is_empty())
            .collect();
        assert_eq!(report.unique_hw_partitions, distinct.len());
    }

    #[test]
    fn single_thread_no_accel_is_the_baseline() {
        let (graph, profile) = profile_with_hw();
        let cfg = ExploreConfig {
            thread_range: vec![1],
            accel: AccelMode::Off,
            buffer_sizes: vec![1024],
            max_crossings: None,
            assumed_clock_mhz: None,
            limits: SolveLimits::default(),
        };
        let report = explore(&graph, &profile, &cfg);
        assert_eq!(report.points.len(), 1);
        let s = report.points[0].result.as_ref().unwrap();
        assert_eq!(s.solution.predicted_ns, report.baseline_ns);
        assert_eq!(report.unique_hw_partitions, 0);
    }
}

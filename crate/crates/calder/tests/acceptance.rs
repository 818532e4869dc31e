//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured evidence. Run with `cargo test --test acceptance -- --nocapture`.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use calder::am::build_siam;
use calder::eval::{EvalCtx, HostTable};
use calder::hwsim::{
    run_controller_hw, ActorCycleStats, ControllerKind, CostTable, SimBuild, Simulator,
    DEFAULT_CYCLE_CAP, PROTOCOL_SLACK,
};
use calder::milp::lp::{derived_point, emit_lp, parse_lp};
use calder::milp::solve::{brute_force, solve_exact, SolveLimits, SolveStatus};
use calder::milp::{evaluate_assignment, MilpInstance};
use calder::plink::{transfer_time_read, transfer_time_write, Curve};
use calder::reference::{basic_select, run_reference, EvalCounter, Selection};
use calder::ring;
use calder::runtime::{run_network, RunOptions};
use calder::testutil::{
    collecting_host, generated_graph, listing2_xcf, random_milp_instance, random_plan,
    top_filter_graph, BufferIo, GenConfig, NetShape,
};
use calder::xcf::{parse_xcf, PartitionPlan};

/// Criterion 1: compile and run the bundled three-actor network with the
/// deterministic rand stub; the sink trace equals the reference
/// interpreter's exactly; the run terminates well under five seconds.
#[test]
fn criterion_1_end_to_end_top_filter() {
    let started = Instant::now();
    let graph = top_filter_graph();
    let (host, collected) = collecting_host();
    let oracle = run_reference(&graph, &host, 10_000_000).unwrap();
    collected.lock().unwrap().clear();

    let plan = PartitionPlan::single_thread(&graph);
    let options = RunOptions {
        trace: true,
        ..Default::default()
    };
    let run = run_network(&graph, &plan, &host, &options).unwrap();

    let sink_key = "filter.OUT->sink.IN";
    assert_eq!(
        run.traces.as_ref().unwrap()[sink_key],
        oracle.traces[sink_key],
        "sink trace differs from the reference interpreter"
    );
    assert_eq!(*collected.lock().unwrap(), oracle.traces[sink_key]);
    assert_eq!(run.firings["source"], 4096);
    assert!(!run.channels_nonempty_at_exit);
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}");
    println!(
        "ACCEPTANCE 1 PASS: sink trace of {} tokens equals the reference; run took {elapsed:?}",
        oracle.traces[sink_key].len()
    );
}

/// Criterion 2: over 50 randomized partition plans (1..=4 threads, with and
/// without the accelerator) across five generated deterministic networks,
/// every channel's token trace is byte-identical to the single-thread
/// baseline.
#[test]
fn criterion_2_cross_partition_trace_equivalence() {
    let started = Instant::now();
    let shapes = [
        (NetShape::Pipeline { stages: 3 }, 101u64),
        (NetShape::Pipeline { stages: 5 }, 307),
        (NetShape::Pipeline { stages: 2 }, 998),
        (NetShape::Diamond, 412),
        (NetShape::Cycle, 75),
    ];
    let host = HostTable::with_defaults();
    let mut rng = StdRng::seed_from_u64(20260811);
    let mut plans_checked = 0usize;
    for (shape, seed) in shapes {
        let cfg = GenConfig {
            seed,
            tokens: 240,
            shape,
        };
        let graph = generated_graph(&cfg);
        let options = RunOptions {
            trace: true,
            ..Default::default()
        };
        let baseline = run_network(
            &graph,
            &PartitionPlan::single_thread(&graph),
            &host,
            &options,
        )
        .unwrap();
        let baseline_traces = baseline.traces.as_ref().unwrap();
        assert!(!baseline.channels_nonempty_at_exit);

        for _ in 0..10 {
            let n_threads = rng.gen_range(1..=4);
            let use_accel = rng.gen_bool(0.5);
            let plan = random_plan(&graph, &mut rng, n_threads, use_accel);
            let run = run_network(&graph, &plan, &host, &options)
                .unwrap_or_else(|e| panic!("{shape:?} plan {plan:?} failed: {e}"));
            let traces = run.traces.as_ref().unwrap();
            assert_eq!(
                traces.len(),
                baseline_traces.len(),
                "trace key sets differ under {plan:?}"
            );
            for (key, expect) in baseline_traces {
                assert_eq!(
                    traces.get(key),
                    Some(expect),
                    "channel {key} diverged from baseline under {n_threads} threads, accel={use_accel}"
                );
            }
            plans_checked += 1;
        }
    }
    let elapsed = started.elapsed();
    assert!(plans_checked >= 50);
    assert!(
        elapsed.as_secs_f64() < 120.0,
        "equivalence sweep took {elapsed:?}"
    );
    println!(
        "ACCEPTANCE 2 PASS: {plans_checked} randomized plans over 5 networks trace-identical in {elapsed:?}"
    );
}

/// Criterion 3: across >= 1000 seeded simulator schedules, idleness is never
/// declared while an action is enabled, and it is declared within
/// K * |triggers| cycles of true quiescence, K = max invocation cost plus
/// the documented protocol slack.
#[test]
fn criterion_3_idleness_safety_and_liveness() {
    let shapes = [
        NetShape::Pipeline { stages: 2 },
        NetShape::Diamond,
        NetShape::Cycle,
    ];
    let host = HostTable::with_defaults();
    let mut runs = 0u64;
    for (si, shape) in shapes.into_iter().enumerate() {
        let cfg = GenConfig {
            seed: 7000 + si as u64,
            tokens: 6,
            shape,
        };
        let graph = generated_graph(&cfg);
        let machines: std::collections::HashMap<_, _> = graph
            .instances
            .iter()
            .map(|i| (i.name.clone(), Arc::new(build_siam(&i.actor).unwrap())))
            .collect();
        // the whole network on the device: sources run autonomously
        let plan = {
            use calder::xcf::{Partition, PartitionKind};
            PartitionPlan {
                network: graph.name.clone(),
                partitions: vec![
                    Partition {
                        id: "accel".into(),
                        kind: PartitionKind::Accelerator,
                        codegen: None,
                        members: graph.instances.iter().map(|i| i.name.clone()).collect(),
                        settings: vec![],
                    },
                    Partition {
                        id: "p1".into(),
                        kind: PartitionKind::Software,
                        codegen: None,
                        members: vec![],
                        settings: vec![],
                    },
                ],
                channel_configs: Default::default(),
            }
        };
        for seed in 0..334u64 {
            let mut sim = Simulator::build(
                SimBuild {
                    graph: &graph,
                    plan: &plan,
                    host: &host,
                    cost: CostTable::default(),
                    seed,
                    cycle_cap: DEFAULT_CYCLE_CAP,
                    default_depth: 16,
                    trace: false,
                    controller: ControllerKind::default(),
                },
                &machines,
            )
            .unwrap();
            let stats = sim.run_until_idle().unwrap();
            // (a) safety: a post-hoc scan finds no enabled action
            if let Some(who) = sim.any_enabled_action().unwrap() {
                panic!("seed {seed}: idleness declared while {who} was enabled");
            }
            // (b) liveness: declaration within K * |triggers| of quiescence
            let triggers = sim.report().triggers as u64;
            let k = stats.max_invocation_cost + PROTOCOL_SLACK;
            let latency = stats.declared_idle_at - stats.last_exec_cycle;
            assert!(
                latency <= k * triggers.max(1),
                "seed {seed}: idle latency {latency} > K*triggers = {}",
                k * triggers.max(1)
            );
            runs += 1;
        }
    }
    assert!(runs >= 1000);
    println!("ACCEPTANCE 3 PASS: {runs} seeded schedules, no unsafe or late idleness declaration");
}

/// Criterion 4: on the scenario "input present, no output space, guard
/// true, then space freed", the actor-machine controller performs strictly
/// fewer condition evaluations across the two invocations than the basic
/// re-test-everything controller.
#[test]
fn criterion_4_siam_beats_basic_controller() {
    let graph = top_filter_graph();
    let filter = &graph.instances[graph.instance_index("filter").unwrap()];
    let am = build_siam(&filter.actor).unwrap();
    let host = HostTable::with_defaults();
    let ctx = EvalCtx {
        actor: &filter.actor,
        instance: &filter.name,
        params: &filter.params,
        host: &host,
    };

    // --- actor machine route ---
    let mut state = calder::eval::init_actor_state(&ctx).unwrap();
    let mut io = BufferIo::new(1, 1);
    io.inputs[0].push_back(42); // passes the guard (param = 10)
    io.space[0] = 0;
    let mut visited = vec![0u64; am.states.len()];
    let mut cycle_stats = ActorCycleStats::default();
    let cost = CostTable::default();
    let mut am_tests = 0u64;
    let inv1 = run_controller_hw(
        &am,
        &ctx,
        &mut state,
        &mut io,
        &mut visited,
        1,
        &cost,
        &mut cycle_stats,
        &mut am_tests,
    )
    .unwrap();
    assert_eq!(inv1.execs, 0, "cannot fire without output space");
    io.space[0] = 16; // space freed
    let inv2 = run_controller_hw(
        &am,
        &ctx,
        &mut state,
        &mut io,
        &mut visited,
        2,
        &cost,
        &mut cycle_stats,
        &mut am_tests,
    )
    .unwrap();
    assert_eq!(inv2.execs, 1, "fires t0 once space is available");
    assert_eq!(io.outputs[0], vec![42]);

    // --- basic controller route: re-checks everything each invocation ---
    let mut state_b = calder::eval::init_actor_state(&ctx).unwrap();
    let mut io_b = BufferIo::new(1, 1);
    io_b.inputs[0].push_back(42);
    io_b.space[0] = 0;
    let mut counter = EvalCounter::default();
    match basic_select(&ctx, &state_b, &io_b, &mut counter).unwrap() {
        Selection::Stalled(0) => {}
        other => panic!("expected a stall on t0, got {other:?}"),
    }
    io_b.space[0] = 16;
    match basic_select(&ctx, &state_b, &io_b, &mut counter).unwrap() {
        Selection::Fire(0) => {
            calder::eval::exec_transition(&ctx, &mut state_b, 0, &mut io_b).unwrap();
        }
        other => panic!("expected t0 to fire, got {other:?}"),
    }
    let basic_evals = counter.total();

    assert_eq!(
        am_tests, 5,
        "AM: c0,c1 then c1,c2 and one post-fire re-test"
    );
    assert_eq!(basic_evals, 6, "basic: input+guard+space twice");
    assert!(
        am_tests < basic_evals,
        "AM must evaluate strictly fewer conditions ({am_tests} vs {basic_evals})"
    );
    println!(
        "ACCEPTANCE 4 PASS: actor machine re-used knowledge across invocations ({am_tests} vs {basic_evals} condition evaluations)"
    );
}

/// Criterion 5: the batched transfer-time formulas match hand-computed
/// values exactly and are monotone in n over 10^4 random
/// (n, b, nondecreasing xi) triples.
#[test]
fn criterion_5_tau_formulas() {
    // hand-computed values, write side: xi_w(k) = 10k
    let xi_lin = Curve::linear(10.0);
    assert_eq!(transfer_time_write(3, 4, &xi_lin), 30.0);
    assert_eq!(transfer_time_write(10, 4, &xi_lin), 100.0);
    assert_eq!(transfer_time_write(8, 4, &xi_lin), 80.0);
    // read side: xi_r(k) = k^2 through explicit points
    let xi_sq = Curve::new((1..=8).map(|k| (k as f64, (k * k) as f64)).collect());
    assert_eq!(transfer_time_read(0, 5, &xi_sq), 0.0);
    assert_eq!(transfer_time_read(5, 5, &xi_sq), 25.0);
    assert_eq!(transfer_time_read(7, 3, &xi_sq), 19.0);

    let mut rng = StdRng::seed_from_u64(55);
    for case in 0..10_000 {
        let b = rng.gen_range(1u64..64);
        let mut y = 0.0f64;
        let points: Vec<(f64, f64)> = (1..=b)
            .map(|s| {
                y += rng.gen_range(0.0..20.0);
                (s as f64, y)
            })
            .collect();
        let xi = Curve::new(points);
        let n1 = rng.gen_range(0..4 * b);
        let n2 = rng.gen_range(0..4 * b);
        let (lo, hi) = (n1.min(n2), n1.max(n2));
        let t_lo = transfer_time_write(lo, b, &xi);
        let t_hi = transfer_time_write(hi, b, &xi);
        assert!(
            t_lo <= t_hi + 1e-9,
            "case {case}: tau({lo},{b}) = {t_lo} > tau({hi},{b}) = {t_hi}"
        );
    }
    println!("ACCEPTANCE 5 PASS: tau write/read exact on worked examples, monotone over 10^4 random triples");
}

fn random_feasible_assignment(inst: &MilpInstance, rng: &mut StdRng) -> Option<Vec<usize>> {
    for _ in 0..200 {
        let assign: Vec<usize> = (0..inst.actors.len())
            .map(|a| loop {
                let p = rng.gen_range(0..inst.n_partitions());
                if inst.allowed(a, p) {
                    break p;
                }
            })
            .collect();
        if evaluate_assignment(inst, &assign).is_ok() {
            return Some(assign);
        }
    }
    None
}

/// Criterion 6: for 100 random instances and 100 random feasible
/// assignments each, the emitted LP file's objective evaluated at the fixed
/// point equals the direct evaluator within 1e-9 relative.
#[test]
fn criterion_6_encoder_consistency() {
    let mut rng = StdRng::seed_from_u64(606);
    let mut checked = 0u64;
    for seed in 0..100u64 {
        let inst = random_milp_instance(
            seed,
            rng.gen_range(2..=6),
            rng.gen_range(1..=3),
            seed % 2 == 0,
        );
        let text = emit_lp(&inst);
        let parsed = parse_lp(&text).unwrap();
        assert!(parsed.minimize, "the model must minimize");
        for _ in 0..100 {
            let Some(assign) = random_feasible_assignment(&inst, &mut rng) else {
                continue;
            };
            let bd = evaluate_assignment(&inst, &assign).unwrap();
            let point = derived_point(&inst, &assign);
            parsed
                .check_feasible(&point, 1e-6)
                .unwrap_or_else(|e| panic!("seed {seed}: {e}"));
            let lp_obj = parsed.objective_at(&point).unwrap();
            let rel = (lp_obj - bd.objective_ns).abs() / bd.objective_ns.abs().max(1.0);
            assert!(
                rel <= 1e-9,
                "seed {seed}: LP {lp_obj} vs evaluator {} (rel {rel})",
                bd.objective_ns
            );
            checked += 1;
        }
    }
    assert!(checked >= 9_000, "only {checked} feasible points checked");
    println!("ACCEPTANCE 6 PASS: {checked} fixed points, LP objective == evaluator within 1e-9");
}

/// Criterion 7: exact search equals exhaustive enumeration on 25 random
/// instances (<= 8 actors, <= 3 partitions), and heavy mutual traffic
/// co-locates the communicating pair.
#[test]
fn criterion_7_partitioner_exactness() {
    let mut rng = StdRng::seed_from_u64(707);
    for case in 0..25u64 {
        let accel = case % 2 == 1;
        let n_threads = if accel { 2 } else { rng.gen_range(2..=3) };
        let inst = random_milp_instance(1000 + case, rng.gen_range(3..=8), n_threads, accel);
        let sol = solve_exact(&inst, &SolveLimits::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        let (bf_assign, bf_obj) = brute_force(&inst).unwrap();
        assert_eq!(
            sol.predicted_ns, bf_obj,
            "case {case}: branch and bound {} != brute force {bf_obj}",
            sol.predicted_ns
        );
        assert_eq!(sol.assignment, bf_assign, "case {case}: tie-break differs");
    }

    // co-location pressure: communication terms pull hot pairs together
    let inst = MilpInstance {
        actors: vec!["hot_a".into(), "hot_b".into()],
        n_threads: 2,
        use_accel: false,
        exec_thread_ns: vec![Some(100.0), Some(120.0)],
        exec_accel_ns: vec![None, None],
        conns: vec![calder::milp::ConnData {
            key: "hot_a.O->hot_b.I".into(),
            src: 0,
            dst: 1,
            tokens: 100_000,
            tau_write_ns: 0.0,
            tau_read_ns: 0.0,
            tau_intra_ns: 50.0,
            tau_inter_ns: 50_000.0,
        }],
        max_crossings: None,
        ns_per_cycle: 1.0,
    };
    let sol = solve_exact(&inst, &SolveLimits::default()).unwrap();
    assert_eq!(
        sol.assignment[0], sol.assignment[1],
        "heavily communicating actors must share a thread"
    );
    println!("ACCEPTANCE 7 PASS: 25 exact solves equal brute force; hot pair co-located");
}

/// Criterion 8: SPSC ring stress over 10^7 tokens with randomized bursts:
/// order preserved, occupancy bounds hold, and the deferred-publication
/// invariant is asserted at every publication point.
#[test]
fn criterion_8_ring_buffer_stress() {
    const TOTAL: u64 = 10_000_000;
    const CAP: usize = 1024;
    let (mut tx, mut rx) = ring::channel(CAP);
    tx.refresh();
    let producer = std::thread::spawn(move || {
        let mut rng = StdRng::seed_from_u64(88);
        let mut next = 0i64;
        while (next as u64) < TOTAL {
            tx.refresh();
            let burst = rng.gen_range(1..=256).min(tx.space());
            for _ in 0..burst {
                if next as u64 >= TOTAL {
                    break;
                }
                tx.push(next);
                next += 1;
            }
            tx.publish();
            // deferred-publication invariant at the publication point:
            // published occupancy stays within [0, capacity]
            let occ = tx.total_pushed() - tx.channel().published_read();
            assert!(occ <= CAP as u64, "producer-side occupancy {occ} > {CAP}");
        }
        tx.publish();
    });
    let consumer = std::thread::spawn(move || {
        let mut rng = StdRng::seed_from_u64(99);
        let mut expect = 0i64;
        while (expect as u64) < TOTAL {
            rx.refresh();
            let burst = rng.gen_range(1..=256).min(rx.available());
            for _ in 0..burst {
                let v = rx.pop();
                assert_eq!(v, expect, "order violated or unpublished slot read");
                expect += 1;
            }
            rx.publish();
            // the consumer never observes more than the producer published
            assert!(rx.total_popped() <= rx.channel().published_write());
        }
        expect as u64
    });
    producer.join().unwrap();
    let consumed = consumer.join().unwrap();
    assert_eq!(consumed, TOTAL);
    println!("ACCEPTANCE 8 PASS: {TOTAL} tokens in order, occupancy within [0, {CAP}] at every publication");
}

/// Criterion 9 (soft): a four-stage pipeline of equal-cost spin actors on a
/// four-thread plan vs one thread. On hosts with fewer than four cores the
/// result is reported as a warning, not a failure.
#[test]
fn criterion_9_scaling_smoke() {
    let src = r#"
actor Feed () ==> int(size=32) OUT :
  int x := 0;
  go: action ==> OUT:[x]
  guard x < 1500
  do
    x := x + 1;
  end
end
actor Spin () int(size=32) IN ==> int(size=32) OUT :
  work: action IN:[t] ==> OUT:[t]
  var int acc := 0
  do
    foreach int i in 1 .. 600 do
      acc := acc + i;
    end
  end
end
actor Eat () int(size=32) IN ==> :
  take: action IN:[t] ==> end
end
network Pipe () ==> :
  entities
    f = Feed(); s0 = Spin(); s1 = Spin(); s2 = Spin(); s3 = Spin(); e = Eat();
  structure
    f.OUT --> s0.IN; s0.OUT --> s1.IN; s1.OUT --> s2.IN; s2.OUT --> s3.IN; s3.OUT --> e.IN;
end
"#;
    let graph = calder::graph::parse_program(&[("pipe.cal".into(), src.into())], "Pipe").unwrap();
    let host = HostTable::with_defaults();
    let options = RunOptions::default();
    let single = PartitionPlan::single_thread(&graph);
    let t0 = Instant::now();
    run_network(&graph, &single, &host, &options).unwrap();
    let t_single = t0.elapsed();

    let quad = {
        use calder::xcf::{Partition, PartitionKind};
        let members: Vec<Vec<String>> = vec![
            vec!["f".into(), "s0".into()],
            vec!["s1".into()],
            vec!["s2".into()],
            vec!["s3".into(), "e".into()],
        ];
        PartitionPlan {
            network: graph.name.clone(),
            partitions: members
                .into_iter()
                .enumerate()
                .map(|(i, m)| Partition {
                    id: format!("p{}", i + 1),
                    kind: PartitionKind::Software,
                    codegen: None,
                    members: m,
                    settings: vec![],
                })
                .collect(),
            channel_configs: Default::default(),
        }
    };
    let t0 = Instant::now();
    run_network(&graph, &quad, &host, &options).unwrap();
    let t_quad = t0.elapsed();

    let speedup = t_single.as_secs_f64() / t_quad.as_secs_f64();
    let cores = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    if cores >= 4 {
        assert!(
            speedup >= 1.5,
            "{speedup:.2}x over one thread on a {cores}-core host"
        );
        println!("ACCEPTANCE 9 PASS: {speedup:.2}x speedup with 4 threads on {cores} cores");
    } else if speedup >= 1.5 {
        println!(
            "ACCEPTANCE 9 PASS: {speedup:.2}x speedup with 4 threads even on a constrained {cores}-core host"
        );
    } else {
        println!(
            "ACCEPTANCE 9 PASS (with warning): constrained {cores}-core host reached only {speedup:.2}x; threshold applies to >= 4 cores"
        );
    }
}

const GOLDEN_FILTER: &str = include_str!("goldens/filter.cpp-dialect");
const GOLDEN_WEIGHER: &str = include_str!("goldens/weigher.cpp-dialect");
const GOLDEN_BATCHER: &str = include_str!("goldens/batcher.cpp-dialect");
const GOLDEN_NETLIST: &str = include_str!("goldens/top_filter.netlist");

const SYNTHETIC_ACTORS: &str = r#"
actor Weigher (int bias) int(size=16) IN ==> int(size=16) HEAVY, int(size=16) LIGHT :
  int seen := 0;
  @weight(3)
  heavy: action IN:[v] ==> HEAVY:[v + bias]
  guard v > 100
  do
    seen := seen + 1;
  end
  light: action IN:[v] ==> LIGHT:[v]
  end
  priority heavy > light; end
end

actor Batcher () int(size=32) IN ==> int(size=32) OUT :
  List(type: int(size=32), size=4) window := [0, 0, 0, 0];
  int fill := 0;
  gather: action IN:[a, b] ==> OUT:[window[0] + a + b]
  var int tmp := a * 2
  do
    foreach int i in 0 .. 2 do
      window[i] := window[i + 1];
    end
    window[3] := tmp;
    if fill < 4 then
      fill := fill + 1;
    end
  end
end
"#;

fn golden_cases() -> Vec<(&'static str, String)> {
    let graph = top_filter_graph();
    let filter = &graph.instances[graph.instance_index("filter").unwrap()];
    let filter_am = build_siam(&filter.actor).unwrap();

    let prog = calder::parser::parse_document(0, SYNTHETIC_ACTORS).unwrap();
    let weigher = build_siam(&Arc::new(prog.actors[0].clone())).unwrap();
    let batcher = build_siam(&Arc::new(prog.actors[1].clone())).unwrap();

    let plan = parse_xcf(&listing2_xcf(), &graph).unwrap();
    let netlist = calder::codegen::emit_network(&graph, &plan, 4096);

    vec![
        ("filter.cpp-dialect", calder::codegen::emit_ham(&filter_am)),
        ("weigher.cpp-dialect", calder::codegen::emit_ham(&weigher)),
        ("batcher.cpp-dialect", calder::codegen::emit_ham(&batcher)),
        ("top_filter.netlist", netlist),
    ]
}

/// Criterion 10: emitted controller sources and the partition netlist
/// byte-match the checked-in goldens; structural counts match the
/// partition graph.
#[test]
fn criterion_10_codegen_goldens() {
    let cases = golden_cases();
    let goldens = [
        ("filter.cpp-dialect", GOLDEN_FILTER),
        ("weigher.cpp-dialect", GOLDEN_WEIGHER),
        ("batcher.cpp-dialect", GOLDEN_BATCHER),
        ("top_filter.netlist", GOLDEN_NETLIST),
    ];
    for ((name, emitted), (gname, golden)) in cases.iter().zip(goldens) {
        assert_eq!(*name, gname);
        assert_eq!(
            emitted, golden,
            "{name} drifted from its golden; run the bless_goldens test and review the diff"
        );
    }
    // structural completeness of the netlist against the partition graph
    let graph = top_filter_graph();
    let plan = parse_xcf(&listing2_xcf(), &graph).unwrap();
    let netlist = &cases[3].1;
    let accel_members = plan.accelerator().unwrap().members.len();
    let touching = graph
        .connections
        .iter()
        .filter(|c| {
            let m = |i: usize| {
                plan.accelerator()
                    .unwrap()
                    .members
                    .contains(&graph.instances[i].name)
            };
            m(c.source.instance) || m(c.target.instance)
        })
        .count();
    assert_eq!(netlist.matches("\n  actor ").count(), accel_members);
    assert_eq!(netlist.matches("\n  trigger ").count(), accel_members);
    assert_eq!(netlist.matches("\n  queue ").count(), touching);
    println!("ACCEPTANCE 10 PASS: 4 golden artifacts byte-identical; netlist structure matches the partition");
}

/// Regenerate the golden files. Run explicitly, then review the diff:
/// `cargo test --test acceptance bless_goldens -- --ignored`
#[test]
#[ignore]
fn bless_goldens() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/goldens");
    std::fs::create_dir_all(&dir).unwrap();
    for (name, text) in golden_cases() {
        std::fs::write(dir.join(name), text).unwrap();
        println!("blessed {name}");
    }
}

/// Sanity net for the whole suite: keys of the trace map cover every
/// connection in mixed runs (used by criterion 2's comparisons).
#[test]
fn trace_maps_cover_every_connection() {
    let graph = top_filter_graph();
    let (host, _) = collecting_host();
    let plan = parse_xcf(&listing2_xcf(), &graph).unwrap();
    let options = RunOptions {
        trace: true,
        ..Default::default()
    };
    let run = run_network(&graph, &plan, &host, &options).unwrap();
    let traces = run.traces.as_ref().unwrap();
    let keys: BTreeMap<String, ()> = graph
        .connection_keys()
        .into_iter()
        .map(|k| (k, ()))
        .collect();
    for key in keys.keys() {
        assert!(traces.contains_key(key), "no trace for {key}");
    }
}

//! `calder`: compile, run, profile, partition, explore, codegen.
//!
//! Exit codes: 0 success, 1 user error (diagnostics, bad inputs, runtime
//! faults in the program under execution), 2 internal fault.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use calder::am::ActorMachine;
use calder::bundle::Bundle;
use calder::eval::HostTable;
use calder::graph::{parse_program, NetworkGraph};
use calder::hwsim::CostTable;
use calder::milp::explore::{explore, AccelMode, ExploreConfig};
use calder::milp::lp::emit_lp;
use calder::milp::solve::{solve_exact, SolveLimits};
use calder::milp::{build_model, plan_from_assignment, MilpOptions};
use calder::plink::Curve;
use calder::profile::{
    measure_boundary_bandwidth, measure_fifo_bandwidth, profile_hardware, profile_software,
    ProfileReport, DEFAULT_INTER_FACTOR,
};
use calder::runtime::{run_network, RunOptions, RunResult};
use calder::xcf::{emit_xcf, parse_xcf, Partition, PartitionKind, PartitionPlan};

#[derive(Parser)]
#[command(
    name = "calder",
    version,
    about = "dataflow compiler and heterogeneous execution toolkit"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse sources, build actor machines, write a bundle.
    Compile {
        /// `.cal` source files.
        sources: Vec<PathBuf>,
        /// Name of the top network to flatten.
        #[arg(long)]
        top: String,
        #[arg(long, default_value = "bundle.json")]
        out: PathBuf,
        /// Print the named instance's controller as Graphviz dot.
        #[arg(long)]
        dump_controller: Option<String>,
    },
    /// Execute a compiled bundle.
    Run {
        #[arg(long)]
        bundle: PathBuf,
        /// Partition plan; defaults to a single software thread.
        #[arg(long, alias = "threads-map")]
        xcf: Option<PathBuf>,
        /// Default FIFO depth in tokens.
        #[arg(long)]
        fifo_depth: Option<usize>,
        /// Max controller instructions per actor per scheduling slot.
        #[arg(long)]
        controller_threshold: Option<usize>,
        /// Write the full channel trace here, one token per line.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Per-action hardware cycle costs (`name.action = cycles` lines).
        #[arg(long)]
        cost_table: Option<PathBuf>,
        /// Boundary buffer capacity in tokens.
        #[arg(long)]
        boundary_buffer: Option<usize>,
        /// Skip thread pinning.
        #[arg(long)]
        no_pin: bool,
    },
    /// Collect partitioner inputs.
    Profile {
        #[arg(long)]
        bundle: Option<PathBuf>,
        #[arg(long, value_enum)]
        mode: ProfileMode,
        /// Plan for sw/hw profiling; sw defaults to one thread, hw to
        /// everything on the accelerator.
        #[arg(long)]
        xcf: Option<PathBuf>,
        /// Transfer sizes in tokens for fifo/boundary modes.
        #[arg(long, value_delimiter = ',')]
        sizes: Vec<usize>,
        /// Keep these instances off the accelerator in hw mode.
        #[arg(long, value_delimiter = ',')]
        sw_only: Vec<String>,
        /// Pass these synthetic write,read ns-per-token curves through
        /// instead of measuring (boundary mode).
        #[arg(long, value_delimiter = ',')]
        synthetic: Vec<f64>,
        /// Assumed accelerator clock in MHz.
        #[arg(long)]
        clock_mhz: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output document; merged into if it already exists.
        #[arg(long, default_value = "profile.json")]
        out: PathBuf,
    },
    /// Solve the partitioning model once and emit an XCF.
    Partition {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        profile: PathBuf,
        #[arg(long)]
        threads: usize,
        #[arg(long)]
        accel: bool,
        #[arg(long)]
        max_crossings: Option<usize>,
        /// Boundary buffer capacity in tokens.
        #[arg(long)]
        buffer_tokens: Option<u64>,
        #[arg(long)]
        clock_mhz: Option<f64>,
        #[arg(long)]
        out_xcf: Option<PathBuf>,
        /// Also write the model as a CPLEX-LP file.
        #[arg(long)]
        emit_lp: Option<PathBuf>,
        /// Exact-search time limit in seconds.
        #[arg(long, default_value_t = 60)]
        timeout_s: u64,
    },
    /// Sweep thread counts, accelerator use, and buffer sizes.
    Explore {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        profile: PathBuf,
        /// Thread range: `1..4` or `1,2,4`.
        #[arg(long)]
        threads: String,
        #[arg(long, value_enum, default_value_t = AccelArg::Both)]
        accel: AccelArg,
        /// Boundary buffer sizes in tokens.
        #[arg(long, value_delimiter = ',', default_value = "131072")]
        buffer_sizes: Vec<u64>,
        #[arg(long)]
        max_crossings: Option<usize>,
        #[arg(long)]
        clock_mhz: Option<f64>,
        #[arg(long, default_value = "explore-out")]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 60)]
        timeout_s: u64,
        /// Re-run every solved plan on the real backends and report the
        /// prediction error per point plus the median.
        #[arg(long)]
        validate: bool,
    },
    /// Emit hardware controller sources and the partition netlist.
    Codegen {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        xcf: Option<PathBuf>,
        #[arg(long, default_value = "gen")]
        out_dir: PathBuf,
        #[arg(long)]
        fifo_depth: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileMode {
    Sw,
    Hw,
    Fifo,
    Boundary,
}

#[derive(Clone, Copy, ValueEnum)]
enum AccelArg {
    On,
    Off,
    Both,
}

enum CliError {
    User(String),
    Internal(String),
}

impl CliError {
    fn user(e: impl std::fmt::Display) -> Self {
        CliError::User(e.to_string())
    }
}

type CliResult = Result<(), CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = std::panic::catch_unwind(|| dispatch(cli));
    match outcome {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(CliError::User(msg))) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Ok(Err(CliError::Internal(msg))) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(2)
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            eprintln!("internal error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> CliResult {
    match cli.cmd {
        Cmd::Compile {
            sources,
            top,
            out,
            dump_controller,
        } => cmd_compile(&sources, &top, &out, dump_controller.as_deref()),
        Cmd::Run {
            bundle,
            xcf,
            fifo_depth,
            controller_threshold,
            trace,
            seed,
            cost_table,
            boundary_buffer,
            no_pin,
        } => cmd_run(
            &bundle,
            xcf.as_deref(),
            fifo_depth,
            controller_threshold,
            trace.as_deref(),
            seed,
            cost_table.as_deref(),
            boundary_buffer,
            no_pin,
        ),
        Cmd::Profile {
            bundle,
            mode,
            xcf,
            sizes,
            sw_only,
            synthetic,
            clock_mhz,
            seed,
            out,
        } => cmd_profile(
            bundle.as_deref(),
            mode,
            xcf.as_deref(),
            &sizes,
            &sw_only,
            &synthetic,
            clock_mhz,
            seed,
            &out,
        ),
        Cmd::Partition {
            bundle,
            profile,
            threads,
            accel,
            max_crossings,
            buffer_tokens,
            clock_mhz,
            out_xcf,
            emit_lp: lp_path,
            timeout_s,
        } => cmd_partition(
            &bundle,
            &profile,
            threads,
            accel,
            max_crossings,
            buffer_tokens,
            clock_mhz,
            out_xcf.as_deref(),
            lp_path.as_deref(),
            timeout_s,
        ),
        Cmd::Explore {
            bundle,
            profile,
            threads,
            accel,
            buffer_sizes,
            max_crossings,
            clock_mhz,
            out_dir,
            timeout_s,
            validate,
        } => cmd_explore(
            &bundle,
            &profile,
            &threads,
            accel,
            &buffer_sizes,
            max_crossings,
            clock_mhz,
            &out_dir,
            timeout_s,
            validate,
        ),
        Cmd::Codegen {
            bundle,
            xcf,
            out_dir,
            fifo_depth,
        } => cmd_codegen(&bundle, xcf.as_deref(), &out_dir, fifo_depth),
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::User(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> CliResult {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::User(format!("cannot create {}: {e}", parent.display())))?;
        }
    }
    std::fs::write(path, text)
        .map_err(|e| CliError::User(format!("cannot write {}: {e}", path.display())))
}

fn load_bundle(path: &Path) -> Result<Bundle, CliError> {
    Bundle::from_json(&read_file(path)?).map_err(CliError::user)
}

fn load_plan(graph: &NetworkGraph, xcf: Option<&Path>) -> Result<PartitionPlan, CliError> {
    match xcf {
        Some(p) => parse_xcf(&read_file(p)?, graph).map_err(CliError::user),
        None => Ok(PartitionPlan::single_thread(graph)),
    }
}

fn cmd_compile(
    sources: &[PathBuf],
    top: &str,
    out: &Path,
    dump_controller: Option<&str>,
) -> CliResult {
    if sources.is_empty() {
        return Err(CliError::User("no source files given".into()));
    }
    let mut docs = Vec::new();
    for p in sources {
        docs.push((p.display().to_string(), read_file(p)?));
    }
    let graph = match parse_program(&docs, top) {
        Ok(g) => g,
        Err((files, diags)) => {
            let rendered: Vec<String> = diags.iter().map(|d| d.render(&files)).collect();
            return Err(CliError::User(rendered.join("\n")));
        }
    };
    let machines = calder::runtime::build_machines(&graph).map_err(CliError::user)?;
    if let Some(name) = dump_controller {
        let am = machines
            .get(name)
            .ok_or_else(|| CliError::User(format!("no instance named `{name}`")))?;
        print!("{}", am.dump_dot());
    }
    let pairs: Vec<(String, ActorMachine)> = graph
        .instances
        .iter()
        .map(|i| (i.name.clone(), (*machines[&i.name]).clone()))
        .collect();
    let bundle = Bundle::new(graph, pairs);
    write_file(out, &bundle.to_json())?;
    println!(
        "compiled {} instances, {} connections -> {}",
        bundle.graph.instances.len(),
        bundle.graph.connections.len(),
        out.display()
    );
    Ok(())
}

fn run_options(
    fifo_depth: Option<usize>,
    controller_threshold: Option<usize>,
    trace: bool,
    seed: u64,
    cost_table: Option<&Path>,
    boundary_buffer: Option<usize>,
    no_pin: bool,
) -> Result<RunOptions, CliError> {
    let mut options = RunOptions {
        trace,
        seed,
        pin_threads: !no_pin,
        ..Default::default()
    };
    if let Some(d) = fifo_depth {
        options.default_capacity = d.max(1);
    }
    if let Some(t) = controller_threshold {
        options.controller_threshold = t.max(1);
    }
    if let Some(b) = boundary_buffer {
        options.boundary_capacity = b.max(1);
    }
    if let Some(p) = cost_table {
        options.cost_table = CostTable::parse(&read_file(p)?).map_err(CliError::User)?;
    }
    Ok(options)
}

fn print_run_summary(res: &RunResult) {
    println!("firings:");
    for (inst, n) in &res.firings {
        println!("  {inst}: {n}");
    }
    println!("channel tokens:");
    for (key, n) in &res.channel_tokens {
        println!("  {key}: {n}");
    }
    if res.channels_nonempty_at_exit {
        let stuck: Vec<&str> = res
            .residues
            .iter()
            .filter(|(_, &r)| r > 0)
            .map(|(k, _)| k.as_str())
            .collect();
        println!("warning: tokens left on channels at exit (possible deadlock): {stuck:?}");
    }
    if let Some(sim) = &res.sim {
        println!("simulated cycles: {}", sim.total_cycles);
        println!("kernel calls: {}", res.kernel_calls);
    }
    println!("wall time: {:.3} ms", res.wall_ns as f64 / 1e6);
}

#[allow(clippy::too_many_arguments)]
fn cmd_run(
    bundle_path: &Path,
    xcf: Option<&Path>,
    fifo_depth: Option<usize>,
    controller_threshold: Option<usize>,
    trace: Option<&Path>,
    seed: u64,
    cost_table: Option<&Path>,
    boundary_buffer: Option<usize>,
    no_pin: bool,
) -> CliResult {
    let bundle = load_bundle(bundle_path)?;
    let plan = load_plan(&bundle.graph, xcf)?;
    let options = run_options(
        fifo_depth,
        controller_threshold,
        trace.is_some(),
        seed,
        cost_table,
        boundary_buffer,
        no_pin,
    )?;
    let host = HostTable::with_defaults();
    let res = run_network(&bundle.graph, &plan, &host, &options).map_err(CliError::user)?;
    if let (Some(path), Some(traces)) = (trace, &res.traces) {
        let mut out = String::new();
        for (key, tokens) in traces {
            for (i, v) in tokens.iter().enumerate() {
                out.push_str(&format!("{key} {i} {v}\n"));
            }
        }
        write_file(path, &out)?;
    }
    print_run_summary(&res);
    Ok(())
}

/// Default hardware-profiling plan: every instance on the accelerator except
/// the explicitly software-only ones, which share one thread.
fn all_accel_plan(graph: &NetworkGraph, sw_only: &[String]) -> PartitionPlan {
    let (sw, hw): (Vec<String>, Vec<String>) = graph
        .instances
        .iter()
        .map(|i| i.name.clone())
        .partition(|n| sw_only.contains(n));
    PartitionPlan {
        network: graph.name.clone(),
        partitions: vec![
            Partition {
                id: "p1".into(),
                kind: PartitionKind::Software,
                codegen: None,
                members: sw,
                settings: vec![],
            },
            Partition {
                id: "accel".into(),
                kind: PartitionKind::Accelerator,
                codegen: None,
                members: hw,
                settings: vec![],
            },
        ],
        channel_configs: BTreeMap::new(),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_profile(
    bundle_path: Option<&Path>,
    mode: ProfileMode,
    xcf: Option<&Path>,
    sizes: &[usize],
    sw_only: &[String],
    synthetic: &[f64],
    clock_mhz: Option<f64>,
    seed: u64,
    out: &Path,
) -> CliResult {
    let mut report = if out.exists() {
        ProfileReport::from_json(&read_file(out)?).map_err(CliError::User)?
    } else {
        ProfileReport::default()
    };
    let fresh = match mode {
        ProfileMode::Sw => {
            let bundle = load_bundle(
                bundle_path
                    .ok_or_else(|| CliError::User("profile --mode sw needs --bundle".into()))?,
            )?;
            let plan = load_plan(&bundle.graph, xcf)?;
            if plan.accelerator().is_some() {
                return Err(CliError::User(
                    "software profiling needs an all-software plan".into(),
                ));
            }
            let host = HostTable::with_defaults();
            let options = RunOptions {
                seed,
                ..Default::default()
            };
            let (r, run) =
                profile_software(&bundle.graph, &plan, &host, &options).map_err(CliError::user)?;
            println!(
                "software profile: {} actors timed over {} firings",
                r.exec_sw_ns.len(),
                run.firings.values().sum::<u64>()
            );
            r
        }
        ProfileMode::Hw => {
            let bundle = load_bundle(
                bundle_path
                    .ok_or_else(|| CliError::User("profile --mode hw needs --bundle".into()))?,
            )?;
            let plan = match xcf {
                Some(p) => parse_xcf(&read_file(p)?, &bundle.graph).map_err(CliError::user)?,
                None => all_accel_plan(&bundle.graph, sw_only),
            };
            if plan.accelerator().is_none() {
                return Err(CliError::User(
                    "hardware profiling needs an accelerator partition".into(),
                ));
            }
            let host = HostTable::with_defaults();
            let options = RunOptions {
                seed,
                ..Default::default()
            };
            let (r, run) =
                profile_hardware(&bundle.graph, &plan, &host, &options).map_err(CliError::user)?;
            println!(
                "hardware profile: {} actors, {} kernel calls, {} cycles",
                r.exec_hw_cycles.len(),
                run.kernel_calls,
                run.sim.map(|s| s.total_cycles).unwrap_or(0)
            );
            r
        }
        ProfileMode::Fifo => {
            if sizes.len() < 2 {
                return Err(CliError::User(
                    "profile --mode fifo needs --sizes with at least two values".into(),
                ));
            }
            let (intra, inter, estimated) = measure_fifo_bandwidth(sizes, DEFAULT_INTER_FACTOR);
            println!(
                "fifo bandwidth over {} sizes{}",
                sizes.len(),
                if estimated {
                    " (inter-core estimated: single-core host)"
                } else {
                    ""
                }
            );
            ProfileReport {
                xi_intra: Some(intra),
                xi_inter: Some(inter),
                inter_estimated: estimated,
                ..Default::default()
            }
        }
        ProfileMode::Boundary => {
            if sizes.is_empty() {
                return Err(CliError::User(
                    "profile --mode boundary needs --sizes".into(),
                ));
            }
            let synth = match synthetic {
                [] => None,
                [w, r] => Some((Curve::linear(*w), Curve::linear(*r))),
                _ => {
                    return Err(CliError::User(
                        "--synthetic takes exactly two values: write,read ns per token".into(),
                    ))
                }
            };
            let (w, r) = measure_boundary_bandwidth(sizes, synth);
            println!("boundary bandwidth over {} sizes", sizes.len());
            ProfileReport {
                xi_write: Some(w),
                xi_read: Some(r),
                ..Default::default()
            }
        }
    };
    report.merge(fresh);
    if let Some(mhz) = clock_mhz {
        report.assumed_clock_mhz = mhz;
    }
    write_file(out, &report.to_json())?;
    println!("profile written to {}", out.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_partition(
    bundle_path: &Path,
    profile_path: &Path,
    threads: usize,
    accel: bool,
    max_crossings: Option<usize>,
    buffer_tokens: Option<u64>,
    clock_mhz: Option<f64>,
    out_xcf: Option<&Path>,
    lp_path: Option<&Path>,
    timeout_s: u64,
) -> CliResult {
    let bundle = load_bundle(bundle_path)?;
    let profile = ProfileReport::from_json(&read_file(profile_path)?).map_err(CliError::User)?;
    let opts = MilpOptions {
        n_threads: threads,
        use_accel: accel,
        max_crossings,
        buffer_tokens: buffer_tokens.unwrap_or(calder::plink::DEFAULT_BOUNDARY_TOKENS as u64),
        assumed_clock_mhz: clock_mhz,
    };
    let inst = build_model(&bundle.graph, &profile, None, &opts).map_err(CliError::user)?;
    if let Some(p) = lp_path {
        write_file(p, &emit_lp(&inst))?;
        println!("LP model written to {}", p.display());
    }
    let limits = SolveLimits {
        timeout: std::time::Duration::from_secs(timeout_s),
        ..Default::default()
    };
    let sol = solve_exact(&inst, &limits).map_err(CliError::user)?;
    println!(
        "status: {:?}, predicted {:.1} ns over {} nodes",
        sol.status, sol.predicted_ns, sol.nodes_explored
    );
    let bd = &sol.breakdown;
    for (p, t) in bd.thread_ns.iter().enumerate() {
        println!("  T_p{}: {t:.1} ns", p + 1);
    }
    if accel {
        println!(
            "  T_plink: {:.1} ns (hw max {:.1} + write {:.1} + read {:.1})",
            bd.plink_total_ns, bd.accel_max_ns, bd.plink_write_ns, bd.plink_read_ns
        );
    }
    println!(
        "  T_intra: {:.1} ns (plink fold {:.1}), T_inter: {:.1} ns, crossings: {}",
        bd.intra_ns, bd.plink_intra_ns, bd.inter_ns, bd.crossings
    );
    println!("  cycle conversion: {:.4} ns/cycle", bd.ns_per_cycle);
    for (a, &p) in sol.assignment.iter().enumerate() {
        println!("  {} -> {}", inst.actors[a], inst.partition_name(p));
    }
    let plan = plan_from_assignment(&bundle.graph, &inst, &sol.assignment, opts.buffer_tokens);
    let xcf = emit_xcf(&plan);
    match out_xcf {
        Some(p) => {
            write_file(p, &xcf)?;
            println!("plan written to {}", p.display());
        }
        None => print!("{xcf}"),
    }
    Ok(())
}

fn parse_thread_range(spec: &str) -> Result<Vec<usize>, CliError> {
    let spec = spec.trim();
    if let Some((lo, hi)) = spec.split_once("..") {
        let lo: usize = lo
            .trim()
            .parse()
            .map_err(|_| CliError::User(format!("bad thread range `{spec}`")))?;
        let hi: usize = hi
            .trim()
            .parse()
            .map_err(|_| CliError::User(format!("bad thread range `{spec}`")))?;
        if lo == 0 || hi < lo {
            return Err(CliError::User(format!("bad thread range `{spec}`")));
        }
        return Ok((lo..=hi).collect());
    }
    let mut out = Vec::new();
    for part in spec.split(',') {
        let n: usize = part
            .trim()
            .parse()
            .map_err(|_| CliError::User(format!("bad thread list `{spec}`")))?;
        if n == 0 {
            return Err(CliError::User("thread counts start at 1".into()));
        }
        out.push(n);
    }
    if out.is_empty() {
        return Err(CliError::User("empty thread range".into()));
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn cmd_explore(
    bundle_path: &Path,
    profile_path: &Path,
    threads: &str,
    accel: AccelArg,
    buffer_sizes: &[u64],
    max_crossings: Option<usize>,
    clock_mhz: Option<f64>,
    out_dir: &Path,
    timeout_s: u64,
    validate: bool,
) -> CliResult {
    let bundle = load_bundle(bundle_path)?;
    let profile = ProfileReport::from_json(&read_file(profile_path)?).map_err(CliError::User)?;
    let cfg = ExploreConfig {
        thread_range: parse_thread_range(threads)?,
        accel: match accel {
            AccelArg::On => AccelMode::On,
            AccelArg::Off => AccelMode::Off,
            AccelArg::Both => AccelMode::Both,
        },
        buffer_sizes: if buffer_sizes.is_empty() {
            vec![calder::plink::DEFAULT_BOUNDARY_TOKENS as u64]
        } else {
            buffer_sizes.to_vec()
        },
        max_crossings,
        assumed_clock_mhz: clock_mhz,
        limits: SolveLimits {
            timeout: std::time::Duration::from_secs(timeout_s),
            ..Default::default()
        },
    };
    let report = explore(&bundle.graph, &profile, &cfg);
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::User(format!("cannot create {}: {e}", out_dir.display())))?;
    let mut xcf_paths = Vec::new();
    for p in &report.points {
        match &p.result {
            Ok(s) => {
                let name = format!(
                    "plan_t{}_{}_b{}.xcf",
                    p.n_threads,
                    if p.accel { "hw" } else { "sw" },
                    p.buffer_tokens
                );
                let path = out_dir.join(&name);
                write_file(&path, &s.xcf)?;
                xcf_paths.push(Some(path.display().to_string()));
            }
            Err(_) => xcf_paths.push(None),
        }
    }
    let csv = report.to_csv(&xcf_paths);
    write_file(&out_dir.join("summary.csv"), &csv)?;
    write_file(&out_dir.join("plot.dat"), &report.plot_data())?;
    print!("{csv}");
    println!(
        "{} points, {} unique hardware partitions, baseline {:.1} ns",
        report.points.len(),
        report.unique_hw_partitions,
        report.baseline_ns
    );
    if validate {
        validate_points(&bundle, &report, out_dir)?;
    }
    println!("results in {}", out_dir.display());
    Ok(())
}

/// Measure each solved plan on the actual backends and report per-point and
/// median prediction error. The model predicts one "round" of sequential
/// work, so the honest comparable is total wall time over the profiled
/// token volume; large errors are expected and are the point of reporting.
fn validate_points(
    bundle: &Bundle,
    report: &calder::milp::explore::ExploreReport,
    out_dir: &Path,
) -> CliResult {
    // timing runs: keep actor println output out of the measurement
    let mut host = HostTable::with_defaults();
    host.register("println", |_| Ok(calder::eval::Value::Int(0)));
    let mut rows = String::from("threads,accel,buffer_tokens,predicted_ns,measured_ns,error\n");
    let mut errors: Vec<f64> = Vec::new();
    for p in &report.points {
        let Ok(s) = &p.result else { continue };
        let plan = parse_xcf(&s.xcf, &bundle.graph).map_err(CliError::user)?;
        let options = RunOptions::default();
        let run = run_network(&bundle.graph, &plan, &host, &options).map_err(CliError::user)?;
        let measured = run.wall_ns as f64;
        let predicted = s.solution.predicted_ns;
        let err = (predicted - measured).abs() / measured.max(1.0);
        errors.push(err);
        println!(
            "validate: threads={} accel={} buffer={} predicted={:.0}ns measured={:.0}ns error={:.1}%",
            p.n_threads,
            p.accel,
            p.buffer_tokens,
            predicted,
            measured,
            err * 100.0
        );
        rows.push_str(&format!(
            "{},{},{},{},{},{:.4}\n",
            p.n_threads, p.accel, p.buffer_tokens, predicted, measured, err
        ));
    }
    if !errors.is_empty() {
        errors.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = errors[errors.len() / 2];
        println!("validate: median prediction error {:.1}%", median * 100.0);
    }
    write_file(&out_dir.join("accuracy.csv"), &rows)?;
    Ok(())
}

fn cmd_codegen(
    bundle_path: &Path,
    xcf: Option<&Path>,
    out_dir: &Path,
    fifo_depth: Option<usize>,
) -> CliResult {
    let bundle = load_bundle(bundle_path)?;
    let plan = match xcf {
        Some(p) => parse_xcf(&read_file(p)?, &bundle.graph).map_err(CliError::user)?,
        None => all_accel_plan(&bundle.graph, &[]),
    };
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::User(format!("cannot create {}: {e}", out_dir.display())))?;
    let members: Vec<String> = plan
        .accelerator()
        .map(|p| p.members.clone())
        .unwrap_or_default();
    let mut emitted = std::collections::BTreeSet::new();
    for m in &members {
        let am = bundle
            .machine(m)
            .ok_or_else(|| CliError::Internal(format!("bundle lacks machine for `{m}`")))?;
        let actor_name = am.actor.name.to_lowercase();
        if emitted.insert(actor_name.clone()) {
            let path = out_dir.join(format!("{actor_name}.cpp-dialect"));
            write_file(&path, &calder::codegen::emit_ham(am))?;
            println!("wrote {}", path.display());
        }
    }
    let netlist = calder::codegen::emit_network(
        &bundle.graph,
        &plan,
        fifo_depth.unwrap_or(calder::hwsim::DEFAULT_QUEUE_DEPTH),
    );
    let path = out_dir.join("network.netlist");
    write_file(&path, &netlist)?;
    println!("wrote {}", path.display());
    Ok(())
}

//! End-to-end CLI tests over the bundled sample network.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_calder"))
}

fn sample(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../samples")
        .join(name)
}

fn ok(out: &Output) -> &Output {
    assert!(
        out.status.success(),
        "command failed ({:?}):\n{}\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn compile(dir: &Path) -> PathBuf {
    let bundle = dir.join("bundle.json");
    ok(&bin()
        .args(["compile", "--top", "TopFilter", "--out"])
        .arg(&bundle)
        .arg(sample("top_filter.cal"))
        .output()
        .unwrap());
    bundle
}

#[test]
fn compile_run_trace() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = compile(dir.path());
    let trace = dir.path().join("trace.txt");
    let out = bin()
        .args(["run", "--bundle"])
        .arg(&bundle)
        .args(["--trace"])
        .arg(&trace)
        .arg("--no-pin")
        .output()
        .unwrap();
    ok(&out);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("source: 4096"));
    assert!(stdout.contains("wall time"));
    let trace_text = std::fs::read_to_string(&trace).unwrap();
    // one line per token: channel id, sequence number, value
    let first = trace_text.lines().next().unwrap();
    let fields: Vec<&str> = first.split_whitespace().collect();
    assert_eq!(fields.len(), 3);
    assert!(fields[0].contains("->"));
    assert_eq!(fields[1], "0");
}

#[test]
fn mixed_run_with_xcf_reports_kernel_calls() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = compile(dir.path());
    let out = bin()
        .args(["run", "--bundle"])
        .arg(&bundle)
        .arg("--threads-map")
        .arg(sample("top_filter.xcf"))
        .arg("--no-pin")
        .output()
        .unwrap();
    ok(&out);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("kernel calls: 1"));
    assert!(stdout.contains("simulated cycles"));
}

#[test]
fn syntax_error_exits_one_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cal");
    std::fs::write(&bad, "actor A () ==> :\n  wat\nend").unwrap();
    let out = bin()
        .args(["compile", "--top", "X"])
        .arg(&bad)
        .args(["--out"])
        .arg(dir.path().join("b.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("bad.cal:2:"), "no position in: {stderr}");
}

#[test]
fn dump_controller_prints_dot() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args([
            "compile",
            "--top",
            "TopFilter",
            "--dump-controller",
            "filter",
            "--out",
        ])
        .arg(dir.path().join("b.json"))
        .arg(sample("top_filter.cal"))
        .output()
        .unwrap();
    ok(&out);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("digraph \"Filter\""));
    assert!(stdout.contains("test c0"));
    assert!(stdout.contains("exec t0"));
}

#[test]
fn profile_partition_explore_codegen_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = compile(dir.path());
    let profile = dir.path().join("profile.json");

    ok(&bin()
        .args(["profile", "--mode", "sw", "--bundle"])
        .arg(&bundle)
        .args(["--out"])
        .arg(&profile)
        .output()
        .unwrap());
    ok(&bin()
        .args(["profile", "--mode", "hw", "--sw-only", "sink", "--bundle"])
        .arg(&bundle)
        .args(["--out"])
        .arg(&profile)
        .output()
        .unwrap());
    ok(&bin()
        .args(["profile", "--mode", "fifo", "--sizes", "64,256", "--out"])
        .arg(&profile)
        .output()
        .unwrap());
    ok(&bin()
        .args([
            "profile",
            "--mode",
            "boundary",
            "--sizes",
            "64,1024",
            "--synthetic",
            "12,9",
            "--out",
        ])
        .arg(&profile)
        .output()
        .unwrap());
    let doc = std::fs::read_to_string(&profile).unwrap();
    for key in ["exec_sw_ns", "exec_hw_cycles", "xi_intra", "xi_write"] {
        assert!(doc.contains(key), "profile lacks {key}");
    }

    // partition: breakdown + XCF + LP
    let xcf = dir.path().join("best.xcf");
    let lp = dir.path().join("model.lp");
    let out = bin()
        .args(["partition", "--bundle"])
        .arg(&bundle)
        .args(["--profile"])
        .arg(&profile)
        .args(["--threads", "2", "--accel", "--out-xcf"])
        .arg(&xcf)
        .args(["--emit-lp"])
        .arg(&lp)
        .output()
        .unwrap();
    ok(&out);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("status: Optimal"));
    assert!(stdout.contains("T_plink"));
    assert!(std::fs::read_to_string(&xcf)
        .unwrap()
        .contains("<configuration"));
    let lp_text = std::fs::read_to_string(&lp).unwrap();
    assert!(lp_text.starts_with("\\ partition model"));
    assert!(lp_text.contains("Minimize") && lp_text.ends_with("End\n"));

    // explore: csv + plot + plans on disk
    let dse = dir.path().join("dse");
    let out = bin()
        .args(["explore", "--bundle"])
        .arg(&bundle)
        .args(["--profile"])
        .arg(&profile)
        .args([
            "--threads",
            "1..2",
            "--accel",
            "both",
            "--buffer-sizes",
            "1024",
        ])
        .args(["--out-dir"])
        .arg(&dse)
        .output()
        .unwrap();
    ok(&out);
    let csv = std::fs::read_to_string(dse.join("summary.csv")).unwrap();
    assert!(csv.lines().count() >= 5, "expected >= 4 data rows:\n{csv}");
    assert!(csv.starts_with("threads,accel,buffer_tokens,predicted_ns,crossings,xcf"));
    assert!(dse.join("plot.dat").exists());
    // every emitted xcf loads back against the bundle
    let run = bin()
        .args(["run", "--bundle"])
        .arg(&bundle)
        .args(["--xcf"])
        .arg(dse.join("plan_t2_hw_b1024.xcf"))
        .arg("--no-pin")
        .output()
        .unwrap();
    ok(&run);

    // codegen output layout
    let gen = dir.path().join("gen");
    ok(&bin()
        .args(["codegen", "--bundle"])
        .arg(&bundle)
        .args(["--xcf"])
        .arg(sample("top_filter.xcf"))
        .args(["--out-dir"])
        .arg(&gen)
        .output()
        .unwrap());
    assert!(gen.join("filter.cpp-dialect").exists());
    assert!(gen.join("source.cpp-dialect").exists());
    assert!(gen.join("network.netlist").exists());
}

#[test]
fn wrong_bundle_version_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"format":"calder-bundle","version":99}"#).unwrap();
    let out = bin().args(["run", "--bundle"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("version 99"));
}

#[test]
fn seeded_runs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = compile(dir.path());
    let run = |seed: &str, trace: &Path| {
        ok(&bin()
            .args(["run", "--bundle"])
            .arg(&bundle)
            .arg("--xcf")
            .arg(sample("top_filter.xcf"))
            .args(["--seed", seed, "--trace"])
            .arg(trace)
            .arg("--no-pin")
            .output()
            .unwrap());
        std::fs::read(trace).unwrap()
    };
    let a = run("7", &dir.path().join("a.txt"));
    let b = run("7", &dir.path().join("b.txt"));
    assert_eq!(a, b);
}

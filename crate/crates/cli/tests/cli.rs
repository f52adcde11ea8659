use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fdipx_core::trace::crafted::footprint_loop;
use fdipx_core::trace::{write_trace, GeneratorSpec};

fn fdipx(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fdipx")).args(args).output().unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("fdipx-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Data rows of a CSV output, keyed by header name.
fn rows(out: &Output) -> Vec<std::collections::HashMap<String, String>> {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    lines
        .map(|l| {
            header
                .iter()
                .map(|h| h.to_string())
                .zip(l.split(',').map(String::from))
                .collect()
        })
        .collect()
}

fn num(row: &std::collections::HashMap<String, String>, col: &str) -> u64 {
    row[col].parse().unwrap_or_else(|_| panic!("{col} = {:?}", row[col]))
}

#[test]
fn simulate_reports_partition_hits_and_echoes_config() {
    let out = fdipx(&["simulate", "-s", "instructions=50000"]);
    let text = String::from_utf8_lossy(&out.stdout).to_string();
    assert!(text.starts_with("# fdipx "));
    assert!(text.contains("# btb_mode = fdipx\n"));
    assert!(text.contains("# instructions = 50000\n"));
    let r = rows(&out);
    assert_eq!(r.len(), 1);
    for p in 0..4 {
        assert!(r[0].contains_key(&format!("btb_hits_{p}")));
    }
    assert_eq!(num(&r[0], "instructions"), 50_000);
    assert_eq!(r[0]["status"], "ok");
}

#[test]
fn prefetching_helps_on_a_large_footprint_trace() {
    let dir = scratch("footprint");
    let trace = dir.join("loop.bin");
    let t = footprint_loop(2048, 64, 2, 3);
    write_trace(&t, std::fs::File::create(&trace).unwrap()).unwrap();
    let run = |pf| {
        rows(&fdipx(&[
            "simulate",
            "--trace",
            s(&trace),
            "--entries",
            "4K",
            "--prefetch",
            pf,
        ]))
        .remove(0)
    };
    let (off, on) = (run("off"), run("on"));
    assert!(num(&on, "prefetches_issued") >= num(&off, "prefetches_issued"));
    assert!(num(&on, "miss_stall_cycles") <= num(&off, "miss_stall_cycles"));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn infinite_budget_never_resteers_more() {
    let out = fdipx(&[
        "sweep",
        "-s",
        "instructions=200000",
        "--budgets",
        "11.5K,inf",
        "--modes",
        "fdipx",
    ]);
    let r = rows(&out);
    assert_eq!(r.len(), 2);
    assert_eq!((r[0]["budget"].as_str(), r[1]["budget"].as_str()), ("11.5K", "inf"));
    assert!(num(&r[1], "resteers") <= num(&r[0], "resteers"));
}

fn stall(row: &std::collections::HashMap<String, String>) -> f64 {
    num(row, "stall_cycles") as f64
}

#[test]
fn mid_budget_ensemble_nearly_matches_infinite() {
    // server-like: the default generator spec
    let swept = rows(&fdipx(&["sweep", "--budgets", "45K,inf", "--modes", "fdipx"]));
    let base = rows(&fdipx(&["simulate", "--entries", "inf", "--prefetch", "off"])).remove(0);
    let gain = |r| stall(&base) - stall(r);
    let share = gain(&swept[0]) / gain(&swept[1]);
    assert!(
        share >= 0.9,
        "45KB reaches {share:.3} of the infinite BTB's stall reduction"
    );
}

#[test]
fn ensemble_resteers_no_more_than_block_at_smallest_budget() {
    let out = fdipx(&["sweep", "--budgets", "11.5K", "-s", "warmup_instructions=250000"]);
    let r = rows(&out);
    let by_mode = |m: &str| r.iter().find(|x| x["mode"] == m).map(|x| num(x, "resteers")).unwrap();
    assert!(by_mode("fdipx") <= by_mode("fdip-block"));
}

#[test]
fn generated_traces_are_reproducible_and_analyzable() {
    let dir = scratch("gen");
    let (a, b) = (dir.join("a.bin"), dir.join("b.bin"));
    for p in [&a, &b] {
        assert!(fdipx(&["gen-trace", "--seed", "7", "-o", s(p)]).status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let out = fdipx(&["analyze-offsets", s(&a)]);
    let hist = rows(&out);
    let mix = GeneratorSpec::default().offset_mix;
    let mut classes = [0.0; 5];
    for r in hist.iter().filter(|r| r["mode"] == "dynamic") {
        let bits: Option<u32> = r["bits"].parse().ok();
        let class = match bits {
            Some(0..=8) => 0,
            Some(9..=13) => 1,
            Some(14..=23) => 2,
            Some(_) => 3,
            None => 4,
        };
        classes[class] += r["frequency"].parse::<f64>().unwrap();
    }
    for (got, want) in classes.iter().zip(mix) {
        assert!((got - want).abs() <= 0.02, "{classes:?} vs {mix:?}");
    }
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn empty_trace_gives_header_only_histogram() {
    let dir = scratch("empty");
    let p = dir.join("e.bin");
    write_trace(&[], std::fs::File::create(&p).unwrap()).unwrap();
    let out = fdipx(&["analyze-offsets", s(&p)]);
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        "bits,kind,mode,count,frequency\n"
    );
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn exit_codes() {
    assert_eq!(fdipx(&["storage-table", "--check"]).status.code(), Some(0));
    assert_eq!(fdipx(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(fdipx(&["simulate", "--mode", "nope"]).status.code(), Some(1));
    assert_eq!(fdipx(&["-s", "ftq_capacity=0", "simulate"]).status.code(), Some(1));
    assert_eq!(fdipx(&["sweep", "--budgets", "12K"]).status.code(), Some(1));
    assert_eq!(
        fdipx(&["simulate", "--trace", "/definitely/missing"]).status.code(),
        Some(2)
    );
    let dir = scratch("bad");
    let p = dir.join("bad.bin");
    std::fs::write(&p, b"NOPE\x01\x00\x00\x00").unwrap();
    assert_eq!(fdipx(&["analyze-offsets", s(&p)]).status.code(), Some(2));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn dump_config_is_a_loadable_config() {
    let dir = scratch("dump");
    let p = dir.join("cfg");
    let dumped = fdipx(&["--dump-config", "-s", "btb_mode=fdip-block", "-s", "seed=9"]);
    assert!(dumped.status.success());
    std::fs::write(&p, &dumped.stdout).unwrap();
    let again = fdipx(&["--dump-config", "--config", s(&p)]);
    assert_eq!(dumped.stdout, again.stdout);
    let text = String::from_utf8(dumped.stdout).unwrap();
    assert!(text.contains("btb_mode = fdip-block") && text.contains("seed = 9"));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn output_file_reruns_to_identical_output() {
    let dir = scratch("rerun");
    let first = dir.join("first.csv");
    let args = [
        "sweep",
        "-s",
        "instructions=60000",
        "--budgets",
        "22.75K",
        "-s",
        "tag_mode=full",
        "-o",
        s(&first),
    ];
    assert!(fdipx(&args).status.success());
    let again = fdipx(&["--config", s(&first), "sweep", "--budgets", "22.75K"]);
    assert_eq!(std::fs::read(&first).unwrap(), again.stdout);
    std::fs::remove_dir_all(dir).unwrap();
}

//! Simulation and sweep drivers shared by the subcommands.

use std::fmt::Write as _;

use anyhow::anyhow;
use fdipx_core::frontend::{simulate, simulate_records, BtbCapacity, BtbMode, SimError, SimStats};
use fdipx_core::trace::{generate_trace, open_trace, GenError, TraceRecord};
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::tables;
use crate::Failure;

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(_) | SimError::Parameter(_) => Failure::Config(e.into()),
            // the message already embeds the source error
            SimError::Trace { .. } | SimError::Malformed { .. } => Failure::Data(anyhow!("{e}")),
        }
    }
}

impl From<GenError> for Failure {
    fn from(e: GenError) -> Self {
        Failure::Config(e.into())
    }
}

/// Stall cycles attributable to the front end.
pub fn stall_cycles(s: &SimStats) -> u64 {
    s.miss_stall_cycles + s.resteer_stall_cycles
}

pub fn load_records(cfg: &ExperimentConfig) -> Result<Vec<TraceRecord>, Failure> {
    match &cfg.trace {
        Some(path) => {
            let stream = open_trace(path).map_err(|e| Failure::Data(anyhow!("{}: {e}", path.display())))?;
            stream
                .collect::<Result<_, _>>()
                .map_err(|e| Failure::Data(anyhow!("{}: {e}", path.display())))
        }
        None => Ok(generate_trace(&cfg.generator)?),
    }
}

pub fn run_one(cfg: &ExperimentConfig) -> Result<SimStats, Failure> {
    cfg.frontend.btb.build().map_err(|e| Failure::Config(e.into()))?;
    match &cfg.trace {
        Some(path) => {
            let stream = open_trace(path).map_err(|e| Failure::Data(anyhow!("{}: {e}", path.display())))?;
            simulate(stream, &cfg.frontend).map_err(|e| match Failure::from(e) {
                Failure::Data(e) => Failure::Data(e.context(path.display().to_string())),
                other => other,
            })
        }
        None => Ok(simulate_records(&generate_trace(&cfg.generator)?, &cfg.frontend)?),
    }
}

pub const POINT_COLUMNS: &str = "budget,baseline_entries,mode,storage_bytes,status";

pub fn point_header() -> String {
    format!("{POINT_COLUMNS},{},stall_cycles", SimStats::csv_header())
}

fn budget_label(capacity: BtbCapacity) -> String {
    match capacity {
        BtbCapacity::Infinite => "inf".into(),
        BtbCapacity::Baseline(n) => tables::table1()
            .iter()
            .find(|r| r.entries == n)
            .map(|r| format!("{}K", fdipx_core::btb::format_kb(r.bytes * 8)))
            .unwrap_or_else(|| format!("{n}-entry")),
    }
}

pub fn point_row(cfg: &ExperimentConfig, result: &Result<SimStats, String>) -> String {
    let btb = cfg.btb();
    let storage = match btb.storage() {
        Ok(Some(s)) => s.total_bytes().to_string(),
        _ => String::new(),
    };
    let head = format!("{},{},{},{storage}", budget_label(btb.capacity), btb.capacity, btb.mode);
    match result {
        Ok(s) => format!("{head},ok,{},{}", s.csv_row(), stall_cycles(s)),
        Err(msg) => {
            let msg = msg.replace([',', '\n', '"'], " ");
            let blanks = ",".repeat(fdipx_core::frontend::stats::CSV_COLUMNS.len() + 1);
            format!("{head},error: {msg}{blanks}")
        }
    }
}

pub fn summary(cfg: &ExperimentConfig, s: &SimStats) -> String {
    let mut out = String::new();
    let btb = cfg.btb();
    let ratio = |a: u64, b: u64| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let _ = writeln!(
        out,
        "btb            {} @ {} ({})",
        btb.mode,
        btb.capacity,
        btb.effective_tag_mode().name()
    );
    let _ = writeln!(out, "instructions   {}", s.instructions);
    let _ = writeln!(
        out,
        "cycles         {} ({:.3} instr/cycle)",
        s.cycles,
        ratio(s.instructions, s.cycles)
    );
    let _ = writeln!(out, "l1i misses     {} ({:.2} MPKI)", s.l1i_misses, s.l1i_mpki());
    let _ = writeln!(
        out,
        "resteers       {} ({:.2} per kilo-instr)",
        s.resteers,
        s.resteer_pki()
    );
    let _ = writeln!(
        out,
        "prefetches     {} issued, {} useful, {} filtered",
        s.prefetches_issued, s.prefetches_useful, s.prefetches_filtered
    );
    let _ = writeln!(out, "btb hits       {:?}, {} misses", s.btb_hits, s.btb_misses);
    let _ = writeln!(
        out,
        "stall cycles   {} miss + {} resteer",
        s.miss_stall_cycles, s.resteer_stall_cycles
    );
    out
}

/// Parses a sweep budget: a Table 1 total such as `45K` / `45KB`, or `inf`.
pub fn parse_budget(label: &str) -> anyhow::Result<BtbCapacity> {
    let l = label.trim();
    if matches!(l, "inf" | "infinite") {
        return Ok(BtbCapacity::Infinite);
    }
    let kb = l.trim_end_matches(['B', 'b']).trim_end_matches(['K', 'k']);
    let kb: f64 = kb.parse().map_err(|_| anyhow!("bad budget {label:?}"))?;
    tables::table1()
        .iter()
        .find(|r| (r.bytes as f64 / 1024.0 - kb).abs() < 1e-9)
        .map(|r| BtbCapacity::Baseline(r.entries))
        .ok_or_else(|| anyhow!("budget {label:?} is not one of 11.5K, 22.75K, 45K, 89K, 176K, 348K, inf"))
}

pub const DEFAULT_BUDGETS: &str = "11.5K,22.75K,45K,89K,176K,348K,inf";

/// Runs every (budget, mode) point on one trace. Rows come back in budget
/// order, modes in the given order, whatever order the points finish in.
pub fn sweep(
    base: &ExperimentConfig,
    records: &[TraceRecord],
    budgets: &[BtbCapacity],
    modes: &[BtbMode],
    workers: usize,
) -> Result<Vec<String>, Failure> {
    let points: Vec<ExperimentConfig> = budgets
        .iter()
        .flat_map(|&b| modes.iter().map(move |&m| base.with_btb(m, b)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Failure::Config(e.into()))?;
    let results: Vec<Result<SimStats, String>> = pool.install(|| {
        points
            .par_iter()
            .map(|p| simulate_records(records, &p.frontend).map_err(|e| e.to_string()))
            .collect()
    });
    Ok(points.iter().zip(&results).map(|(p, r)| point_row(p, r)).collect())
}

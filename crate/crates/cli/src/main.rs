mod config;
mod run;
mod tables;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::anyhow;
use clap::{Args, Parser, Subcommand};
use fdipx_core::frontend::BtbMode;
use fdipx_core::trace::{analyze_offsets, generate_program, open_trace, write_histogram_csv, TraceWriter};

use config::{ExperimentConfig, BANNER};

/// Exit status classes.
pub enum Failure {
    Config(anyhow::Error),
    Data(anyhow::Error),
    Check(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Data(_) => 2,
            Failure::Check(_) => 3,
        }
    }
}

type Outcome = Result<(), Failure>;

#[derive(Parser)]
#[command(
    name = "fdipx",
    version,
    about = "Front-end simulator for fetch-directed prefetching with partitioned BTBs"
)]
struct Cli {
    /// Flat `key = value` configuration file (an earlier output file works too).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override one configuration key; repeatable.
    #[arg(long = "set", short = 's', global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Print the resolved configuration and exit.
    #[arg(long)]
    dump_config: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args, Default)]
struct Common {
    /// Trace file (binary or text); omitted means a generated trace.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Generator seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_name = "auto|full|compressed16")]
    tag_mode: Option<String>,
    #[arg(long, value_name = "on|off")]
    prefetch: Option<String>,
    /// CSV destination; defaults to stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and report its statistics.
    Simulate {
        #[arg(long, value_name = "fdip-block|monolithic-instr|fdipx")]
        mode: Option<String>,
        /// Baseline entry count (1K..32K) or inf.
        #[arg(long)]
        entries: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Run each BTB organization at each storage budget on one trace.
    Sweep {
        /// Comma-separated storage budgets.
        #[arg(long, default_value = run::DEFAULT_BUDGETS)]
        budgets: String,
        #[arg(long, default_value = "fdip-block,fdipx")]
        modes: String,
        /// Parallel simulations.
        #[arg(long, short = 'j', default_value_t = std::thread::available_parallelism().map_or(1, |n| n.get()))]
        workers: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Print the storage tables of both BTB organizations.
    StorageTable {
        /// Compare every cell with the published values.
        #[arg(long)]
        check: bool,
    },
    /// Histogram of branch target offsets as CSV.
    AnalyzeOffsets {
        trace: PathBuf,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Write a synthetic trace described by generator keys.
    GenTrace {
        /// Configuration file holding the generator keys.
        spec: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, short)]
        output: PathBuf,
        /// Write the line-oriented text form instead of binary.
        #[arg(long)]
        text: bool,
    },
}

fn resolve(cli: &Cli) -> Result<ExperimentConfig, Failure> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = &cli.config {
        cfg.load(path).map_err(Failure::Config)?;
    }
    for pair in &cli.set {
        cfg.assign(pair).map_err(Failure::Config)?;
    }
    Ok(cfg)
}

fn apply(cfg: &mut ExperimentConfig, key: &str, value: Option<String>) -> Outcome {
    match value {
        Some(v) => cfg.set(key, &v).map_err(Failure::Config),
        None => Ok(()),
    }
}

fn apply_common(cfg: &mut ExperimentConfig, c: &Common) -> Outcome {
    apply(cfg, "trace", c.trace.as_ref().map(|p| p.display().to_string()))?;
    apply(cfg, "seed", c.seed.map(|s| s.to_string()))?;
    apply(cfg, "tag_mode", c.tag_mode.clone())?;
    apply(cfg, "prefetch", c.prefetch.clone())
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Data(anyhow!("{}: {e}", path.display())))
}

/// Writes `csv` to the output file or stdout and `summary` to whichever of
/// stdout/stderr the CSV is not using.
fn emit(output: Option<&Path>, csv: &str, summary: &str) -> Outcome {
    let io = |e: io::Error| Failure::Data(e.into());
    match output {
        Some(path) => {
            let mut f = create(path)?;
            f.write_all(csv.as_bytes()).and_then(|_| f.flush()).map_err(io)?;
            print!("{summary}");
        }
        None => {
            io::stdout().write_all(csv.as_bytes()).map_err(io)?;
            eprint!("{summary}");
        }
    }
    Ok(())
}

fn cmd_simulate(mut cfg: ExperimentConfig, mode: Option<String>, entries: Option<String>, common: Common) -> Outcome {
    apply(&mut cfg, "btb_mode", mode)?;
    apply(&mut cfg, "baseline_entries", entries)?;
    apply_common(&mut cfg, &common)?;
    let stats = run::run_one(&cfg)?;
    let csv = format!(
        "{BANNER} simulate\n{}{}\n{}\n",
        cfg.echo(),
        run::point_header(),
        run::point_row(&cfg, &Ok(stats))
    );
    emit(common.output.as_deref(), &csv, &run::summary(&cfg, &stats))
}

fn parse_list<T>(list: &str, parse: impl Fn(&str) -> anyhow::Result<T>) -> Result<Vec<T>, Failure> {
    list.split(',')
        .map(|s| parse(s.trim()))
        .collect::<anyhow::Result<_>>()
        .map_err(Failure::Config)
}

fn cmd_sweep(mut cfg: ExperimentConfig, budgets: String, modes: String, workers: usize, common: Common) -> Outcome {
    apply_common(&mut cfg, &common)?;
    let caps = parse_list(&budgets, run::parse_budget)?;
    let modes: Vec<BtbMode> = parse_list(&modes, |m| m.parse().map_err(|e: String| anyhow!(e)))?;
    if workers == 0 {
        return Err(Failure::Config(anyhow!("--workers must be at least 1")));
    }
    let records = run::load_records(&cfg)?;
    let rows = run::sweep(&cfg, &records, &caps, &modes, workers)?;
    let names: Vec<&str> = modes.iter().map(|m| m.name()).collect();
    let mut csv = format!(
        "{BANNER} sweep\n{}# sweep budgets {} modes {}\n{}\n",
        cfg.echo(),
        budgets.replace(' ', ""),
        names.join(","),
        run::point_header()
    );
    let mut table = format!(
        "{:>8}  {:>16}  {:>10}  {:>12}  {:>12}\n",
        "budget", "mode", "resteers", "l1i misses", "stall cycles"
    );
    let header = run::point_header();
    let cols: Vec<&str> = header.split(',').collect();
    let col = |name: &str| cols.iter().position(|c| *c == name).unwrap();
    for row in &rows {
        csv.push_str(row);
        csv.push('\n');
        let f: Vec<&str> = row.split(',').collect();
        let status = f[col("status")];
        if status == "ok" {
            table.push_str(&format!(
                "{:>8}  {:>16}  {:>10}  {:>12}  {:>12}\n",
                f[col("budget")],
                f[col("mode")],
                f[col("resteers")],
                f[col("l1i_misses")],
                f[col("stall_cycles")]
            ));
        } else {
            table.push_str(&format!("{:>8}  {:>16}  {status}\n", f[col("budget")], f[col("mode")]));
        }
    }
    emit(common.output.as_deref(), &csv, &table)
}

fn cmd_storage_table(check: bool) -> Outcome {
    print!("{}", tables::render());
    if check {
        let bad = tables::mismatches();
        if !bad.is_empty() {
            return Err(Failure::Check(bad.join("\n")));
        }
        println!("\ncheck: all {} published cells match", tables::checked_cells());
    }
    Ok(())
}

fn cmd_analyze(trace: &Path, output: Option<PathBuf>) -> Outcome {
    let data = |e: fdipx_core::trace::TraceError| Failure::Data(anyhow!("{}: {e}", trace.display()));
    let analysis = analyze_offsets(open_trace(trace).map_err(data)?).map_err(data)?;
    let mut buf = Vec::new();
    write_histogram_csv(&analysis, &mut buf).map_err(|e| Failure::Data(e.into()))?;
    let summary = format!(
        "{} taken branches ({} direct, {} indirect), {} static\n",
        analysis.dynamic.total(),
        analysis.dynamic.direct_total(),
        analysis.dynamic.indirect_total(),
        analysis.static_.total()
    );
    emit(output.as_deref(), &String::from_utf8_lossy(&buf), &summary)
}

fn cmd_gen_trace(
    mut cfg: ExperimentConfig,
    spec: Option<PathBuf>,
    seed: Option<u64>,
    output: &Path,
    text: bool,
) -> Outcome {
    if let Some(path) = spec {
        cfg.load(&path).map_err(Failure::Config)?;
    }
    apply(&mut cfg, "seed", seed.map(|s| s.to_string()))?;
    let program = generate_program(&cfg.generator)?;
    let io = |e: io::Error| Failure::Data(anyhow!("{}: {e}", output.display()));
    let out = create(output)?;
    if text {
        let records: Vec<_> = program.records().collect();
        fdipx_core::trace::write_text_trace(&records, out)
            .and_then(|mut w| w.flush())
            .map_err(io)?;
    } else {
        let mut w = TraceWriter::new(out).map_err(io)?;
        for r in program.records() {
            w.write(&r).map_err(io)?;
        }
        w.finish().and_then(|mut w| w.flush()).map_err(io)?;
    }
    println!(
        "wrote {} records ({} static branches, {} code bytes) to {}",
        cfg.generator.instruction_count,
        program.static_branches(),
        program.footprint_bytes(),
        output.display()
    );
    Ok(())
}

fn dispatch(cli: Cli) -> Outcome {
    let cfg = resolve(&cli)?;
    if cli.dump_config {
        print!("{}", cfg.dump());
        return Ok(());
    }
    match cli.command {
        None => Err(Failure::Config(anyhow!("no subcommand given; see --help"))),
        Some(Command::Simulate { mode, entries, common }) => cmd_simulate(cfg, mode, entries, common),
        Some(Command::Sweep {
            budgets,
            modes,
            workers,
            common,
        }) => cmd_sweep(cfg, budgets, modes, workers, common),
        Some(Command::StorageTable { check }) => cmd_storage_table(check),
        Some(Command::AnalyzeOffsets { trace, output }) => cmd_analyze(&trace, output),
        Some(Command::GenTrace {
            spec,
            seed,
            output,
            text,
        }) => cmd_gen_trace(cfg, spec, seed, &output, text),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Config(e) => eprintln!("error: {e:#}"),
                Failure::Data(e) => eprintln!("error: {e:#}"),
                Failure::Check(cells) => eprintln!("storage check failed:\n{cells}"),
            }
            ExitCode::from(f.code())
        }
    }
}

//! Flat `key = value` experiment configuration.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use fdipx_core::btb::TagMode;
use fdipx_core::frontend::{BtbCapacity, BtbConfig, BtbMode, DirectionPolicy, FrontendConfig};
use fdipx_core::trace::GeneratorSpec;

/// First line of every text output; also marks an output file reused as config.
pub const BANNER: &str = concat!("# fdipx ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentConfig {
    pub frontend: FrontendConfig,
    /// Binary or text trace; `None` runs on a generated trace.
    pub trace: Option<PathBuf>,
    pub generator: GeneratorSpec,
}

const KEYS: &[(&str, &str)] = &[
    ("btb_mode", "fdip-block | monolithic-instr | fdipx"),
    (
        "baseline_entries",
        "block-BTB entry count the storage budget is matched to (1024..32768), or inf",
    ),
    (
        "tag_mode",
        "auto | full | compressed16 (auto: compressed16 for fdipx, full otherwise)",
    ),
    ("prefetch", "on | off"),
    ("ftq_capacity", "fetch target queue entries"),
    ("fetch_width", "instructions fetched per cycle"),
    ("lookup_bandwidth", "instructions the branch predictor covers per cycle"),
    ("prefetch_scan_rate", "FTQ entries probed by the prefetcher per cycle"),
    ("miss_latency", "L1-I fill latency in cycles"),
    ("resteer_penalty", "cycles lost on each resteer"),
    ("l1i_bytes", "L1-I capacity"),
    ("l1i_ways", "L1-I associativity"),
    ("ras_entries", "return address stack depth"),
    ("filter_entries", "recent-prefetch filter size"),
    ("direction", "oracle | bimodal:<entries>"),
    ("warmup_instructions", "retired instructions excluded from statistics"),
    ("trace", "trace file; empty means generate one from the keys below"),
    ("seed", "generator seed"),
    ("instructions", "generated trace length"),
    ("static_branches", "distinct taken branches in the generated program"),
    (
        "offset_mix",
        "weights for <=8, 9-13, 14-23, 24-46 bit offsets and indirect",
    ),
    ("footprint_bytes", "generated code footprint"),
    ("max_call_depth", "deepest call nesting, 0 disables calls"),
];

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .replace('_', "")
        .parse()
        .map_err(|_| anyhow!("{key}: expected a non-negative integer, got {value:?}"))
}

fn parse_switch(key: &str, value: &str) -> Result<bool> {
    match value {
        "on" | "true" | "yes" | "1" => Ok(true),
        "off" | "false" | "no" | "0" => Ok(false),
        _ => bail!("{key}: expected on or off, got {value:?}"),
    }
}

pub fn parse_capacity(value: &str) -> Result<BtbCapacity> {
    if matches!(value, "inf" | "infinite") {
        return Ok(BtbCapacity::Infinite);
    }
    let n = match value.strip_suffix(['K', 'k']) {
        Some(k) => parse_num::<u64>("baseline_entries", k)? * 1024,
        None => parse_num("baseline_entries", value)?,
    };
    Ok(BtbCapacity::Baseline(n))
}

fn parse_tag_mode(value: &str) -> Result<Option<TagMode>> {
    match value {
        "auto" => Ok(None),
        "full" => Ok(Some(TagMode::Full)),
        "compressed16" | "compressed" => Ok(Some(TagMode::Compressed16)),
        _ => bail!("tag_mode: expected auto, full or compressed16, got {value:?}"),
    }
}

fn parse_direction(value: &str) -> Result<DirectionPolicy> {
    if value == "oracle" {
        return Ok(DirectionPolicy::Oracle);
    }
    let Some(n) = value.strip_prefix("bimodal:") else {
        bail!("direction: expected oracle or bimodal:<entries>, got {value:?}");
    };
    let entries: usize = parse_num("direction", n)?;
    if !entries.is_power_of_two() {
        bail!("direction: bimodal table size must be a power of two, got {entries}");
    }
    Ok(DirectionPolicy::Bimodal { entries })
}

fn parse_mix(value: &str) -> Result<[f64; 5]> {
    let parts: Vec<f64> = value
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| anyhow!("offset_mix: expected five comma-separated numbers, got {value:?}"))?;
    parts
        .try_into()
        .map_err(|_| anyhow!("offset_mix: expected five weights, got {value:?}"))
}

impl ExperimentConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let f = &mut self.frontend;
        let g = &mut self.generator;
        match key {
            "btb_mode" => f.btb.mode = value.parse().map_err(|e: String| anyhow!("btb_mode: {e}"))?,
            "baseline_entries" => f.btb.capacity = parse_capacity(value)?,
            "tag_mode" => f.btb.tag_mode = parse_tag_mode(value)?,
            "prefetch" => f.prefetch = parse_switch(key, value)?,
            "ftq_capacity" => f.ftq_capacity = parse_num(key, value)?,
            "fetch_width" => f.fetch_width = parse_num(key, value)?,
            "lookup_bandwidth" => f.lookup_bandwidth = parse_num(key, value)?,
            "prefetch_scan_rate" => f.prefetch_scan_rate = parse_num(key, value)?,
            "miss_latency" => f.miss_latency = parse_num(key, value)?,
            "resteer_penalty" => f.resteer_penalty = parse_num(key, value)?,
            "l1i_bytes" => f.l1i_bytes = parse_num(key, value)?,
            "l1i_ways" => f.l1i_ways = parse_num(key, value)?,
            "ras_entries" => f.ras_entries = parse_num(key, value)?,
            "filter_entries" => f.filter_entries = parse_num(key, value)?,
            "direction" => f.direction = parse_direction(value)?,
            "warmup_instructions" => f.warmup_instructions = parse_num(key, value)?,
            "trace" => self.trace = (!value.is_empty()).then(|| PathBuf::from(value)),
            "seed" => g.seed = parse_num(key, value)?,
            "instructions" => g.instruction_count = parse_num(key, value)?,
            "static_branches" => g.static_branch_count = parse_num(key, value)?,
            "offset_mix" => g.offset_mix = parse_mix(value)?,
            "footprint_bytes" => g.code_footprint_bytes = parse_num(key, value)?,
            "max_call_depth" => g.max_call_depth = parse_num(key, value)?,
            _ => bail!("unknown configuration key {key:?}"),
        }
        Ok(())
    }

    /// Applies a `KEY=VALUE` assignment.
    pub fn assign(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| anyhow!("expected KEY=VALUE, got {pair:?}"))?;
        self.set(k.trim(), v.trim())
    }

    /// Reads a config file. An output file of this tool is accepted too: its
    /// echoed `# key = value` lines are applied.
    pub fn load(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let echoed = text.lines().next().is_some_and(|l| l.starts_with(BANNER));
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            let line = if echoed {
                match line.strip_prefix("# ") {
                    Some(rest) if rest.contains('=') => rest,
                    _ => continue,
                }
            } else {
                match line.split_once('#') {
                    Some((before, _)) => before.trim(),
                    None => line,
                }
            };
            if line.is_empty() {
                continue;
            }
            self.assign(line)
                .with_context(|| format!("{}:{}", path.display(), n + 1))?;
        }
        Ok(())
    }

    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let f = &self.frontend;
        let g = &self.generator;
        let values = [
            f.btb.mode.to_string(),
            f.btb.capacity.to_string(),
            f.btb.tag_mode.map_or("auto", TagMode::name).to_string(),
            if f.prefetch { "on" } else { "off" }.to_string(),
            f.ftq_capacity.to_string(),
            f.fetch_width.to_string(),
            f.lookup_bandwidth.to_string(),
            f.prefetch_scan_rate.to_string(),
            f.miss_latency.to_string(),
            f.resteer_penalty.to_string(),
            f.l1i_bytes.to_string(),
            f.l1i_ways.to_string(),
            f.ras_entries.to_string(),
            f.filter_entries.to_string(),
            match f.direction {
                DirectionPolicy::Oracle => "oracle".to_string(),
                DirectionPolicy::Bimodal { entries } => format!("bimodal:{entries}"),
            },
            f.warmup_instructions.to_string(),
            self.trace.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
            g.seed.to_string(),
            g.instruction_count.to_string(),
            g.static_branch_count.to_string(),
            g.offset_mix.map(|w| w.to_string()).join(","),
            g.code_footprint_bytes.to_string(),
            g.max_call_depth.to_string(),
        ];
        KEYS.iter().map(|&(k, _)| k).zip(values).collect()
    }

    /// Commented config file listing every key.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for ((key, value), (_, doc)) in self.entries().into_iter().zip(KEYS) {
            let _ = writeln!(out, "# {doc}\n{key} = {value}");
        }
        out
    }

    /// `# key = value` lines echoed into outputs.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        for (key, value) in self.entries() {
            let _ = writeln!(out, "# {key} = {value}");
        }
        out
    }

    pub fn btb(&self) -> BtbConfig {
        self.frontend.btb
    }

    pub fn with_btb(&self, mode: BtbMode, capacity: BtbCapacity) -> ExperimentConfig {
        let mut c = self.clone();
        c.frontend.btb.mode = mode;
        c.frontend.btb.capacity = capacity;
        c
    }
}

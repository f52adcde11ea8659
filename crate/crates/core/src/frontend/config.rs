use std::fmt;
use std::str::FromStr;

use crate::btb::{
    block_baseline, ensemble_storage, fdipx_sizing, geometry_storage, BlockBtb, BtbGeometry, ConfigError,
    EnsembleConfig, InstructionBtb, StorageBreakdown, TagMode, Ways,
};

/// Set count of the unbounded ("infinite") BTBs; only affects lookup speed.
const INFINITE_SETS: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BtbMode {
    /// Basic-block-oriented BTB.
    FdipBlock,
    /// One instruction-indexed BTB storing full targets.
    MonolithicInstr,
    /// Four offset-specialized partitions.
    Fdipx,
}

impl BtbMode {
    pub fn name(self) -> &'static str {
        match self {
            BtbMode::FdipBlock => "fdip-block",
            BtbMode::MonolithicInstr => "monolithic-instr",
            BtbMode::Fdipx => "fdipx",
        }
    }

    pub fn default_tag_mode(self) -> TagMode {
        match self {
            BtbMode::Fdipx => TagMode::Compressed16,
            _ => TagMode::Full,
        }
    }
}

impl fmt::Display for BtbMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BtbMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fdip-block" | "fdip" | "block" => Ok(BtbMode::FdipBlock),
            "monolithic-instr" | "monolithic" | "instr" => Ok(BtbMode::MonolithicInstr),
            "fdipx" | "fdip-x" | "ensemble" => Ok(BtbMode::Fdipx),
            _ => Err(format!("unknown BTB mode {s:?}")),
        }
    }
}

/// BTB size, expressed as the entry count of the basic-block-oriented
/// baseline whose storage budget it matches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BtbCapacity {
    Baseline(u64),
    /// Unbounded, full-tag, never evicts.
    Infinite,
}

impl fmt::Display for BtbCapacity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BtbCapacity::Baseline(n) => write!(f, "{n}"),
            BtbCapacity::Infinite => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BtbConfig {
    pub mode: BtbMode,
    pub capacity: BtbCapacity,
    /// `None` picks the mode's default.
    pub tag_mode: Option<TagMode>,
}

#[derive(Debug, Clone)]
pub enum BtbUnit {
    Instruction(InstructionBtb),
    Block(BlockBtb),
}

#[derive(Debug, Clone, Copy)]
enum Layout {
    Single(BtbGeometry),
    Ensemble(EnsembleConfig),
}

impl BtbConfig {
    pub fn new(mode: BtbMode, capacity: BtbCapacity) -> Self {
        BtbConfig {
            mode,
            capacity,
            tag_mode: None,
        }
    }

    /// Tag mode actually used. Infinite BTBs always keep full tags.
    pub fn effective_tag_mode(&self) -> TagMode {
        match self.capacity {
            BtbCapacity::Infinite => TagMode::Full,
            BtbCapacity::Baseline(_) => self.tag_mode.unwrap_or(self.mode.default_tag_mode()),
        }
    }

    fn layout(&self) -> Result<Layout, ConfigError> {
        let tag = self.effective_tag_mode();
        Ok(match (self.mode, self.capacity) {
            (BtbMode::FdipBlock, BtbCapacity::Baseline(n)) => {
                let mut g = block_baseline(n)?;
                g.tag_mode = tag;
                Layout::Single(g)
            }
            (BtbMode::FdipBlock, BtbCapacity::Infinite) => {
                Layout::Single(BtbGeometry::block_based(INFINITE_SETS, Ways::Unbounded))
            }
            (BtbMode::MonolithicInstr, BtbCapacity::Baseline(n)) => {
                let g = block_baseline(n)?;
                Layout::Single(BtbGeometry::instruction_based(g.sets, g.ways, tag))
            }
            (BtbMode::MonolithicInstr, BtbCapacity::Infinite) => Layout::Single(BtbGeometry::instruction_based(
                INFINITE_SETS,
                Ways::Unbounded,
                TagMode::Full,
            )),
            (BtbMode::Fdipx, BtbCapacity::Baseline(n)) => Layout::Ensemble(fdipx_sizing(n)?.with_tag_mode(tag)),
            (BtbMode::Fdipx, BtbCapacity::Infinite) => {
                Layout::Ensemble(EnsembleConfig::unbounded(INFINITE_SETS, TagMode::Full)?)
            }
        })
    }

    pub fn build(&self) -> Result<BtbUnit, ConfigError> {
        Ok(match (self.mode, self.layout()?) {
            (BtbMode::FdipBlock, Layout::Single(g)) => BtbUnit::Block(BlockBtb::new(g)?),
            (_, Layout::Single(g)) => BtbUnit::Instruction(InstructionBtb::monolithic(g)?),
            (_, Layout::Ensemble(e)) => BtbUnit::Instruction(InstructionBtb::ensemble(&e)?),
        })
    }

    /// Analytical storage; `None` for unbounded BTBs.
    pub fn storage(&self) -> Result<Option<StorageBreakdown>, ConfigError> {
        Ok(match self.layout()? {
            Layout::Single(g) => geometry_storage(&g),
            Layout::Ensemble(e) => ensemble_storage(&e),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirectionPolicy {
    /// Conditional branches found in the BTB follow the trace outcome.
    Oracle,
    /// Two-bit saturating counters indexed by PC.
    Bimodal { entries: usize },
}

/// Every knob of a front-end run. Defaults are documented modeling choices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrontendConfig {
    pub btb: BtbConfig,
    pub prefetch: bool,
    pub ftq_capacity: usize,
    pub fetch_width: usize,
    /// Instruction-granular BTB queries per cycle; the block-based BTB makes
    /// one query per cycle and falls through this many instructions on a miss.
    pub lookup_bandwidth: usize,
    /// FTQ entries the prefetcher scans per cycle.
    pub prefetch_scan_rate: usize,
    pub miss_latency: u64,
    pub resteer_penalty: u64,
    pub l1i_bytes: u64,
    pub l1i_ways: usize,
    pub ras_entries: usize,
    pub filter_entries: usize,
    pub direction: DirectionPolicy,
    /// Retired instructions before statistics start counting.
    pub warmup_instructions: u64,
}

impl Default for FrontendConfig {
    fn default() -> Self {
        FrontendConfig {
            btb: BtbConfig::new(BtbMode::Fdipx, BtbCapacity::Baseline(1024)),
            prefetch: true,
            ftq_capacity: 24,
            fetch_width: 4,
            lookup_bandwidth: 8,
            prefetch_scan_rate: 2,
            miss_latency: 30,
            resteer_penalty: 8,
            l1i_bytes: 32 * 1024,
            l1i_ways: 8,
            ras_entries: super::ras::DEFAULT_RAS_ENTRIES,
            filter_entries: super::filter::DEFAULT_FILTER_ENTRIES,
            direction: DirectionPolicy::Oracle,
            warmup_instructions: 0,
        }
    }
}

//! Branch-offset distribution of a trace.

use std::collections::HashSet;
use std::io::{self, Write};

use super::format::TraceError;
use super::record::TraceRecord;
use crate::addr::{BranchKind, WORD_INDEX_BITS};
use crate::btb::offset::{compute_offset, min_offset_bits};

pub const OFFSET_BINS: usize = WORD_INDEX_BITS as usize + 1;

const DIRECT_KINDS: [BranchKind; 3] = [
    BranchKind::ConditionalDirect,
    BranchKind::UnconditionalDirect,
    BranchKind::CallDirect,
];
const INDIRECT_KINDS: [BranchKind; 3] = [BranchKind::Return, BranchKind::IndirectJump, BranchKind::IndirectCall];

/// Offset-width buckets matching the ensemble partitions, plus indirect
/// branches (which carry full targets).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OffsetClass {
    UpTo8,
    Bits9To13,
    Bits14To23,
    Bits24To46,
    Indirect,
}

impl OffsetClass {
    pub const ALL: [OffsetClass; 5] = [
        OffsetClass::UpTo8,
        OffsetClass::Bits9To13,
        OffsetClass::Bits14To23,
        OffsetClass::Bits24To46,
        OffsetClass::Indirect,
    ];

    pub fn of_bits(bits: u32) -> OffsetClass {
        match bits {
            0..=8 => OffsetClass::UpTo8,
            9..=13 => OffsetClass::Bits9To13,
            14..=23 => OffsetClass::Bits14To23,
            _ => OffsetClass::Bits24To46,
        }
    }

    /// Inclusive range of offset widths; `None` for indirect.
    pub fn bit_range(self) -> Option<(u32, u32)> {
        match self {
            OffsetClass::UpTo8 => Some((0, 8)),
            OffsetClass::Bits9To13 => Some((9, 13)),
            OffsetClass::Bits14To23 => Some((14, 23)),
            OffsetClass::Bits24To46 => Some((24, 46)),
            OffsetClass::Indirect => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OffsetHistogram {
    direct: [[u64; OFFSET_BINS]; 3],
    indirect: [u64; 3],
}

impl Default for OffsetHistogram {
    fn default() -> Self {
        OffsetHistogram {
            direct: [[0; OFFSET_BINS]; 3],
            indirect: [0; 3],
        }
    }
}

fn direct_slot(kind: BranchKind) -> Option<usize> {
    DIRECT_KINDS.iter().position(|&k| k == kind)
}

fn indirect_slot(kind: BranchKind) -> Option<usize> {
    INDIRECT_KINDS.iter().position(|&k| k == kind)
}

impl OffsetHistogram {
    /// Counts one taken branch. Direct branches land in the bin of their
    /// minimal offset width, indirect ones in the full-target bin.
    pub fn record(&mut self, rec: &TraceRecord) {
        let Some(kind) = rec.kind else { return };
        if let Some(i) = direct_slot(kind) {
            let bits = min_offset_bits(compute_offset(rec.pc, rec.target));
            self.direct[i][bits as usize] += 1;
        } else if let Some(i) = indirect_slot(kind) {
            self.indirect[i] += 1;
        }
    }

    pub fn count(&self, kind: BranchKind, bits: u32) -> u64 {
        direct_slot(kind).map_or(0, |i| self.direct[i][bits as usize])
    }

    pub fn indirect_count(&self, kind: BranchKind) -> u64 {
        indirect_slot(kind).map_or(0, |i| self.indirect[i])
    }

    /// All direct kinds together.
    pub fn bin(&self, bits: u32) -> u64 {
        self.direct.iter().map(|b| b[bits as usize]).sum()
    }

    pub fn direct_total(&self) -> u64 {
        self.direct.iter().flatten().sum()
    }

    pub fn indirect_total(&self) -> u64 {
        self.indirect.iter().sum()
    }

    pub fn total(&self) -> u64 {
        self.direct_total() + self.indirect_total()
    }

    pub fn class_count(&self, class: OffsetClass) -> u64 {
        match class.bit_range() {
            Some((lo, hi)) => (lo..=hi).map(|b| self.bin(b)).sum(),
            None => self.indirect_total(),
        }
    }

    /// Share of all counted branches in each class, in `OffsetClass::ALL` order.
    pub fn class_fractions(&self) -> [f64; 5] {
        let total = self.total();
        OffsetClass::ALL.map(|c| {
            if total == 0 {
                0.0
            } else {
                self.class_count(c) as f64 / total as f64
            }
        })
    }

    /// Bin-wise sum; lets shards of a trace be analyzed independently.
    pub fn merge(&mut self, other: &OffsetHistogram) {
        for (a, b) in self.direct.iter_mut().zip(&other.direct) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        for (x, y) in self.indirect.iter_mut().zip(&other.indirect) {
            *x += y;
        }
    }
}

/// Dynamic (every taken occurrence) and static (each taken branch PC once)
/// histograms.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OffsetAnalysis {
    pub dynamic: OffsetHistogram,
    pub static_: OffsetHistogram,
}

#[derive(Debug, Default)]
pub struct OffsetAnalyzer {
    analysis: OffsetAnalysis,
    seen: HashSet<u64>,
}

impl OffsetAnalyzer {
    pub fn observe(&mut self, rec: &TraceRecord) {
        // not-taken conditionals have no realized target
        if !rec.is_taken_branch() {
            return;
        }
        self.analysis.dynamic.record(rec);
        if self.seen.insert(rec.pc.get()) {
            self.analysis.static_.record(rec);
        }
    }

    pub fn finish(self) -> OffsetAnalysis {
        self.analysis
    }
}

pub fn analyze_offsets<I>(trace: I) -> Result<OffsetAnalysis, TraceError>
where
    I: IntoIterator<Item = Result<TraceRecord, TraceError>>,
{
    let mut a = OffsetAnalyzer::default();
    for rec in trace {
        a.observe(&rec?);
    }
    Ok(a.finish())
}

pub const CSV_HEADER: &str = "bits,kind,mode,count,frequency";

/// Writes nonzero bins as `bits,kind,mode,count,frequency`; indirect bins
/// use `full` for the bit count.
pub fn write_histogram_csv<W: Write>(a: &OffsetAnalysis, mut out: W) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for (mode, h) in [("dynamic", &a.dynamic), ("static", &a.static_)] {
        let total = h.total();
        let freq = |c: u64| c as f64 / total as f64;
        for kind in DIRECT_KINDS {
            for bits in 0..OFFSET_BINS as u32 {
                let c = h.count(kind, bits);
                if c > 0 {
                    writeln!(out, "{bits},{kind},{mode},{c},{:.6}", freq(c))?;
                }
            }
        }
        for kind in INDIRECT_KINDS {
            let c = h.indirect_count(kind);
            if c > 0 {
                writeln!(out, "full,{kind},{mode},{c},{:.6}", freq(c))?;
            }
        }
    }
    Ok(())
}

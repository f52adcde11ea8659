//! Analytical storage model. Behavioral tables keep full metadata; the bit
//! counts here describe what the hardware would have to store.

use super::geometry::{BtbGeometry, EnsembleConfig, BLOCK_SIZE_FIELD_BITS, KIND_FIELD_BITS};
use super::tag::{full_tag_bits, COMPRESSED_TAG_BITS};
use crate::addr::WORD_INDEX_BITS;

/// Entry size of a basic-block-oriented BTB with `sets` sets.
pub fn bb_btb_entry_bits(sets: usize) -> u32 {
    full_tag_bits(sets) + WORD_INDEX_BITS + BLOCK_SIZE_FIELD_BITS + KIND_FIELD_BITS
}

/// Entry size of an ensemble partition with a compressed tag.
pub fn fdipx_entry_bits(offset_field_bits: u32) -> u32 {
    COMPRESSED_TAG_BITS + offset_field_bits + KIND_FIELD_BITS
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StorageLine {
    pub offset_field_bits: u32,
    pub entries: u64,
    pub entry_bits: u32,
    pub bits: u64,
}

impl StorageLine {
    fn of(g: &BtbGeometry) -> Option<Self> {
        let entries = g.entries()?;
        let entry_bits = g.entry_bits();
        Some(StorageLine {
            offset_field_bits: g.offset_field_bits,
            entries,
            entry_bits,
            bits: entries * entry_bits as u64,
        })
    }

    /// Whole bytes, rounded up.
    pub fn bytes(&self) -> u64 {
        self.bits.div_ceil(8)
    }

    pub fn kb(&self) -> f64 {
        self.bits as f64 / 8.0 / 1024.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StorageBreakdown {
    pub lines: Vec<StorageLine>,
}

impl StorageBreakdown {
    pub fn total_bits(&self) -> u64 {
        self.lines.iter().map(|l| l.bits).sum()
    }

    pub fn total_bytes(&self) -> u64 {
        self.total_bits().div_ceil(8)
    }

    pub fn total_entries(&self) -> u64 {
        self.lines.iter().map(|l| l.entries).sum()
    }

    pub fn total_kb(&self) -> f64 {
        self.total_bits() as f64 / 8.0 / 1024.0
    }
}

/// Storage of a single BTB; `None` if it is unbounded.
pub fn geometry_storage(g: &BtbGeometry) -> Option<StorageBreakdown> {
    Some(StorageBreakdown {
        lines: vec![StorageLine::of(g)?],
    })
}

/// Per-partition storage of an ensemble; `None` if any partition is unbounded.
pub fn ensemble_storage(e: &EnsembleConfig) -> Option<StorageBreakdown> {
    let lines = e.partitions().iter().map(StorageLine::of).collect::<Option<Vec<_>>>()?;
    Some(StorageBreakdown { lines })
}

/// Formats a byte count in KB (1024 bytes) with at most two decimals,
/// rounding half up and dropping trailing zeros: `11776` → `"11.5"`.
pub fn format_kb(bits: u64) -> String {
    // hundredths of a KB, rounded half up: bits * 100 / 8192
    let hundredths = (bits * 100 * 2 + 8192) / (2 * 8192);
    let whole = hundredths / 100;
    let frac = hundredths % 100;
    if frac == 0 {
        format!("{whole}")
    } else if frac.is_multiple_of(10) {
        format!("{whole}.{}", frac / 10)
    } else {
        format!("{whole}.{frac:02}")
    }
}

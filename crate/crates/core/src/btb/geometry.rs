use thiserror::Error;

use super::offset::PARTITION_OFFSET_BITS;
use super::tag::TagMode;
use crate::addr::WORD_INDEX_BITS;

/// Bits spent on the branch-kind field of every entry.
pub const KIND_FIELD_BITS: u32 = 2;

/// Size field of a basic-block-oriented entry; blocks are capped at 31 instructions.
pub const BLOCK_SIZE_FIELD_BITS: u32 = 5;

pub const MAX_BLOCK_INSTRUCTIONS: u32 = (1 << BLOCK_SIZE_FIELD_BITS) - 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("set count {0} is not a power of two")]
    SetsNotPowerOfTwo(usize),
    #[error("associativity must be at least 1")]
    ZeroWays,
    #[error("offset field of {0} bits exceeds the 46-bit word index")]
    OffsetTooWide(u32),
    #[error("ensemble partitions must have offset widths 8, 13, 23, 46 (got {0:?})")]
    BadPartitionWidths(Vec<u32>),
    #[error("baseline entry count {0} is not a power-of-two multiple of 1024")]
    BadBaseline(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Ways {
    Bounded(usize),
    /// Sets grow without limit; nothing is ever evicted.
    Unbounded,
}

impl Ways {
    pub fn limit(self) -> Option<usize> {
        match self {
            Ways::Bounded(n) => Some(n),
            Ways::Unbounded => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PayloadMode {
    /// Direct branches store a signed offset, indirect ones a full target when
    /// the field is wide enough.
    OffsetOrTarget,
    /// Every entry stores a full word-index target.
    TargetOnly,
}

/// Shape of a single set-associative BTB.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BtbGeometry {
    pub sets: usize,
    pub ways: Ways,
    pub offset_field_bits: u32,
    pub tag_mode: TagMode,
    pub payload_mode: PayloadMode,
    pub block_size_field_bits: u32,
}

impl BtbGeometry {
    /// Basic-block-oriented BTB: full tag, full target, 5-bit block size.
    pub fn block_based(sets: usize, ways: Ways) -> Self {
        BtbGeometry {
            sets,
            ways,
            offset_field_bits: WORD_INDEX_BITS,
            tag_mode: TagMode::Full,
            payload_mode: PayloadMode::TargetOnly,
            block_size_field_bits: BLOCK_SIZE_FIELD_BITS,
        }
    }

    /// Conventional instruction-indexed BTB storing full targets.
    pub fn instruction_based(sets: usize, ways: Ways, tag_mode: TagMode) -> Self {
        BtbGeometry {
            sets,
            ways,
            offset_field_bits: WORD_INDEX_BITS,
            tag_mode,
            payload_mode: PayloadMode::TargetOnly,
            block_size_field_bits: 0,
        }
    }

    /// One partition of the offset-specialized ensemble.
    pub fn partition(offset_field_bits: u32, sets: usize, ways: Ways, tag_mode: TagMode) -> Self {
        BtbGeometry {
            sets,
            ways,
            offset_field_bits,
            tag_mode,
            payload_mode: PayloadMode::OffsetOrTarget,
            block_size_field_bits: 0,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !self.sets.is_power_of_two() {
            return Err(ConfigError::SetsNotPowerOfTwo(self.sets));
        }
        if self.ways == Ways::Bounded(0) {
            return Err(ConfigError::ZeroWays);
        }
        if self.offset_field_bits > WORD_INDEX_BITS {
            return Err(ConfigError::OffsetTooWide(self.offset_field_bits));
        }
        Ok(())
    }

    pub fn is_block_based(&self) -> bool {
        self.block_size_field_bits > 0
    }

    /// `None` when the ways are unbounded.
    pub fn entries(&self) -> Option<u64> {
        self.ways.limit().map(|w| (self.sets * w) as u64)
    }

    pub fn tag_bits(&self) -> u32 {
        match self.tag_mode {
            TagMode::Full => super::tag::full_tag_bits(self.sets),
            TagMode::Compressed16 => super::tag::COMPRESSED_TAG_BITS,
        }
    }

    /// Analytical entry size: tag + offset/target + block size + kind.
    pub fn entry_bits(&self) -> u32 {
        self.tag_bits() + self.offset_field_bits + self.block_size_field_bits + KIND_FIELD_BITS
    }
}

/// The four-partition offset-specialized BTB organization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnsembleConfig {
    partitions: [BtbGeometry; 4],
}

impl EnsembleConfig {
    pub fn new(partitions: [BtbGeometry; 4]) -> Result<Self, ConfigError> {
        let widths: Vec<u32> = partitions.iter().map(|p| p.offset_field_bits).collect();
        if widths != PARTITION_OFFSET_BITS || partitions.iter().any(|p| p.payload_mode != PayloadMode::OffsetOrTarget) {
            return Err(ConfigError::BadPartitionWidths(widths));
        }
        for p in &partitions {
            p.validate()?;
        }
        Ok(EnsembleConfig { partitions })
    }

    /// Unbounded partitions: no capacity misses, only cold ones.
    pub fn unbounded(sets: usize, tag_mode: TagMode) -> Result<Self, ConfigError> {
        Self::new(PARTITION_OFFSET_BITS.map(|w| BtbGeometry::partition(w, sets, Ways::Unbounded, tag_mode)))
    }

    pub fn partitions(&self) -> &[BtbGeometry; 4] {
        &self.partitions
    }

    pub fn with_tag_mode(mut self, tag_mode: TagMode) -> Self {
        for p in &mut self.partitions {
            p.tag_mode = tag_mode;
        }
        self
    }

    pub fn total_entries(&self) -> Option<u64> {
        self.partitions.iter().map(|p| p.entries()).sum()
    }
}

/// Sizes the ensemble to the storage of a basic-block-oriented BTB with
/// `baseline_entries` entries.
///
/// The three narrow partitions get 3/4 of the baseline entry count each, as
/// `baseline/8` sets of 6 ways. The wide partition gets 7/64 of it, as
/// `baseline/64` sets of 7 ways.
pub fn fdipx_sizing(baseline_entries: u64) -> Result<EnsembleConfig, ConfigError> {
    if baseline_entries < 1024 || !baseline_entries.is_multiple_of(1024) || !(baseline_entries / 1024).is_power_of_two()
    {
        return Err(ConfigError::BadBaseline(baseline_entries));
    }
    let narrow_sets = (baseline_entries / 8) as usize;
    let wide_sets = (baseline_entries / 64) as usize;
    let tag = TagMode::Compressed16;
    EnsembleConfig::new([
        BtbGeometry::partition(PARTITION_OFFSET_BITS[0], narrow_sets, Ways::Bounded(6), tag),
        BtbGeometry::partition(PARTITION_OFFSET_BITS[1], narrow_sets, Ways::Bounded(6), tag),
        BtbGeometry::partition(PARTITION_OFFSET_BITS[2], narrow_sets, Ways::Bounded(6), tag),
        BtbGeometry::partition(PARTITION_OFFSET_BITS[3], wide_sets, Ways::Bounded(7), tag),
    ])
}

/// The basic-block-oriented baseline: `baseline_entries / 8` sets, 8 ways.
pub fn block_baseline(baseline_entries: u64) -> Result<BtbGeometry, ConfigError> {
    if baseline_entries < 8 || !baseline_entries.is_power_of_two() {
        return Err(ConfigError::BadBaseline(baseline_entries));
    }
    let g = BtbGeometry::block_based((baseline_entries / 8) as usize, Ways::Bounded(8));
    g.validate()?;
    Ok(g)
}

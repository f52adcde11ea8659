//! Set indexing and tag formation, including the folded-XOR 16-bit tag.

use crate::addr::{InstrAddress, WORD_INDEX_BITS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TagMode {
    /// Every word-index bit above the set index.
    Full,
    /// Low byte of the full tag kept, upper bits XOR-folded into one byte.
    Compressed16,
}

impl TagMode {
    pub fn name(self) -> &'static str {
        match self {
            TagMode::Full => "full",
            TagMode::Compressed16 => "compressed16",
        }
    }
}

pub const COMPRESSED_TAG_BITS: u32 = 16;

/// Folds a `full_width`-bit tag into 16 bits.
///
/// Bits `[7:0]` pass through. Bits above 8 are cut into 8-bit blocks starting
/// at bit 8, the topmost block zero-extended, and XORed together to form the
/// high byte.
pub fn compress_tag(full_tag: u64, full_width: u32) -> u16 {
    debug_assert!((COMPRESSED_TAG_BITS..=64).contains(&full_width));
    let masked = if full_width >= 64 {
        full_tag
    } else {
        full_tag & ((1u64 << full_width) - 1)
    };
    let low = (masked & 0xff) as u16;
    let mut rest = masked >> 8;
    let mut high = 0u16;
    while rest != 0 {
        high ^= (rest & 0xff) as u16;
        rest >>= 8;
    }
    (high << 8) | low
}

/// Width of the uncompressed tag for a BTB with `sets` sets.
pub fn full_tag_bits(sets: usize) -> u32 {
    debug_assert!(sets.is_power_of_two());
    WORD_INDEX_BITS - sets.trailing_zeros()
}

/// Set index and (possibly compressed) tag of `pc` in a BTB with `sets` sets.
pub fn btb_index_and_tag(pc: InstrAddress, sets: usize, mode: TagMode) -> (usize, u64) {
    debug_assert!(sets.is_power_of_two());
    let word = pc.word_index();
    let set = (word & (sets as u64 - 1)) as usize;
    let width = full_tag_bits(sets);
    let full = (word >> sets.trailing_zeros()) & ((1u64 << width) - 1);
    let tag = match mode {
        TagMode::Full => full,
        TagMode::Compressed16 => compress_tag(full, width) as u64,
    };
    (set, tag)
}

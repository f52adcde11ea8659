//! PC-relative branch offsets, measured in instructions.

use crate::addr::{BranchKind, InstrAddress, WORD_INDEX_BITS};

/// Offset-field widths of the four ensemble partitions, narrowest first.
pub const PARTITION_OFFSET_BITS: [u32; 4] = [8, 13, 23, 46];

/// Partition that receives returns and everything else needing no stored target.
pub const RETURN_PARTITION: usize = 0;

/// Partition wide enough for a full word-aligned target.
pub const FULL_TARGET_PARTITION: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Forward,
    Backward,
}

/// Distance from a branch to its target in instructions, plus a sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SignedOffset {
    pub magnitude: u64,
    pub direction: Direction,
}

impl SignedOffset {
    pub const ZERO: SignedOffset = SignedOffset {
        magnitude: 0,
        direction: Direction::Forward,
    };

    pub fn new(magnitude: u64, direction: Direction) -> Self {
        SignedOffset { magnitude, direction }
    }

    /// Applies the offset to `pc`. Returns `None` if the result leaves the
    /// address space.
    pub fn apply(self, pc: InstrAddress) -> Option<InstrAddress> {
        let word = pc.word_index();
        let target = match self.direction {
            Direction::Forward => word.checked_add(self.magnitude)?,
            Direction::Backward => word.checked_sub(self.magnitude)?,
        };
        InstrAddress::from_word_index(target).ok()
    }
}

/// A self-branch is recorded as a forward offset of zero.
pub fn compute_offset(pc: InstrAddress, target: InstrAddress) -> SignedOffset {
    let (p, t) = (pc.word_index(), target.word_index());
    if t >= p {
        SignedOffset::new(t - p, Direction::Forward)
    } else {
        SignedOffset::new(p - t, Direction::Backward)
    }
}

/// Smallest `n` with `magnitude <= 2^n - 1`.
pub fn min_offset_bits(off: SignedOffset) -> u32 {
    u64::BITS - off.magnitude.leading_zeros()
}

/// Picks the ensemble partition for a branch.
///
/// Direct branches go to the narrowest partition whose offset field holds the
/// offset. Indirect jumps and calls need a full target and go to the widest
/// partition. Returns take their target from the return address stack and
/// live in partition 0.
///
/// Panics if a direct branch comes without an offset, or with one that cannot
/// exist in a 48-bit aligned address space.
pub fn select_partition(kind: BranchKind, off: Option<SignedOffset>) -> usize {
    match kind {
        BranchKind::Return => RETURN_PARTITION,
        BranchKind::IndirectJump | BranchKind::IndirectCall => FULL_TARGET_PARTITION,
        _ => {
            let off = off.expect("direct branch requires an offset");
            let bits = min_offset_bits(off);
            assert!(
                bits <= WORD_INDEX_BITS,
                "offset of {bits} bits cannot occur in a 48-bit address space"
            );
            PARTITION_OFFSET_BITS
                .iter()
                .position(|&w| bits <= w)
                .expect("widest partition covers every aligned offset")
        }
    }
}

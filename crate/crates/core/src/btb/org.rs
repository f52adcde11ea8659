//! The BTB organizations the front end can be built with.

use super::geometry::{BtbGeometry, ConfigError, EnsembleConfig, PayloadMode, MAX_BLOCK_INSTRUCTIONS};
use super::offset::{compute_offset, min_offset_bits, select_partition, SignedOffset};
use super::table::{BtbEntry, BtbTable, InsertAction, Payload};
use crate::addr::{BranchKind, InstrAddress};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BtbHit {
    pub kind: BranchKind,
    /// Reconstructed absolute target; `None` for returns.
    pub target: Option<InstrAddress>,
    pub partition: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InsertReport {
    pub partition: usize,
    pub action: InsertAction,
}

impl InsertReport {
    pub fn evicted(&self) -> Option<&BtbEntry> {
        match &self.action {
            InsertAction::Evicted(e) => Some(e),
            _ => None,
        }
    }
}

/// Instruction-indexed BTB: either one monolithic table or the
/// four-partition ensemble probed in parallel.
#[derive(Debug, Clone)]
pub struct InstructionBtb {
    parts: Vec<BtbTable>,
    multi_hits: u64,
}

impl InstructionBtb {
    pub fn monolithic(geometry: BtbGeometry) -> Result<Self, ConfigError> {
        Ok(InstructionBtb {
            parts: vec![BtbTable::new(geometry)?],
            multi_hits: 0,
        })
    }

    pub fn ensemble(config: &EnsembleConfig) -> Result<Self, ConfigError> {
        let parts = config
            .partitions()
            .iter()
            .map(|g| BtbTable::new(*g))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(InstructionBtb { parts, multi_hits: 0 })
    }

    pub fn is_ensemble(&self) -> bool {
        self.parts.len() > 1
    }

    pub fn partitions(&self) -> &[BtbTable] {
        &self.parts
    }

    /// Simultaneous hits in more than one partition (only possible through
    /// tag aliasing).
    pub fn multi_hits(&self) -> u64 {
        self.multi_hits
    }

    /// Partition a branch is allocated in.
    pub fn partition_for(&self, pc: InstrAddress, kind: BranchKind, target: InstrAddress) -> usize {
        if !self.is_ensemble() {
            return 0;
        }
        let off = kind.is_direct().then(|| compute_offset(pc, target));
        select_partition(kind, off)
    }

    pub fn lookup(&mut self, pc: InstrAddress) -> Option<BtbHit> {
        let mut hit_part = None;
        let mut hits = 0;
        for (i, p) in self.parts.iter().enumerate() {
            if p.probe(pc).is_some() {
                hits += 1;
                hit_part.get_or_insert(i);
            }
        }
        if hits > 1 {
            self.multi_hits += 1;
        }
        let partition = hit_part?;
        let entry = self.parts[partition].lookup(pc).expect("probed hit");
        Some(BtbHit {
            kind: entry.kind,
            target: decode_target(pc, entry),
            partition,
        })
    }

    /// Allocates or updates the entry for a branch observed with `target`.
    /// Copies of `pc` in other partitions are invalidated.
    pub fn insert(&mut self, pc: InstrAddress, kind: BranchKind, target: InstrAddress) -> InsertReport {
        let partition = self.partition_for(pc, kind, target);
        for (i, p) in self.parts.iter_mut().enumerate() {
            if i != partition {
                p.invalidate(pc);
            }
        }
        let table = &mut self.parts[partition];
        let payload = encode_payload(table.geometry(), pc, kind, target);
        let action = table.insert(pc, kind, payload, None);
        InsertReport { partition, action }
    }

    pub fn invalidate(&mut self, pc: InstrAddress) -> bool {
        let mut any = false;
        for p in &mut self.parts {
            any |= p.invalidate(pc);
        }
        any
    }
}

fn encode_payload(g: &BtbGeometry, pc: InstrAddress, kind: BranchKind, target: InstrAddress) -> Payload {
    if kind == BranchKind::Return {
        return Payload::Offset(SignedOffset::ZERO);
    }
    match g.payload_mode {
        PayloadMode::TargetOnly => Payload::Target(target),
        PayloadMode::OffsetOrTarget if kind.is_direct() => {
            let off = compute_offset(pc, target);
            assert!(
                min_offset_bits(off) <= g.offset_field_bits,
                "offset {off:?} does not fit a {}-bit field",
                g.offset_field_bits
            );
            Payload::Offset(off)
        }
        PayloadMode::OffsetOrTarget => Payload::Target(target),
    }
}

fn decode_target(pc: InstrAddress, e: &BtbEntry) -> Option<InstrAddress> {
    if e.kind == BranchKind::Return {
        return None;
    }
    match e.payload {
        Payload::Offset(off) => off.apply(pc),
        Payload::Target(t) => Some(t),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockHit {
    /// Instructions in the block; the terminating branch is the last one.
    pub size: u32,
    pub kind: BranchKind,
    pub target: Option<InstrAddress>,
}

impl BlockHit {
    pub fn branch_pc(&self, start: InstrAddress) -> InstrAddress {
        start.advance(self.size as u64 - 1)
    }
}

/// Basic-block-oriented BTB indexed by block start address.
#[derive(Debug, Clone)]
pub struct BlockBtb {
    table: BtbTable,
}

impl BlockBtb {
    pub fn new(geometry: BtbGeometry) -> Result<Self, ConfigError> {
        Ok(BlockBtb {
            table: BtbTable::new(geometry)?,
        })
    }

    pub fn table(&self) -> &BtbTable {
        &self.table
    }

    pub fn lookup(&mut self, start: InstrAddress) -> Option<BlockHit> {
        let e = self.table.lookup(start)?;
        Some(BlockHit {
            size: e.block_size.expect("block entries carry a size") as u32,
            kind: e.kind,
            target: decode_target(start, e),
        })
    }

    /// Records the block `[start, start + 4*size)` ending in a branch.
    ///
    /// Panics if `size` is zero or exceeds the 5-bit size field.
    pub fn insert(&mut self, start: InstrAddress, size: u32, kind: BranchKind, target: InstrAddress) -> InsertAction {
        assert!(
            (1..=MAX_BLOCK_INSTRUCTIONS).contains(&size),
            "block size {size} outside 1..=31"
        );
        let payload = if kind == BranchKind::Return {
            Payload::Offset(SignedOffset::ZERO)
        } else {
            Payload::Target(target)
        };
        self.table.insert(start, kind, payload, Some(size as u8))
    }

    pub fn invalidate(&mut self, start: InstrAddress) -> bool {
        self.table.invalidate(start)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::btb::geometry::{fdipx_sizing, Ways};
    use crate::btb::tag::TagMode;

    fn a(v: u64) -> InstrAddress {
        InstrAddress::new(v).unwrap()
    }

    #[test]
    fn ensemble_hit_reconstructs_target() {
        let mut btb = InstructionBtb::ensemble(&fdipx_sizing(1024).unwrap()).unwrap();
        assert!(btb.lookup(a(0x1000)).is_none());
        let r = btb.insert(a(0x1000), BranchKind::ConditionalDirect, a(0x1800));
        assert_eq!(r.partition, 1);
        assert_eq!(r.action, InsertAction::Placed);
        let hit = btb.lookup(a(0x1000)).unwrap();
        assert_eq!(hit.target, Some(a(0x1800)));
        assert_eq!(hit.partition, 1);
    }

    #[test]
    fn backward_and_indirect_targets() {
        let mut btb = InstructionBtb::ensemble(&fdipx_sizing(1024).unwrap()).unwrap();
        btb.insert(a(0x2000), BranchKind::UnconditionalDirect, a(0x1800));
        btb.insert(a(0x3000), BranchKind::IndirectCall, a(0xdead_0000));
        btb.insert(a(0x4000), BranchKind::Return, a(0x1234_5678));
        assert_eq!(btb.lookup(a(0x2000)).unwrap().target, Some(a(0x1800)));
        let ind = btb.lookup(a(0x3000)).unwrap();
        assert_eq!((ind.partition, ind.target), (3, Some(a(0xdead_0000))));
        let ret = btb.lookup(a(0x4000)).unwrap();
        assert_eq!((ret.partition, ret.kind, ret.target), (0, BranchKind::Return, None));
    }

    #[test]
    fn indirect_retarget_is_in_place() {
        let mut btb = InstructionBtb::ensemble(&fdipx_sizing(1024).unwrap()).unwrap();
        btb.insert(a(0x3000), BranchKind::IndirectJump, a(0x8000));
        let r = btb.insert(a(0x3000), BranchKind::IndirectJump, a(0x9000));
        assert_eq!(r.action, InsertAction::Updated);
        assert_eq!(btb.lookup(a(0x3000)).unwrap().target, Some(a(0x9000)));
    }

    #[test]
    fn seventh_insert_into_six_way_set_evicts_lru() {
        let mut btb = InstructionBtb::ensemble(&fdipx_sizing(1024).unwrap()).unwrap();
        // partition 0 has 128 sets: pcs 128 words apart share a set
        let pc = |i: u64| a(0x10_0000 + i * 128 * 4);
        for i in 0..6 {
            let r = btb.insert(pc(i), BranchKind::ConditionalDirect, pc(i).advance(3));
            assert_eq!((r.partition, r.action), (0, InsertAction::Placed));
        }
        let r = btb.insert(pc(6), BranchKind::ConditionalDirect, pc(6).advance(3));
        assert!(r.evicted().is_some());
        assert!(btb.lookup(pc(0)).is_none());
        assert!(btb.lookup(pc(1)).is_some());
    }

    #[test]
    fn moving_a_pc_between_partitions_leaves_one_copy() {
        let cfg = EnsembleConfig::unbounded(128, TagMode::Full).unwrap();
        let mut btb = InstructionBtb::ensemble(&cfg).unwrap();
        btb.insert(a(0x1000), BranchKind::UnconditionalDirect, a(0x1010));
        btb.insert(a(0x1000), BranchKind::UnconditionalDirect, a(0x10_0000));
        let hit = btb.lookup(a(0x1000)).unwrap();
        assert_eq!(hit.target, Some(a(0x10_0000)));
        assert_eq!(btb.multi_hits(), 0);
    }

    #[test]
    fn monolithic_stores_targets() {
        let g = BtbGeometry::instruction_based(128, Ways::Bounded(8), TagMode::Full);
        let mut btb = InstructionBtb::monolithic(g).unwrap();
        let r = btb.insert(a(0x40), BranchKind::CallDirect, a(0x1234_0000));
        assert_eq!(r.partition, 0);
        assert_eq!(btb.lookup(a(0x40)).unwrap().target, Some(a(0x1234_0000)));
    }

    #[test]
    fn block_btb_round_trip() {
        let mut btb = BlockBtb::new(BtbGeometry::block_based(128, Ways::Bounded(8))).unwrap();
        btb.insert(a(0x1000), 5, BranchKind::ConditionalDirect, a(0x4000));
        let hit = btb.lookup(a(0x1000)).unwrap();
        assert_eq!(hit.size, 5);
        assert_eq!(hit.branch_pc(a(0x1000)), a(0x1010));
        assert_eq!(hit.target, Some(a(0x4000)));
        assert!(btb.lookup(a(0x1004)).is_none());
    }

    #[test]
    #[should_panic]
    fn block_size_is_capped() {
        let mut btb = BlockBtb::new(BtbGeometry::block_based(128, Ways::Bounded(8))).unwrap();
        btb.insert(a(0x1000), 32, BranchKind::ConditionalDirect, a(0x4000));
    }
}

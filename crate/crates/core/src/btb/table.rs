//! A single set-associative table with true-LRU replacement.

use super::geometry::{BtbGeometry, ConfigError};
use super::offset::SignedOffset;
use super::tag::btb_index_and_tag;
use crate::addr::{BranchKind, InstrAddress};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Payload {
    Offset(SignedOffset),
    Target(InstrAddress),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BtbEntry {
    pub tag: u64,
    pub kind: BranchKind,
    pub payload: Payload,
    /// Instructions in the block, terminating branch included. Block-based only.
    pub block_size: Option<u8>,
    recency: u64,
}

impl BtbEntry {
    /// Larger is more recent.
    pub fn recency(&self) -> u64 {
        self.recency
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InsertAction {
    Placed,
    /// A valid entry with the same tag was overwritten in place.
    Updated,
    Evicted(BtbEntry),
}

#[derive(Debug, Clone)]
pub struct BtbTable {
    geometry: BtbGeometry,
    sets: Vec<Vec<BtbEntry>>,
    clock: u64,
}

impl BtbTable {
    pub fn new(geometry: BtbGeometry) -> Result<Self, ConfigError> {
        geometry.validate()?;
        let per_set = geometry.ways.limit().unwrap_or(0);
        Ok(BtbTable {
            geometry,
            sets: (0..geometry.sets).map(|_| Vec::with_capacity(per_set)).collect(),
            clock: 0,
        })
    }

    pub fn geometry(&self) -> &BtbGeometry {
        &self.geometry
    }

    pub fn index_and_tag(&self, pc: InstrAddress) -> (usize, u64) {
        btb_index_and_tag(pc, self.geometry.sets, self.geometry.tag_mode)
    }

    fn tick(&mut self) -> u64 {
        self.clock += 1;
        self.clock
    }

    /// Looks up `pc` and promotes a hit to most recently used.
    pub fn lookup(&mut self, pc: InstrAddress) -> Option<&BtbEntry> {
        let (set, tag) = self.index_and_tag(pc);
        let now = self.tick();
        let entry = self.sets[set].iter_mut().find(|e| e.tag == tag)?;
        entry.recency = now;
        Some(entry)
    }

    /// Looks up `pc` without touching replacement state.
    pub fn probe(&self, pc: InstrAddress) -> Option<&BtbEntry> {
        let (set, tag) = self.index_and_tag(pc);
        self.sets[set].iter().find(|e| e.tag == tag)
    }

    pub fn insert(
        &mut self,
        pc: InstrAddress,
        kind: BranchKind,
        payload: Payload,
        block_size: Option<u8>,
    ) -> InsertAction {
        let (set_idx, tag) = self.index_and_tag(pc);
        let now = self.tick();
        let limit = self.geometry.ways.limit();
        let set = &mut self.sets[set_idx];
        let fresh = BtbEntry {
            tag,
            kind,
            payload,
            block_size,
            recency: now,
        };
        if let Some(e) = set.iter_mut().find(|e| e.tag == tag) {
            *e = fresh;
            return InsertAction::Updated;
        }
        match limit {
            Some(ways) if set.len() >= ways => {
                let victim = set.iter_mut().min_by_key(|e| e.recency).expect("full set is nonempty");
                InsertAction::Evicted(std::mem::replace(victim, fresh))
            }
            _ => {
                set.push(fresh);
                InsertAction::Placed
            }
        }
    }

    /// Removes the entry matching `pc`'s tag, if any.
    pub fn invalidate(&mut self, pc: InstrAddress) -> bool {
        let (set, tag) = self.index_and_tag(pc);
        let before = self.sets[set].len();
        self.sets[set].retain(|e| e.tag != tag);
        self.sets[set].len() != before
    }

    /// Next eviction victim of `set`, if the set is full.
    pub fn victim(&self, set: usize) -> Option<&BtbEntry> {
        let ways = self.geometry.ways.limit()?;
        let s = &self.sets[set];
        if s.len() < ways {
            return None;
        }
        s.iter().min_by_key(|e| e.recency)
    }

    pub fn set_entries(&self, set: usize) -> &[BtbEntry] {
        &self.sets[set]
    }

    pub fn occupancy(&self) -> usize {
        self.sets.iter().map(Vec::len).sum()
    }
}

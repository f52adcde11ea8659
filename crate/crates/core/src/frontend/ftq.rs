use std::collections::VecDeque;

use crate::addr::{BranchKind, InstrAddress};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PredictedBranch {
    pub pc: InstrAddress,
    pub kind: BranchKind,
    pub target: InstrAddress,
}

/// A predicted fetch region. Only its last instruction may be a
/// predicted-taken branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FtqEntry {
    pub start: InstrAddress,
    pub length: u32,
    pub predicted_next: InstrAddress,
    pub terminating_branch: Option<PredictedBranch>,
}

impl FtqEntry {
    pub fn end(&self) -> InstrAddress {
        self.start.advance(self.length as u64)
    }

    /// Cache blocks the region touches, in address order.
    pub fn blocks(&self, block_bytes: u64) -> impl Iterator<Item = u64> {
        let first = self.start.get() / block_bytes;
        let last = self.start.advance(self.length as u64 - 1).get() / block_bytes;
        first..=last
    }
}

/// Fetch target queue. The head is the fetch point; the prefetcher scans the
/// entries behind it.
#[derive(Debug, Clone)]
pub struct Ftq {
    entries: VecDeque<FtqEntry>,
    capacity: usize,
    /// Index of the next entry the prefetcher has not scanned; never 0 while
    /// the queue is nonempty.
    scan_cursor: usize,
    /// Instructions of the head already handed to fetch.
    head_consumed: u32,
}

impl Ftq {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1);
        Ftq {
            entries: VecDeque::with_capacity(capacity),
            capacity,
            scan_cursor: 1,
            head_consumed: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.entries.len() >= self.capacity
    }

    pub fn push(&mut self, e: FtqEntry) {
        assert!(!self.is_full(), "push into a full FTQ");
        debug_assert!(e.length >= 1);
        self.entries.push_back(e);
    }

    pub fn head(&self) -> Option<&FtqEntry> {
        self.entries.front()
    }

    pub fn head_consumed(&self) -> u32 {
        self.head_consumed
    }

    /// Address of the next instruction fetch will take from the head.
    pub fn fetch_pc(&self) -> Option<InstrAddress> {
        self.head().map(|h| h.start.advance(self.head_consumed as u64))
    }

    /// Marks one head instruction fetched, retiring the head once it is
    /// exhausted. Returns the retired entry.
    pub fn consume_one(&mut self) -> Option<FtqEntry> {
        let head = *self.entries.front()?;
        self.head_consumed += 1;
        if self.head_consumed < head.length {
            return None;
        }
        self.head_consumed = 0;
        self.entries.pop_front();
        self.scan_cursor = self.scan_cursor.saturating_sub(1).max(1);
        Some(head)
    }

    pub fn flush(&mut self) {
        self.entries.clear();
        self.scan_cursor = 1;
        self.head_consumed = 0;
    }

    pub fn scan_cursor(&self) -> usize {
        self.scan_cursor
    }

    /// Next entry behind the head that the prefetcher has not looked at yet.
    pub fn next_unscanned(&mut self) -> Option<FtqEntry> {
        let e = *self.entries.get(self.scan_cursor)?;
        self.scan_cursor += 1;
        Some(e)
    }

    pub fn iter(&self) -> impl Iterator<Item = &FtqEntry> {
        self.entries.iter()
    }
}

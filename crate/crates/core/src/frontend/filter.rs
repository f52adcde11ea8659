use std::collections::VecDeque;

pub const DEFAULT_FILTER_ENTRIES: usize = 10;

/// Fully associative FIFO of recently prefetched cache blocks.
#[derive(Debug, Clone)]
pub struct PrefetchFilter {
    recent: VecDeque<u64>,
    capacity: usize,
}

impl PrefetchFilter {
    pub fn new(capacity: usize) -> Self {
        PrefetchFilter {
            recent: VecDeque::with_capacity(capacity),
            capacity,
        }
    }

    pub fn contains(&self, block: u64) -> bool {
        self.recent.contains(&block)
    }

    /// Records an issued prefetch, dropping the oldest block when full.
    pub fn insert(&mut self, block: u64) {
        if self.capacity == 0 {
            return;
        }
        if self.recent.len() == self.capacity {
            self.recent.pop_front();
        }
        self.recent.push_back(block);
    }

    pub fn len(&self) -> usize {
        self.recent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.recent.is_empty()
    }
}

impl Default for PrefetchFilter {
    fn default() -> Self {
        Self::new(DEFAULT_FILTER_ENTRIES)
    }
}

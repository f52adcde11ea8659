//! Set-associative L1 instruction cache with in-flight fill tracking.

use std::collections::BTreeMap;

pub const BLOCK_BYTES: u64 = 64;

#[derive(Debug, Clone, Copy)]
struct Line {
    block: u64,
    lru: u64,
    /// Filled by a prefetch and not yet touched by a demand access.
    prefetched: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Fill {
    ready: u64,
    prefetch: bool,
    seq: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DemandOutcome {
    /// Resident; `first_use_of_prefetch` is set on the first demand hit to a
    /// prefetched line.
    Hit { first_use_of_prefetch: bool },
    /// A fill is already on its way. `prefetch` tells whether a prefetch
    /// started it.
    InFlight { ready: u64, prefetch: bool },
    /// A demand fill was started.
    Miss { ready: u64 },
}

#[derive(Debug, Clone)]
pub struct L1ICache {
    sets: Vec<Vec<Line>>,
    ways: usize,
    clock: u64,
    in_flight: BTreeMap<u64, Fill>,
    seq: u64,
}

impl L1ICache {
    pub fn new(size_bytes: u64, ways: usize) -> Self {
        let blocks = (size_bytes / BLOCK_BYTES) as usize;
        assert!(
            ways >= 1 && blocks >= ways && blocks.is_multiple_of(ways),
            "bad L1-I geometry"
        );
        let sets = blocks / ways;
        assert!(sets.is_power_of_two(), "L1-I set count must be a power of two");
        L1ICache {
            sets: vec![Vec::with_capacity(ways); sets],
            ways,
            clock: 0,
            in_flight: BTreeMap::new(),
            seq: 0,
        }
    }

    pub fn capacity_blocks(&self) -> usize {
        self.sets.len() * self.ways
    }

    fn set_of(&self, block: u64) -> usize {
        (block as usize) & (self.sets.len() - 1)
    }

    pub fn is_resident(&self, block: u64) -> bool {
        self.sets[self.set_of(block)].iter().any(|l| l.block == block)
    }

    pub fn is_in_flight(&self, block: u64) -> bool {
        self.in_flight.contains_key(&block)
    }

    /// Installs every fill that is ready by `now`, oldest request first.
    pub fn complete_fills(&mut self, now: u64) {
        let mut ready: Vec<(u64, Fill)> = self
            .in_flight
            .iter()
            .filter(|(_, f)| f.ready <= now)
            .map(|(&b, &f)| (b, f))
            .collect();
        if ready.is_empty() {
            return;
        }
        ready.sort_by_key(|(_, f)| (f.ready, f.seq));
        for (block, fill) in ready {
            self.in_flight.remove(&block);
            self.install(block, fill.prefetch);
        }
    }

    fn install(&mut self, block: u64, prefetched: bool) {
        self.clock += 1;
        let lru = self.clock;
        let ways = self.ways;
        let set_idx = self.set_of(block);
        let set = &mut self.sets[set_idx];
        debug_assert!(!set.iter().any(|l| l.block == block));
        let line = Line { block, lru, prefetched };
        if set.len() < ways {
            set.push(line);
        } else {
            let victim = set.iter_mut().min_by_key(|l| l.lru).unwrap();
            *victim = line;
        }
    }

    /// Starts a fill for `block`; it must be neither resident nor in flight.
    pub fn start_fill(&mut self, block: u64, ready: u64, prefetch: bool) {
        debug_assert!(!self.is_resident(block) && !self.is_in_flight(block));
        self.seq += 1;
        self.in_flight.insert(
            block,
            Fill {
                ready,
                prefetch,
                seq: self.seq,
            },
        );
    }

    /// A demand access from fetch.
    pub fn demand(&mut self, block: u64, now: u64, miss_latency: u64) -> DemandOutcome {
        self.clock += 1;
        let clock = self.clock;
        let set_idx = self.set_of(block);
        if let Some(line) = self.sets[set_idx].iter_mut().find(|l| l.block == block) {
            line.lru = clock;
            let first = std::mem::take(&mut line.prefetched);
            return DemandOutcome::Hit {
                first_use_of_prefetch: first,
            };
        }
        if let Some(fill) = self.in_flight.get_mut(&block) {
            let prefetch = fill.prefetch;
            // the line arrives already demanded
            fill.prefetch = false;
            return DemandOutcome::InFlight {
                ready: fill.ready,
                prefetch,
            };
        }
        let ready = now + miss_latency;
        self.start_fill(block, ready, false);
        DemandOutcome::Miss { ready }
    }
}

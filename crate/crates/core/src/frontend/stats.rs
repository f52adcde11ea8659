/// Counters of one front-end run. All of them only grow during a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SimStats {
    pub instructions: u64,
    pub cycles: u64,
    pub l1i_accesses: u64,
    pub l1i_misses: u64,
    pub l1i_prefetch_hits: u64,
    pub l1i_late_prefetch_hits: u64,
    pub prefetches_issued: u64,
    pub prefetches_filtered: u64,
    pub prefetches_useful: u64,
    pub btb_lookups: u64,
    /// Hits per ensemble partition; monolithic and block BTBs use slot 0.
    pub btb_hits: [u64; 4],
    pub btb_misses: u64,
    pub resteers: u64,
    pub multi_hits: u64,
    /// Cycles fetch waited on a demand miss or a late prefetch.
    pub miss_stall_cycles: u64,
    /// Cycles fetch was held after resteers.
    pub resteer_stall_cycles: u64,
    /// Cycles in which fetch delivered no instruction, whatever the reason.
    pub fetch_idle_cycles: u64,
}

pub const CSV_COLUMNS: [&str; 20] = [
    "instructions",
    "cycles",
    "l1i_accesses",
    "l1i_misses",
    "l1i_prefetch_hits",
    "l1i_late_prefetch_hits",
    "prefetches_issued",
    "prefetches_filtered",
    "prefetches_useful",
    "btb_lookups",
    "btb_hits_0",
    "btb_hits_1",
    "btb_hits_2",
    "btb_hits_3",
    "btb_misses",
    "resteers",
    "multi_hits",
    "miss_stall_cycles",
    "resteer_stall_cycles",
    "fetch_idle_cycles",
];

impl SimStats {
    fn values(&self) -> [u64; 20] {
        [
            self.instructions,
            self.cycles,
            self.l1i_accesses,
            self.l1i_misses,
            self.l1i_prefetch_hits,
            self.l1i_late_prefetch_hits,
            self.prefetches_issued,
            self.prefetches_filtered,
            self.prefetches_useful,
            self.btb_lookups,
            self.btb_hits[0],
            self.btb_hits[1],
            self.btb_hits[2],
            self.btb_hits[3],
            self.btb_misses,
            self.resteers,
            self.multi_hits,
            self.miss_stall_cycles,
            self.resteer_stall_cycles,
            self.fetch_idle_cycles,
        ]
    }

    pub fn csv_header() -> String {
        CSV_COLUMNS.join(",")
    }

    pub fn csv_row(&self) -> String {
        self.values().iter().map(u64::to_string).collect::<Vec<_>>().join(",")
    }

    /// Counter-wise difference, for discarding a warm-up phase.
    pub fn since(&self, earlier: &SimStats) -> SimStats {
        let d = |a: u64, b: u64| a - b;
        SimStats {
            instructions: d(self.instructions, earlier.instructions),
            cycles: d(self.cycles, earlier.cycles),
            l1i_accesses: d(self.l1i_accesses, earlier.l1i_accesses),
            l1i_misses: d(self.l1i_misses, earlier.l1i_misses),
            l1i_prefetch_hits: d(self.l1i_prefetch_hits, earlier.l1i_prefetch_hits),
            l1i_late_prefetch_hits: d(self.l1i_late_prefetch_hits, earlier.l1i_late_prefetch_hits),
            prefetches_issued: d(self.prefetches_issued, earlier.prefetches_issued),
            prefetches_filtered: d(self.prefetches_filtered, earlier.prefetches_filtered),
            prefetches_useful: d(self.prefetches_useful, earlier.prefetches_useful),
            btb_lookups: d(self.btb_lookups, earlier.btb_lookups),
            btb_hits: std::array::from_fn(|i| d(self.btb_hits[i], earlier.btb_hits[i])),
            btb_misses: d(self.btb_misses, earlier.btb_misses),
            resteers: d(self.resteers, earlier.resteers),
            multi_hits: d(self.multi_hits, earlier.multi_hits),
            miss_stall_cycles: d(self.miss_stall_cycles, earlier.miss_stall_cycles),
            resteer_stall_cycles: d(self.resteer_stall_cycles, earlier.resteer_stall_cycles),
            fetch_idle_cycles: d(self.fetch_idle_cycles, earlier.fetch_idle_cycles),
        }
    }

    /// L1-I misses per thousand instructions.
    pub fn l1i_mpki(&self) -> f64 {
        per_kilo(self.l1i_misses, self.instructions)
    }

    pub fn resteer_pki(&self) -> f64 {
        per_kilo(self.resteers, self.instructions)
    }
}

fn per_kilo(n: u64, instructions: u64) -> f64 {
    if instructions == 0 {
        0.0
    } else {
        n as f64 * 1000.0 / instructions as f64
    }
}

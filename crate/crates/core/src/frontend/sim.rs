//! The cycle loop tying the BPU, FTQ, fetch engine and prefetcher together.

use std::collections::VecDeque;

use thiserror::Error;

use super::cache::{DemandOutcome, L1ICache, BLOCK_BYTES};
use super::config::{BtbUnit, DirectionPolicy, FrontendConfig};
use super::direction::Bimodal;
use super::ftq::{Ftq, FtqEntry, PredictedBranch};
use super::prefetch::PrefetchEngine;
use super::ras::ReturnAddressStack;
use super::stats::SimStats;
use crate::addr::{BranchKind, InstrAddress};
use crate::btb::{ConfigError, MAX_BLOCK_INSTRUCTIONS};
use crate::trace::{TraceError, TraceRecord};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("record {ordinal}: {source}")]
    Trace {
        ordinal: u64,
        #[source]
        source: TraceError,
    },
    #[error("record {ordinal}: {reason}")]
    Malformed { ordinal: u64, reason: String },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("invalid parameter: {0}")]
    Parameter(String),
}

/// Records between the retirement point and the generator's lookahead.
struct TraceWindow<I> {
    source: I,
    buf: VecDeque<TraceRecord>,
    base: u64,
    pulled: u64,
    expected_pc: Option<InstrAddress>,
    done: bool,
}

impl<I> TraceWindow<I>
where
    I: Iterator<Item = Result<TraceRecord, TraceError>>,
{
    fn new(source: I) -> Self {
        TraceWindow {
            source,
            buf: VecDeque::new(),
            base: 0,
            pulled: 0,
            expected_pc: None,
            done: false,
        }
    }

    fn pull(&mut self) -> Result<bool, SimError> {
        if self.done {
            return Ok(false);
        }
        let ordinal = self.pulled;
        let r = match self.source.next() {
            None => {
                self.done = true;
                return Ok(false);
            }
            Some(Err(source)) => return Err(SimError::Trace { ordinal, source }),
            Some(Ok(r)) => r,
        };
        r.validate().map_err(|e| SimError::Malformed {
            ordinal,
            reason: e.to_string(),
        })?;
        if let Some(pc) = self.expected_pc {
            if r.pc != pc {
                return Err(SimError::Malformed {
                    ordinal,
                    reason: format!("pc {} does not follow the previous record (expected {pc})", r.pc),
                });
            }
        }
        self.expected_pc = Some(r.next_pc());
        self.buf.push_back(r);
        self.pulled += 1;
        Ok(true)
    }

    fn get(&mut self, ordinal: u64) -> Result<Option<TraceRecord>, SimError> {
        debug_assert!(ordinal >= self.base);
        let i = (ordinal - self.base) as usize;
        while i >= self.buf.len() {
            if !self.pull()? {
                return Ok(None);
            }
        }
        Ok(Some(self.buf[i]))
    }

    fn retire_front(&mut self) {
        self.buf.pop_front();
        self.base += 1;
    }
}

fn check(cfg: &FrontendConfig) -> Result<(), SimError> {
    let bad = |m: &str| Err(SimError::Parameter(m.to_string()));
    if cfg.ftq_capacity == 0 {
        return bad("ftq_capacity must be at least 1");
    }
    if cfg.fetch_width == 0 {
        return bad("fetch_width must be at least 1");
    }
    if cfg.lookup_bandwidth == 0 {
        return bad("lookup_bandwidth must be at least 1");
    }
    let blocks = cfg.l1i_bytes / BLOCK_BYTES;
    let ways = cfg.l1i_ways as u64;
    if ways == 0 || blocks < ways || !blocks.is_multiple_of(ways) || !(blocks / ways).is_power_of_two() {
        return bad("L1-I size / ways must give a power-of-two number of 64-byte sets");
    }
    if let DirectionPolicy::Bimodal { entries } = cfg.direction {
        if !entries.is_power_of_two() {
            return bad("bimodal entries must be a power of two");
        }
    }
    Ok(())
}

/// A decoupled front end driven by one trace.
pub struct Frontend<I> {
    cfg: FrontendConfig,
    btb: BtbUnit,
    ftq: Ftq,
    cache: L1ICache,
    prefetcher: PrefetchEngine,
    bimodal: Option<Bimodal>,
    window: TraceWindow<I>,
    gen_pc: InstrAddress,
    /// Ordinal of the trace record the generator is at, while it is on path.
    gen_pos: Option<u64>,
    spec_ras: ReturnAddressStack,
    retire_ras: ReturnAddressStack,
    blocked_until: u64,
    last_block: Option<u64>,
    now: u64,
    stats: SimStats,
    warm: Option<SimStats>,
    issued: Vec<u64>,
    prefetch_log: Option<Vec<u64>>,
}

impl<I> Frontend<I>
where
    I: Iterator<Item = Result<TraceRecord, TraceError>>,
{
    pub fn new(source: I, cfg: &FrontendConfig) -> Result<Self, SimError> {
        check(cfg)?;
        let btb = cfg.btb.build()?;
        let bimodal = match cfg.direction {
            DirectionPolicy::Oracle => None,
            DirectionPolicy::Bimodal { entries } => Some(Bimodal::new(entries)),
        };
        let mut window = TraceWindow::new(source);
        let first = window.get(0)?;
        Ok(Frontend {
            cfg: cfg.clone(),
            btb,
            ftq: Ftq::new(cfg.ftq_capacity),
            cache: L1ICache::new(cfg.l1i_bytes, cfg.l1i_ways),
            prefetcher: PrefetchEngine::new(cfg.filter_entries, cfg.prefetch_scan_rate, cfg.miss_latency),
            bimodal,
            window,
            gen_pc: first.map_or(InstrAddress::ZERO, |r| r.pc),
            gen_pos: first.map(|_| 0),
            spec_ras: ReturnAddressStack::new(cfg.ras_entries),
            retire_ras: ReturnAddressStack::new(cfg.ras_entries),
            blocked_until: 0,
            last_block: None,
            now: 0,
            stats: SimStats::default(),
            warm: (cfg.warmup_instructions == 0).then(SimStats::default),
            issued: Vec::new(),
            prefetch_log: None,
        })
    }

    /// Inserts every taken branch of `records` into an instruction-indexed
    /// BTB. Block-based BTBs are keyed by fetch-region starts that only a run
    /// discovers, so they are left untouched.
    pub fn prewarm<'a>(&mut self, records: impl IntoIterator<Item = &'a TraceRecord>) {
        if let BtbUnit::Instruction(btb) = &mut self.btb {
            for r in records {
                if let (Some(kind), true) = (r.kind, r.taken) {
                    btb.insert(r.pc, kind, r.target);
                }
            }
        }
    }

    /// Keeps every issued prefetch block, in issue order.
    pub fn enable_prefetch_log(&mut self) {
        self.prefetch_log = Some(Vec::new());
    }

    pub fn prefetch_log(&self) -> &[u64] {
        self.prefetch_log.as_deref().unwrap_or(&[])
    }

    pub fn btb(&self) -> &BtbUnit {
        &self.btb
    }

    pub fn run(&mut self) -> Result<SimStats, SimError> {
        self.run_with(|_| {})
    }

    /// Runs to the end of the trace, handing each retired record to `on_retire`.
    pub fn run_with<F: FnMut(&TraceRecord)>(&mut self, mut on_retire: F) -> Result<SimStats, SimError> {
        while self.step(&mut on_retire)? {}
        let total = self.snapshot();
        Ok(total.since(&self.warm.unwrap_or(total)))
    }

    /// Simulates one cycle. Returns `false` once the whole trace has retired.
    pub fn step<F: FnMut(&TraceRecord)>(&mut self, on_retire: &mut F) -> Result<bool, SimError> {
        if self.window.get(self.window.base)?.is_none() {
            return Ok(false);
        }
        self.cache.complete_fills(self.now);
        self.generate_cycle()?;
        self.fetch_cycle(on_retire)?;
        if self.cfg.prefetch {
            self.prefetch_cycle();
        }
        self.now += 1;
        Ok(true)
    }

    pub fn ftq(&self) -> &Ftq {
        &self.ftq
    }

    pub fn cache(&self) -> &L1ICache {
        &self.cache
    }

    /// Counters so far, warm-up included.
    pub fn snapshot(&self) -> SimStats {
        let mut s = self.stats;
        s.cycles = self.now;
        if let BtbUnit::Instruction(b) = &self.btb {
            s.multi_hits = b.multi_hits();
        }
        s
    }

    fn on_path(&mut self, pos: Option<u64>, pc: InstrAddress) -> Result<Option<TraceRecord>, SimError> {
        let Some(k) = pos else { return Ok(None) };
        Ok(self.window.get(k)?.filter(|r| r.pc == pc))
    }

    fn follow(pos: Option<u64>, rec: Option<TraceRecord>, predicted_next: InstrAddress) -> Option<u64> {
        match (pos, rec) {
            (Some(k), Some(r)) if r.next_pc() == predicted_next => Some(k + 1),
            _ => None,
        }
    }

    fn predict_conditional(&self, pc: InstrAddress, rec: Option<TraceRecord>) -> bool {
        match &self.bimodal {
            Some(b) => b.predict(pc),
            None => rec
                .filter(|r| r.kind == Some(BranchKind::ConditionalDirect))
                .is_none_or(|r| r.taken),
        }
    }

    /// Predicted target of a BTB-identified branch, or `None` for fall-through.
    fn resolve(
        &mut self,
        pc: InstrAddress,
        kind: BranchKind,
        target: Option<InstrAddress>,
        rec: Option<TraceRecord>,
    ) -> Option<InstrAddress> {
        match kind {
            BranchKind::Return => self.spec_ras.pop(),
            BranchKind::ConditionalDirect => {
                if self.predict_conditional(pc, rec) {
                    target
                } else {
                    None
                }
            }
            k => {
                if k.is_call() {
                    self.spec_ras.push(pc.next());
                }
                target
            }
        }
    }

    fn generate_cycle(&mut self) -> Result<(), SimError> {
        if self.ftq.is_full() {
            return Ok(());
        }
        let start = self.gen_pc;
        let mut pos = self.gen_pos;
        let bandwidth = self.cfg.lookup_bandwidth;
        let mut length = 0u32;
        let mut branch = None;
        match &self.btb {
            BtbUnit::Instruction(_) => {
                let mut pc = start;
                while (length as usize) < bandwidth {
                    let rec = self.on_path(pos, pc)?;
                    self.stats.btb_lookups += 1;
                    let BtbUnit::Instruction(btb) = &mut self.btb else {
                        unreachable!()
                    };
                    let mut next = pc.next();
                    match btb.lookup(pc) {
                        None => self.stats.btb_misses += 1,
                        Some(hit) => {
                            self.stats.btb_hits[hit.partition] += 1;
                            if let Some(t) = self.resolve(pc, hit.kind, hit.target, rec) {
                                next = t;
                                branch = Some(PredictedBranch {
                                    pc,
                                    kind: hit.kind,
                                    target: t,
                                });
                            }
                        }
                    }
                    length += 1;
                    pos = Self::follow(pos, rec, next);
                    if branch.is_some() {
                        break;
                    }
                    pc = pc.next();
                }
            }
            BtbUnit::Block(_) => {
                self.stats.btb_lookups += 1;
                let BtbUnit::Block(btb) = &mut self.btb else {
                    unreachable!()
                };
                let hit = btb.lookup(start);
                length = match hit {
                    Some(h) => h.size,
                    None => bandwidth.min(MAX_BLOCK_INSTRUCTIONS as usize) as u32,
                };
                let mut pc = start;
                for _ in 1..length {
                    let rec = self.on_path(pos, pc)?;
                    pos = Self::follow(pos, rec, pc.next());
                    pc = pc.next();
                }
                let rec = self.on_path(pos, pc)?;
                let mut next = pc.next();
                match hit {
                    None => self.stats.btb_misses += 1,
                    Some(h) => {
                        self.stats.btb_hits[0] += 1;
                        if let Some(t) = self.resolve(pc, h.kind, h.target, rec) {
                            next = t;
                            branch = Some(PredictedBranch {
                                pc,
                                kind: h.kind,
                                target: t,
                            });
                        }
                    }
                }
                pos = Self::follow(pos, rec, next);
            }
        }
        let predicted_next = branch.map_or(start.advance(length as u64), |b| b.target);
        self.ftq.push(FtqEntry {
            start,
            length,
            predicted_next,
            terminating_branch: branch,
        });
        self.gen_pc = predicted_next;
        self.gen_pos = pos;
        Ok(())
    }

    fn stall_until(&mut self, ready: u64) {
        self.blocked_until = ready;
        self.stats.miss_stall_cycles += ready - self.now;
    }

    fn fetch_cycle<F: FnMut(&TraceRecord)>(&mut self, on_retire: &mut F) -> Result<(), SimError> {
        if self.now < self.blocked_until {
            self.stats.fetch_idle_cycles += 1;
            return Ok(());
        }
        let mut delivered = 0;
        while delivered < self.cfg.fetch_width {
            let Some(pc) = self.ftq.fetch_pc() else { break };
            let block = pc.get() / BLOCK_BYTES;
            if self.last_block != Some(block) {
                self.last_block = Some(block);
                self.stats.l1i_accesses += 1;
                match self.cache.demand(block, self.now, self.cfg.miss_latency) {
                    DemandOutcome::Hit { first_use_of_prefetch } => {
                        if first_use_of_prefetch {
                            self.stats.l1i_prefetch_hits += 1;
                            self.stats.prefetches_useful += 1;
                        }
                    }
                    DemandOutcome::InFlight { ready, prefetch } => {
                        if prefetch {
                            self.stats.l1i_late_prefetch_hits += 1;
                            self.stats.prefetches_useful += 1;
                        }
                        self.stall_until(ready);
                        break;
                    }
                    DemandOutcome::Miss { ready } => {
                        self.stats.l1i_misses += 1;
                        self.stall_until(ready);
                        break;
                    }
                }
            }
            let Some(rec) = self.window.get(self.window.base)? else {
                break;
            };
            assert_eq!(rec.pc, pc, "fetch left the committed path");
            let entry = *self.ftq.head().expect("fetch pc implies a head");
            let is_last = self.ftq.head_consumed() + 1 == entry.length;
            let predicted = if is_last { entry.predicted_next } else { pc.next() };
            self.ftq.consume_one();
            self.retire(&rec, on_retire);
            delivered += 1;
            if predicted != rec.next_pc() {
                self.resteer(&rec, &entry, is_last);
                break;
            }
        }
        if delivered == 0 {
            self.stats.fetch_idle_cycles += 1;
        }
        Ok(())
    }

    fn retire<F: FnMut(&TraceRecord)>(&mut self, rec: &TraceRecord, on_retire: &mut F) {
        // taken before the retirement so that a resteer caused by the last
        // warm-up instruction is not counted
        if self.warm.is_none() && self.stats.instructions == self.cfg.warmup_instructions {
            self.warm = Some(self.snapshot());
        }
        self.window.retire_front();
        self.stats.instructions += 1;
        if let Some(kind) = rec.kind {
            if kind.is_call() {
                self.retire_ras.push(rec.pc.next());
            } else if kind == BranchKind::Return {
                self.retire_ras.pop();
            }
            if kind == BranchKind::ConditionalDirect {
                if let Some(b) = &mut self.bimodal {
                    b.update(rec.pc, rec.taken);
                }
            }
        }
        on_retire(rec);
    }

    fn resteer(&mut self, rec: &TraceRecord, entry: &FtqEntry, was_last: bool) {
        self.stats.resteers += 1;
        self.ftq.flush();
        match (rec.kind, rec.taken) {
            (Some(kind), true) => match &mut self.btb {
                BtbUnit::Instruction(b) => {
                    b.insert(rec.pc, kind, rec.target);
                }
                BtbUnit::Block(b) => {
                    let size = (rec.pc.word_index() - entry.start.word_index() + 1) as u32;
                    b.insert(entry.start, size, kind, rec.target);
                }
            },
            (None, _) if was_last && entry.terminating_branch.is_some() => match &mut self.btb {
                BtbUnit::Instruction(b) => {
                    b.invalidate(rec.pc);
                }
                BtbUnit::Block(b) => {
                    b.invalidate(entry.start);
                }
            },
            _ => {}
        }
        self.gen_pc = rec.next_pc();
        self.gen_pos = Some(self.window.base);
        self.spec_ras = self.retire_ras.clone();
        self.blocked_until = self.now + 1 + self.cfg.resteer_penalty;
        self.stats.resteer_stall_cycles += self.cfg.resteer_penalty;
    }

    fn prefetch_cycle(&mut self) {
        self.issued.clear();
        let c = self
            .prefetcher
            .scan(&mut self.ftq, &mut self.cache, self.now, &mut self.issued);
        self.stats.prefetches_issued += c.issued;
        self.stats.prefetches_filtered += c.filtered;
        if let Some(log) = &mut self.prefetch_log {
            log.extend_from_slice(&self.issued);
        }
    }
}

/// Runs one trace through a fresh front end.
pub fn simulate<I>(source: I, cfg: &FrontendConfig) -> Result<SimStats, SimError>
where
    I: IntoIterator<Item = Result<TraceRecord, TraceError>>,
{
    Frontend::new(source.into_iter(), cfg)?.run()
}

/// [`simulate`] over records already in memory.
pub fn simulate_records(records: &[TraceRecord], cfg: &FrontendConfig) -> Result<SimStats, SimError> {
    simulate(records.iter().copied().map(Ok), cfg)
}

use super::cache::{L1ICache, BLOCK_BYTES};
use super::filter::PrefetchFilter;
use super::ftq::Ftq;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ScanCounts {
    pub issued: u64,
    pub filtered: u64,
}

/// Walks FTQ entries behind the head and probes the L1-I for their blocks.
#[derive(Debug, Clone)]
pub struct PrefetchEngine {
    filter: PrefetchFilter,
    scan_rate: usize,
    latency: u64,
}

impl PrefetchEngine {
    pub fn new(filter_entries: usize, scan_rate: usize, latency: u64) -> Self {
        PrefetchEngine {
            filter: PrefetchFilter::new(filter_entries),
            scan_rate,
            latency,
        }
    }

    pub fn filter(&self) -> &PrefetchFilter {
        &self.filter
    }

    /// One cycle of scanning. Issued block numbers are appended to `issued`.
    pub fn scan(&mut self, ftq: &mut Ftq, cache: &mut L1ICache, now: u64, issued: &mut Vec<u64>) -> ScanCounts {
        let mut counts = ScanCounts::default();
        for _ in 0..self.scan_rate {
            let Some(entry) = ftq.next_unscanned() else { break };
            for block in entry.blocks(BLOCK_BYTES) {
                if self.filter.contains(block) {
                    counts.filtered += 1;
                } else if !cache.is_resident(block) && !cache.is_in_flight(block) {
                    cache.start_fill(block, now + self.latency, true);
                    self.filter.insert(block);
                    counts.issued += 1;
                    issued.push(block);
                }
            }
        }
        counts
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::addr::InstrAddress;
    use crate::frontend::ftq::FtqEntry;

    fn entry(start: u64, length: u32) -> FtqEntry {
        let start = InstrAddress::new(start).unwrap();
        FtqEntry {
            start,
            length,
            predicted_next: start.advance(length as u64),
            terminating_branch: None,
        }
    }

    fn queue(entries: &[FtqEntry]) -> Ftq {
        let mut q = Ftq::new(16);
        // the head is never scanned
        q.push(entry(0x10_0000, 1));
        for e in entries {
            q.push(*e);
        }
        q
    }

    #[test]
    fn issues_absent_blocks_then_filters_them() {
        let mut cache = L1ICache::new(32 * 1024, 8);
        let mut pf = PrefetchEngine::new(10, 2, 30);
        let region = entry(0x1038, 4);
        let mut out = Vec::new();
        let c = pf.scan(&mut queue(&[region]), &mut cache, 0, &mut out);
        assert_eq!(c, ScanCounts { issued: 2, filtered: 0 });
        assert_eq!(out, vec![0x40, 0x41]);
        let c = pf.scan(&mut queue(&[region]), &mut cache, 1, &mut out);
        assert_eq!(c, ScanCounts { issued: 0, filtered: 2 });
    }

    #[test]
    fn scan_rate_limits_entries() {
        let mut cache = L1ICache::new(32 * 1024, 8);
        let mut pf = PrefetchEngine::new(10, 2, 30);
        let mut q = queue(&[entry(0x0, 1), entry(0x40, 1), entry(0x80, 1)]);
        let mut out = Vec::new();
        assert_eq!(pf.scan(&mut q, &mut cache, 0, &mut out).issued, 2);
        assert_eq!(pf.scan(&mut q, &mut cache, 1, &mut out).issued, 1);
    }

    #[test]
    fn eleventh_block_evicts_the_first_from_the_filter() {
        let mut cache = L1ICache::new(32 * 1024, 8);
        let mut pf = PrefetchEngine::new(10, 16, 30);
        let regions: Vec<FtqEntry> = (0..11).map(|i| entry(i * 64, 1)).collect();
        let mut out = Vec::new();
        pf.scan(&mut queue(&regions), &mut cache, 0, &mut out);
        assert_eq!(out.len(), 11);
        assert!(!pf.filter().contains(0));
        assert!((1..11).all(|b| pf.filter().contains(b)));
    }
}

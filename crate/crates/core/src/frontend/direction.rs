use crate::addr::InstrAddress;

/// Table of two-bit saturating counters indexed by word address.
#[derive(Debug, Clone)]
pub struct Bimodal {
    counters: Vec<u8>,
}

impl Bimodal {
    pub fn new(entries: usize) -> Self {
        assert!(entries.is_power_of_two(), "bimodal size must be a power of two");
        // weakly taken
        Bimodal {
            counters: vec![2; entries],
        }
    }

    fn slot(&self, pc: InstrAddress) -> usize {
        (pc.word_index() as usize) & (self.counters.len() - 1)
    }

    pub fn predict(&self, pc: InstrAddress) -> bool {
        self.counters[self.slot(pc)] >= 2
    }

    pub fn update(&mut self, pc: InstrAddress, taken: bool) {
        let i = self.slot(pc);
        let c = &mut self.counters[i];
        *c = if taken { (*c + 1).min(3) } else { c.saturating_sub(1) };
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn saturates_both_ways() {
        let pc = InstrAddress::new(0x40).unwrap();
        let mut b = Bimodal::new(16);
        assert!(b.predict(pc));
        b.update(pc, false);
        assert!(!b.predict(pc));
        for _ in 0..5 {
            b.update(pc, true);
        }
        b.update(pc, false);
        assert!(b.predict(pc));
    }
}

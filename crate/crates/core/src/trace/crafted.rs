//! Hand-shaped traces with known working sets, used for directional
//! experiments on BTB reach and prefetch coverage.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::record::TraceRecord;
use crate::addr::{BranchKind, InstrAddress};

/// Instructions per block in `working_set_loop`.
pub const LOOP_BLOCK_LEN: u64 = 4;

/// Branch word indices of `working_set_loop` advance by one modulo this, so
/// they spread evenly over up to this many sets.
pub const LOOP_SET_SPREAD: u64 = 128;

const LOOP_BASE_WORD: u64 = 1 << 30;

fn addr(word: u64) -> InstrAddress {
    InstrAddress::from_word_index(word).expect("crafted layout fits the address space")
}

/// A loop over `branches` blocks of four instructions, each ending in a taken
/// unconditional jump to the next block; the last jumps back to the first.
///
/// Branch `i` has an offset of at most 8 bits when `i % 3 == 0`, 9..=13 bits
/// when `i % 3 == 1` and 14..=23 bits when `i % 3 == 2`. Branch (and block
/// start) word indices are consecutive modulo `LOOP_SET_SPREAD`, so any BTB
/// with at most that many sets sees an even spread.
pub fn working_set_loop(branches: usize, passes: usize, seed: u64) -> Vec<TraceRecord> {
    assert!(branches >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = LOOP_SET_SPREAD;
    // next branch word - this branch word must be 1 mod m
    let base_gap = (m + 2 - LOOP_BLOCK_LEN % m) % m;
    let mut starts = Vec::with_capacity(branches);
    let mut s = LOOP_BASE_WORD;
    for i in 0..branches {
        starts.push(s);
        let branch = s + LOOP_BLOCK_LEN - 1;
        let hops = match i % 3 {
            0 => 0,
            1 => rng.gen_range(2..=63),
            _ => rng.gen_range(64..=65535),
        };
        s = branch + base_gap + hops * m;
    }
    let mut out = Vec::with_capacity(branches * LOOP_BLOCK_LEN as usize * passes);
    for _ in 0..passes {
        for (i, &start) in starts.iter().enumerate() {
            for k in 0..LOOP_BLOCK_LEN - 1 {
                out.push(TraceRecord::instruction(addr(start + k)));
            }
            let next = starts[(i + 1) % branches];
            out.push(TraceRecord::taken(
                addr(start + LOOP_BLOCK_LEN - 1),
                BranchKind::UnconditionalDirect,
                addr(next),
            ));
        }
    }
    out
}

/// A loop touching `cache_blocks` distinct cache blocks of `block_bytes`
/// bytes each. Every block is entered and left (by a jump) at pseudo-random
/// positions inside it; the jump targets a
/// pseudo-randomly chosen block, so the walk is not sequential in memory and
/// the jumps spread over BTB sets.
pub fn footprint_loop(cache_blocks: usize, block_bytes: u64, passes: usize, seed: u64) -> Vec<TraceRecord> {
    assert!(cache_blocks >= 1 && block_bytes >= 8 && block_bytes.is_multiple_of(4));
    let words = block_bytes / 4;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<u64> = (0..cache_blocks as u64).collect();
    order.shuffle(&mut rng);
    let spans: Vec<(u64, u64)> = (0..cache_blocks)
        .map(|_| {
            let entry = rng.gen_range(0..words);
            (entry, rng.gen_range(entry..words))
        })
        .collect();
    let base = (1u64 << 28) / 4;
    let entry = |i: usize| base + order[i] * words + spans[i].0;
    let mut out = Vec::with_capacity(cache_blocks * words as usize * passes);
    for _ in 0..passes {
        for (i, &(first, exit)) in spans.iter().enumerate() {
            let s = base + order[i] * words;
            for k in first..exit {
                out.push(TraceRecord::instruction(addr(s + k)));
            }
            out.push(TraceRecord::taken(
                addr(s + exit),
                BranchKind::UnconditionalDirect,
                addr(entry((i + 1) % cache_blocks)),
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::btb::offset::{compute_offset, min_offset_bits};

    #[test]
    fn working_set_loop_shape() {
        let t = working_set_loop(30, 2, 1);
        assert_eq!(t.len(), 30 * 4 * 2);
        for w in t.windows(2) {
            assert_eq!(w[0].next_pc(), w[1].pc);
        }
        let branches: Vec<_> = t.iter().filter(|r| r.is_taken_branch()).take(30).collect();
        for (i, b) in branches.iter().enumerate().take(29) {
            let bits = min_offset_bits(compute_offset(b.pc, b.target));
            let ok = match i % 3 {
                0 => bits <= 8,
                1 => (9..=13).contains(&bits),
                _ => (14..=23).contains(&bits),
            };
            assert!(ok, "branch {i} has {bits} bits");
            assert_eq!(
                (branches[i + 1].pc.word_index() - b.pc.word_index()) % LOOP_SET_SPREAD,
                1
            );
        }
    }

    #[test]
    fn footprint_loop_touches_every_block_once_per_pass() {
        let t = footprint_loop(64, 64, 1, 2);
        let mut blocks: Vec<u64> = t.iter().map(|r| r.pc.get() / 64).collect();
        blocks.dedup();
        assert_eq!(blocks.len(), 64);
        blocks.sort();
        blocks.dedup();
        assert_eq!(blocks.len(), 64);
        for w in t.windows(2) {
            assert_eq!(w[0].next_pc(), w[1].pc);
        }
    }
}

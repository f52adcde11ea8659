//! Seeded synthetic trace generator.
//!
//! The generator lays out a static program of `static_branch_count` blocks,
//! each ending in a taken branch, and executes them as one cyclic tour. Every
//! static branch therefore runs equally often, so the dynamic offset mix
//! equals the static one. Call/return pairs are nested up to
//! `max_call_depth`; a return lands right after its call.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::analyze::OffsetClass;
use super::record::TraceRecord;
use crate::addr::{BranchKind, InstrAddress, INSTR_BYTES, WORD_INDEX_BITS};

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub seed: u64,
    pub instruction_count: u64,
    /// Distinct taken branches, one per block.
    pub static_branch_count: usize,
    /// Weights over `OffsetClass::ALL`: <=8, 9-13, 14-23, 24-46 bit offsets
    /// and indirect branches.
    pub offset_mix: [f64; 5],
    /// Bytes of executed code (sum of all block sizes).
    pub code_footprint_bytes: u64,
    /// Deepest call nesting; 0 disables calls and returns.
    pub max_call_depth: u32,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        GeneratorSpec {
            seed: 1,
            instruction_count: 1_000_000,
            static_branch_count: 4096,
            offset_mix: [0.4, 0.3, 0.25, 0.04, 0.01],
            code_footprint_bytes: 256 * 1024,
            max_call_depth: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenError {
    #[error("offset mix weights must be nonnegative and sum to 1 (got {0:?})")]
    BadWeights([f64; 5]),
    #[error("infeasible spec: {0}")]
    Infeasible(String),
}

#[derive(Debug, Clone, Copy)]
struct Block {
    start: u64,
    len: u64,
    kind: BranchKind,
    next: usize,
}

/// A laid-out program that replays as a trace.
#[derive(Debug, Clone)]
pub struct GeneratedProgram {
    blocks: Vec<Block>,
    instruction_count: u64,
}

const SPACE_WORDS: u64 = 1 << WORD_INDEX_BITS;
const LOW_WORDS: u64 = 1 << 40;
const HIGH_WORDS: u64 = SPACE_WORDS - (1 << 40);
const PLACEMENT_TRIES: usize = 512;
const INDIRECT_REACH_BITS: u32 = 23;

impl GeneratedProgram {
    pub fn static_branches(&self) -> usize {
        self.blocks.len()
    }

    pub fn footprint_bytes(&self) -> u64 {
        self.blocks.iter().map(|b| b.len).sum::<u64>() * INSTR_BYTES
    }

    pub fn records(&self) -> GeneratedTrace<'_> {
        GeneratedTrace {
            program: self,
            block: 0,
            pos: 0,
            emitted: 0,
        }
    }
}

pub struct GeneratedTrace<'a> {
    program: &'a GeneratedProgram,
    block: usize,
    pos: u64,
    emitted: u64,
}

impl Iterator for GeneratedTrace<'_> {
    type Item = TraceRecord;

    fn next(&mut self) -> Option<TraceRecord> {
        if self.emitted >= self.program.instruction_count || self.program.blocks.is_empty() {
            return None;
        }
        let b = self.program.blocks[self.block];
        let pc = word_addr(b.start + self.pos);
        let rec = if self.pos + 1 < b.len {
            self.pos += 1;
            TraceRecord::instruction(pc)
        } else {
            let target = word_addr(self.program.blocks[b.next].start);
            self.block = b.next;
            self.pos = 0;
            TraceRecord::taken(pc, b.kind, target)
        };
        self.emitted += 1;
        Some(rec)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.program.instruction_count - self.emitted) as usize;
        if self.program.blocks.is_empty() {
            (0, Some(0))
        } else {
            (left, Some(left))
        }
    }
}

fn word_addr(word: u64) -> InstrAddress {
    InstrAddress::from_word_index(word).expect("generator stays inside the address space")
}

/// Largest-remainder apportionment of `n` items over `weights`.
fn apportion(weights: &[f64; 5], n: usize) -> [usize; 5] {
    let mut counts = [0usize; 5];
    let mut rema: Vec<(f64, usize)> = Vec::with_capacity(5);
    for (i, w) in weights.iter().enumerate() {
        let exact = w * n as f64;
        counts[i] = exact.floor() as usize;
        rema.push((exact - exact.floor(), i));
    }
    let assigned: usize = counts.iter().sum();
    rema.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, i) in rema.iter().take(n.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

struct Layout {
    occupied: BTreeMap<u64, u64>,
}

impl Layout {
    fn is_free(&self, start: u64, len: u64) -> bool {
        if start < LOW_WORDS || start.saturating_add(len) > HIGH_WORDS {
            return false;
        }
        if let Some((_, &end)) = self.occupied.range(..=start).next_back() {
            if end > start {
                return false;
            }
        }
        if let Some((&s, _)) = self.occupied.range(start..).next() {
            if s < start + len {
                return false;
            }
        }
        true
    }

    fn reserve(&mut self, start: u64, len: u64) {
        self.occupied.insert(start, start + len);
    }
}

/// Builds the program described by `spec`.
pub fn generate_program(spec: &GeneratorSpec) -> Result<GeneratedProgram, GenError> {
    let w = spec.offset_mix;
    if w.iter().any(|x| !x.is_finite() || *x < 0.0) || (w.iter().sum::<f64>() - 1.0).abs() > 1e-6 {
        return Err(GenError::BadWeights(w));
    }
    let n = spec.static_branch_count;
    let words = spec.code_footprint_bytes / INSTR_BYTES;
    if n == 0 {
        if spec.instruction_count > 0 {
            return Err(GenError::Infeasible(
                "a nonempty trace needs at least one branch".into(),
            ));
        }
        return Ok(GeneratedProgram {
            blocks: Vec::new(),
            instruction_count: 0,
        });
    }
    if words < n as u64 {
        return Err(GenError::Infeasible(format!(
            "{} bytes of code cannot hold {n} branches",
            spec.code_footprint_bytes
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let counts = apportion(&w, n);
    let mut classes: Vec<OffsetClass> = OffsetClass::ALL
        .iter()
        .zip(counts)
        .flat_map(|(&c, k)| std::iter::repeat_n(c, k))
        .collect();
    classes.shuffle(&mut rng);

    // Kinds and call/return pairing. `cont[i]` is the block a return to
    // block i's call lands in.
    let indirect = counts[4];
    let p_call = (0.5 * indirect as f64 / (n - indirect).max(1) as f64).min(0.5);
    let mut kinds = Vec::with_capacity(n);
    let mut cont: Vec<Option<usize>> = vec![None; n];
    let mut stack: Vec<usize> = Vec::new();
    let depth_ok = |d: usize| spec.max_call_depth > 0 && d < spec.max_call_depth as usize;
    for (i, &class) in classes.iter().enumerate() {
        let last = i + 1 == n;
        let kind = if class == OffsetClass::Indirect {
            if !last && !stack.is_empty() && rng.gen_bool(0.5) {
                let call = stack.pop().unwrap();
                cont[call] = Some(i + 1);
                BranchKind::Return
            } else if !last && depth_ok(stack.len()) && rng.gen_bool(0.3) {
                stack.push(i);
                BranchKind::IndirectCall
            } else {
                BranchKind::IndirectJump
            }
        } else if !last && depth_ok(stack.len()) && rng.gen_bool(p_call) {
            stack.push(i);
            BranchKind::CallDirect
        } else if rng.gen_bool(0.5) {
            BranchKind::ConditionalDirect
        } else {
            BranchKind::UnconditionalDirect
        };
        kinds.push(kind);
    }

    let lens = block_lengths(&mut rng, n, words);

    let mut layout = Layout {
        occupied: BTreeMap::new(),
    };
    let mut starts: Vec<Option<u64>> = vec![None; n];
    // Block `x` plus the chain of continuation blocks that must follow it.
    let chain = |x: usize| {
        let mut v = vec![x];
        let mut cur = x;
        while let Some(k) = cont[cur] {
            v.push(k);
            cur = k;
        }
        v
    };
    let place = |layout: &mut Layout, starts: &mut Vec<Option<u64>>, x: usize, at: u64| -> bool {
        let blocks = chain(x);
        let total: u64 = blocks.iter().map(|&b| lens[b]).sum();
        if !layout.is_free(at, total) {
            return false;
        }
        layout.reserve(at, total);
        let mut s = at;
        for b in blocks {
            starts[b] = Some(s);
            s += lens[b];
        }
        true
    };

    let base = 1u64 << (WORD_INDEX_BITS - 2);
    assert!(place(&mut layout, &mut starts, 0, base));
    for i in 0..n - 1 {
        let next = i + 1;
        if starts[next].is_some() {
            continue;
        }
        let branch = starts[i].unwrap() + lens[i] - 1;
        let mut placed = false;
        for _ in 0..PLACEMENT_TRIES {
            // indirect targets stay within the same module
            let (lo, hi) = classes[i].bit_range().unwrap_or((1, INDIRECT_REACH_BITS));
            let bits = rng.gen_range(lo.max(1)..=hi.min(42));
            let mag = rng.gen_range(1u64 << (bits - 1)..1u64 << bits);
            // forward-biased so short-offset neighborhoods do not fill up
            let at = if rng.gen_bool(0.75) {
                branch.checked_add(mag)
            } else {
                branch.checked_sub(mag)
            };
            if let Some(at) = at {
                if place(&mut layout, &mut starts, next, at) {
                    placed = true;
                    break;
                }
            }
        }
        if !placed {
            return Err(GenError::Infeasible(format!("could not place block {next}")));
        }
    }

    // The branch closing the tour was never placed by its class; if its
    // offset misses the class it becomes an indirect jump.
    let last = n - 1;
    if let Some((lo, hi)) = classes[last].bit_range() {
        let from = starts[last].unwrap() + lens[last] - 1;
        let bits = 64 - from.abs_diff(starts[0].unwrap()).leading_zeros();
        if bits < lo || bits > hi {
            kinds[last] = BranchKind::IndirectJump;
        }
    }

    let blocks = (0..n)
        .map(|i| Block {
            start: starts[i].unwrap(),
            len: lens[i],
            kind: kinds[i],
            next: (i + 1) % n,
        })
        .collect();
    Ok(GeneratedProgram {
        blocks,
        instruction_count: spec.instruction_count,
    })
}

/// Splits `words` instructions into `n` blocks of at least one instruction
/// with exponentially distributed extra length.
fn block_lengths(rng: &mut ChaCha8Rng, n: usize, words: u64) -> Vec<u64> {
    let spare = words - n as u64;
    let weights: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let sum: f64 = weights.iter().sum();
    let mut lens: Vec<u64> = weights
        .iter()
        .map(|w| 1 + (spare as f64 * w / sum).floor() as u64)
        .collect();
    let mut left = words - lens.iter().sum::<u64>();
    while left > 0 {
        lens[rng.gen_range(0..n)] += 1;
        left -= 1;
    }
    lens
}

/// Generates the full trace of `spec` in memory.
pub fn generate_trace(spec: &GeneratorSpec) -> Result<Vec<TraceRecord>, GenError> {
    Ok(generate_program(spec)?.records().collect())
}

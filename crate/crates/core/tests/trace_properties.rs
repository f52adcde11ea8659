use std::collections::hash_map::DefaultHasher;
use std::collections::{HashMap, HashSet};
use std::hash::{Hash, Hasher};
use std::io::Cursor;

use fdipx_core::btb::{compute_offset, min_offset_bits};
use fdipx_core::trace::*;
use fdipx_core::{BranchKind, InstrAddress};
use proptest::prelude::*;

fn addr(word: u64) -> InstrAddress {
    InstrAddress::from_word_index(word).unwrap()
}

fn kind() -> impl Strategy<Value = BranchKind> {
    prop_oneof![
        Just(BranchKind::ConditionalDirect),
        Just(BranchKind::UnconditionalDirect),
        Just(BranchKind::CallDirect),
        Just(BranchKind::Return),
        Just(BranchKind::IndirectJump),
        Just(BranchKind::IndirectCall),
    ]
}

fn record() -> impl Strategy<Value = TraceRecord> {
    let w = 0u64..(1 << 46);
    prop_oneof![
        w.clone().prop_map(|p| TraceRecord::instruction(addr(p))),
        (w.clone(), kind(), any::<bool>(), w).prop_map(|(p, k, t, tg)| {
            let taken = t || k.is_unconditional();
            TraceRecord::branch(addr(p), k, taken, addr(tg))
        }),
    ]
}

type Bins = HashMap<(BranchKind, u32), u64>;

/// Straightforward two-map histogram used as the analyzer's reference.
fn naive(records: &[TraceRecord]) -> (Bins, Bins) {
    let mut dynamic = HashMap::new();
    let mut statics = HashMap::new();
    let mut seen = HashSet::new();
    for r in records {
        let Some(k) = r.kind else { continue };
        if !r.taken {
            continue;
        }
        let bits = if k.is_direct() {
            min_offset_bits(compute_offset(r.pc, r.target))
        } else {
            u32::MAX
        };
        *dynamic.entry((k, bits)).or_insert(0) += 1;
        if seen.insert(r.pc) {
            *statics.entry((k, bits)).or_insert(0) += 1;
        }
    }
    (dynamic, statics)
}

fn flatten(h: &OffsetHistogram) -> Bins {
    let mut m = HashMap::new();
    for k in [
        BranchKind::ConditionalDirect,
        BranchKind::UnconditionalDirect,
        BranchKind::CallDirect,
    ] {
        for bits in 0..=46 {
            let c = h.count(k, bits);
            if c > 0 {
                m.insert((k, bits), c);
            }
        }
    }
    for k in [BranchKind::Return, BranchKind::IndirectJump, BranchKind::IndirectCall] {
        let c = h.indirect_count(k);
        if c > 0 {
            m.insert((k, u32::MAX), c);
        }
    }
    m
}

proptest! {
    #[test]
    fn binary_round_trip(records in prop::collection::vec(record(), 0..200)) {
        let bytes = write_trace(&records, Vec::new()).unwrap();
        prop_assert_eq!(bytes.len() as u64, 8 + 18 * records.len() as u64);
        prop_assert_eq!(read_all(Cursor::new(bytes)).unwrap(), records);
    }

    #[test]
    fn text_round_trip(records in prop::collection::vec(record(), 0..100)) {
        let text = write_text_trace(&records, Vec::new()).unwrap();
        let back: Result<Vec<_>, _> = TextTraceReader::new(Cursor::new(text)).collect();
        prop_assert_eq!(back.unwrap(), records);
    }

    #[test]
    fn analyzer_matches_reference(records in prop::collection::vec(record(), 0..300)) {
        let a = analyze_offsets(records.iter().copied().map(Ok)).unwrap();
        let (d, s) = naive(&records);
        prop_assert_eq!(flatten(&a.dynamic), d);
        prop_assert_eq!(flatten(&a.static_), s);
        let taken = records.iter().filter(|r| r.is_taken_branch()).count() as u64;
        prop_assert_eq!(a.dynamic.total(), taken);
    }

    #[test]
    fn histograms_merge_like_concatenation(
        x in prop::collection::vec(record(), 0..100),
        y in prop::collection::vec(record(), 0..100),
    ) {
        let mut hx = analyze_offsets(x.iter().copied().map(Ok)).unwrap().dynamic;
        let hy = analyze_offsets(y.iter().copied().map(Ok)).unwrap().dynamic;
        let all = analyze_offsets(x.iter().chain(&y).copied().map(Ok)).unwrap().dynamic;
        hx.merge(&hy);
        prop_assert_eq!(hx, all);
    }

    #[test]
    fn truncation_reports_the_record_offset(n in 1usize..20, cut in 1usize..18) {
        let records: Vec<_> = (0..n as u64).map(|i| TraceRecord::instruction(addr(i))).collect();
        let mut bytes = write_trace(&records, Vec::new()).unwrap();
        bytes.truncate(bytes.len() - cut);
        let last = 8 + 18 * (n as u64 - 1);
        match read_all(Cursor::new(bytes)) {
            Err(TraceError::Truncated { offset }) => prop_assert_eq!(offset, last),
            other => prop_assert!(false, "{:?}", other),
        }
    }
}

fn content_hash<'a>(records: impl IntoIterator<Item = &'a TraceRecord>) -> u64 {
    let mut h = DefaultHasher::new();
    for r in records {
        r.pc.get().hash(&mut h);
        r.kind.map(BranchKind::code).hash(&mut h);
        r.taken.hash(&mut h);
        r.target.get().hash(&mut h);
    }
    h.finish()
}

#[test]
fn million_record_round_trip() {
    let spec = GeneratorSpec {
        seed: 3,
        ..GeneratorSpec::default()
    };
    let program = generate_program(&spec).unwrap();
    let before = content_hash(&program.records().collect::<Vec<_>>());
    let mut w = TraceWriter::new(Vec::new()).unwrap();
    for r in program.records() {
        w.write(&r).unwrap();
    }
    let bytes = w.finish().unwrap();
    assert_eq!(bytes.len(), 8 + 18 * 1_000_000);
    let mut h = DefaultHasher::new();
    let mut n = 0u64;
    for r in read_trace(Cursor::new(bytes)).unwrap() {
        let r = r.unwrap();
        r.pc.get().hash(&mut h);
        r.kind.map(BranchKind::code).hash(&mut h);
        r.taken.hash(&mut h);
        r.target.get().hash(&mut h);
        n += 1;
    }
    assert_eq!(n, 1_000_000);
    assert_eq!(h.finish(), before);
}

#[test]
fn generator_honours_the_mix_at_scale() {
    let spec = GeneratorSpec::default();
    let program = generate_program(&spec).unwrap();
    assert_eq!(program.static_branches(), spec.static_branch_count);
    assert_eq!(program.footprint_bytes(), spec.code_footprint_bytes);
    let records: Vec<_> = program.records().collect();
    assert_eq!(records.len() as u64, spec.instruction_count);
    let a = analyze_offsets(records.iter().copied().map(Ok)).unwrap();
    assert_eq!(a.static_.total(), spec.static_branch_count as u64);
    for (mode, h) in [("dynamic", &a.dynamic), ("static", &a.static_)] {
        let f = h.class_fractions();
        for (i, (&got, &want)) in f.iter().zip(&spec.offset_mix).enumerate() {
            assert!((got - want).abs() <= 0.02, "{mode} class {i}: {got} vs {want}");
        }
    }
}

#[test]
fn generator_is_seed_deterministic() {
    let spec = GeneratorSpec {
        seed: 7,
        instruction_count: 100_000,
        ..GeneratorSpec::default()
    };
    let a = write_trace(&generate_trace(&spec).unwrap(), Vec::new()).unwrap();
    let b = write_trace(&generate_trace(&spec).unwrap(), Vec::new()).unwrap();
    assert_eq!(a, b);
    let other = GeneratorSpec { seed: 8, ..spec };
    assert_ne!(a, write_trace(&generate_trace(&other).unwrap(), Vec::new()).unwrap());
}

#[test]
fn generated_traces_are_continuous() {
    let spec = GeneratorSpec {
        instruction_count: 200_000,
        static_branch_count: 800,
        code_footprint_bytes: 64 * 1024,
        ..GeneratorSpec::default()
    };
    let t = generate_trace(&spec).unwrap();
    for w in t.windows(2) {
        assert_eq!(w[0].next_pc(), w[1].pc);
    }
    assert!(t.iter().all(|r| r.validate().is_ok()));
}

#[test]
fn short_only_mix_lands_in_low_bins() {
    let spec = GeneratorSpec {
        offset_mix: [1.0, 0.0, 0.0, 0.0, 0.0],
        instruction_count: 200_000,
        static_branch_count: 1000,
        code_footprint_bytes: 64 * 1024,
        max_call_depth: 0,
        ..GeneratorSpec::default()
    };
    let a = analyze_offsets(generate_trace(&spec).unwrap().into_iter().map(Ok)).unwrap();
    let low: u64 = (0..=8).map(|b| a.dynamic.bin(b)).sum();
    assert_eq!(low, a.dynamic.direct_total());
    assert!(a.dynamic.indirect_total() <= a.dynamic.total() / 500);
}

#[test]
fn infeasible_specs_are_rejected() {
    let tiny = GeneratorSpec {
        code_footprint_bytes: 64,
        ..GeneratorSpec::default()
    };
    assert!(matches!(generate_program(&tiny), Err(GenError::Infeasible(_))));
    let bad = GeneratorSpec {
        offset_mix: [0.5, 0.5, 0.5, 0.0, 0.0],
        ..GeneratorSpec::default()
    };
    assert!(matches!(generate_program(&bad), Err(GenError::BadWeights(_))));
}

#[test]
fn offset_of_512_instructions_needs_ten_bits() {
    let pc = addr(1 << 20);
    let t = [TraceRecord::taken(
        pc,
        BranchKind::UnconditionalDirect,
        addr((1 << 20) + 512),
    )];
    let a = analyze_offsets(t.iter().copied().map(Ok)).unwrap();
    assert_eq!(a.dynamic.bin(10), 1);
    assert_eq!(a.dynamic.total(), 1);
}

#[test]
fn empty_trace_gives_header_only_csv() {
    let a = analyze_offsets(std::iter::empty()).unwrap();
    assert_eq!(a.dynamic.total(), 0);
    let mut out = Vec::new();
    write_histogram_csv(&a, &mut out).unwrap();
    assert_eq!(String::from_utf8(out).unwrap(), "bits,kind,mode,count,frequency\n");
}

#[test]
fn bad_headers_and_fields_are_reported() {
    assert!(matches!(
        read_trace(Cursor::new(b"XXXX\x01\x00\x00\x00".to_vec())),
        Err(TraceError::BadMagic)
    ));
    let mut bytes = write_trace(&[TraceRecord::instruction(addr(4))], Vec::new()).unwrap();
    bytes[8] = 0x12; // pc no longer word aligned
    match read_all(Cursor::new(bytes)) {
        Err(TraceError::Address { offset, .. }) => assert_eq!(offset, 8),
        other => panic!("{other:?}"),
    }
}

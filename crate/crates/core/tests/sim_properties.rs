use fdipx_core::frontend::*;
use fdipx_core::trace::crafted::{footprint_loop, working_set_loop, LOOP_BLOCK_LEN};
use fdipx_core::trace::*;
use fdipx_core::BranchKind;
use proptest::prelude::*;

fn small_trace(seed: u64) -> Vec<TraceRecord> {
    let spec = GeneratorSpec {
        seed,
        instruction_count: 30_000,
        static_branch_count: 600,
        code_footprint_bytes: 48 * 1024,
        ..GeneratorSpec::default()
    };
    generate_trace(&spec).unwrap()
}

fn mode() -> impl Strategy<Value = BtbMode> {
    prop_oneof![
        Just(BtbMode::Fdipx),
        Just(BtbMode::FdipBlock),
        Just(BtbMode::MonolithicInstr)
    ]
}

fn capacity() -> impl Strategy<Value = BtbCapacity> {
    prop_oneof![
        Just(BtbCapacity::Baseline(1024)),
        Just(BtbCapacity::Baseline(2048)),
        Just(BtbCapacity::Infinite)
    ]
}

prop_compose! {
    fn config()(
        mode in mode(),
        capacity in capacity(),
        prefetch in any::<bool>(),
        ftq in 1usize..40,
        width in 1usize..8,
        bandwidth in 1usize..16,
        scan in 0usize..4,
        bimodal in any::<bool>(),
    ) -> FrontendConfig {
        FrontendConfig {
            btb: BtbConfig::new(mode, capacity),
            prefetch,
            ftq_capacity: ftq,
            fetch_width: width,
            lookup_bandwidth: bandwidth,
            prefetch_scan_rate: scan,
            direction: if bimodal {
                DirectionPolicy::Bimodal { entries: 1024 }
            } else {
                DirectionPolicy::Oracle
            },
            ..FrontendConfig::default()
        }
    }
}

fn counters(s: &SimStats) -> Vec<u64> {
    s.csv_row().split(',').map(|v| v.parse().unwrap()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn retirement_follows_the_trace(cfg in config(), seed in 0u64..1000) {
        let t = small_trace(seed);
        let mut retired = Vec::with_capacity(t.len());
        let mut f = Frontend::new(t.iter().copied().map(Ok), &cfg).unwrap();
        let s = f.run_with(|r| retired.push(r.pc)).unwrap();
        prop_assert_eq!(s.instructions, t.len() as u64);
        prop_assert!(retired.iter().eq(t.iter().map(|r| &r.pc)));
    }

    #[test]
    fn runs_are_deterministic(cfg in config(), seed in 0u64..1000) {
        let t = small_trace(seed);
        let a = simulate_records(&t, &cfg).unwrap();
        let b = simulate_records(&t, &cfg).unwrap();
        prop_assert_eq!(a.csv_row(), b.csv_row());
    }

    #[test]
    fn per_cycle_invariants(cfg in config(), seed in 0u64..1000) {
        let t = small_trace(seed);
        let mut f = Frontend::new(t.iter().copied().map(Ok), &cfg).unwrap();
        let mut prev = counters(&f.snapshot());
        while f.step(&mut |_| {}).unwrap() {
            prop_assert!(f.ftq().len() <= cfg.ftq_capacity);
            let s = f.snapshot();
            prop_assert!(s.prefetches_useful <= s.prefetches_issued);
            let now = counters(&s);
            prop_assert!(now.iter().zip(&prev).all(|(a, b)| a >= b), "a counter went down");
            prev = now;
        }
    }

    #[test]
    fn demand_misses_ignore_ftq_depth_without_prefetch(
        mode in mode(),
        seed in 0u64..1000,
        small in 1usize..8,
        large in 8usize..64,
    ) {
        let t = small_trace(seed);
        let run = |ftq| {
            let cfg = FrontendConfig {
                btb: BtbConfig::new(mode, BtbCapacity::Baseline(1024)),
                prefetch: false,
                ftq_capacity: ftq,
                ..FrontendConfig::default()
            };
            simulate_records(&t, &cfg).unwrap()
        };
        let (a, b) = (run(small), run(large));
        prop_assert_eq!(a.l1i_misses, b.l1i_misses);
        prop_assert_eq!(a.l1i_accesses, b.l1i_accesses);
    }

    #[test]
    fn no_block_is_prefetched_twice_within_ten_issues(cfg in config(), seed in 0u64..1000) {
        let t = small_trace(seed);
        let cfg = FrontendConfig { prefetch: true, ..cfg };
        let mut f = Frontend::new(t.iter().copied().map(Ok), &cfg).unwrap();
        f.enable_prefetch_log();
        let s = f.run().unwrap();
        let log = f.prefetch_log();
        prop_assert_eq!(log.len() as u64, s.prefetches_issued);
        for (i, b) in log.iter().enumerate() {
            let window = &log[i.saturating_sub(cfg.filter_entries)..i];
            prop_assert!(!window.contains(b), "block {} reissued at {}", b, i);
        }
    }
}

fn with_btb(mode: BtbMode, capacity: BtbCapacity) -> FrontendConfig {
    FrontendConfig {
        btb: BtbConfig::new(mode, capacity),
        ..FrontendConfig::default()
    }
}

#[test]
fn prewarmed_infinite_btb_never_resteers_and_is_fastest() {
    for seed in [1, 2, 3] {
        let t = small_trace(seed);
        let perfect = with_btb(BtbMode::MonolithicInstr, BtbCapacity::Infinite);
        let mut f = Frontend::new(t.iter().copied().map(Ok), &perfect).unwrap();
        f.prewarm(&t);
        let best = f.run().unwrap();
        assert_eq!(best.resteers, 0);
        for mode in [BtbMode::Fdipx, BtbMode::FdipBlock, BtbMode::MonolithicInstr] {
            for cap in [
                BtbCapacity::Baseline(1024),
                BtbCapacity::Baseline(4096),
                BtbCapacity::Infinite,
            ] {
                let s = simulate_records(&t, &with_btb(mode, cap)).unwrap();
                assert!(best.cycles <= s.cycles, "{mode} {cap}: {} < {}", s.cycles, best.cycles);
            }
        }
    }
}

#[test]
fn second_pass_over_a_loop_has_no_resteers() {
    let t = working_set_loop(300, 2, 5);
    for mode in [BtbMode::Fdipx, BtbMode::FdipBlock, BtbMode::MonolithicInstr] {
        let cfg = FrontendConfig {
            warmup_instructions: 300 * LOOP_BLOCK_LEN,
            ..with_btb(mode, BtbCapacity::Baseline(1024))
        };
        let s = simulate_records(&t, &cfg).unwrap();
        assert_eq!(s.resteers, 0, "{mode}");
        assert_eq!(s.instructions, 300 * LOOP_BLOCK_LEN);
    }
}

#[test]
fn ensemble_covers_at_least_the_monolith_at_equal_budget() {
    for w in [800usize, 1200, 1600, 2000, 2400] {
        let t = working_set_loop(w, 3, 9);
        let warm = (w as u64) * LOOP_BLOCK_LEN;
        let run = |mode| {
            let cfg = FrontendConfig {
                warmup_instructions: warm,
                ..with_btb(mode, BtbCapacity::Baseline(1024))
            };
            simulate_records(&t, &cfg).unwrap().resteers
        };
        assert!(run(BtbMode::Fdipx) <= run(BtbMode::MonolithicInstr), "W={w}");
    }
}

#[test]
fn prefetching_cuts_demand_stalls_on_a_large_footprint() {
    let t = footprint_loop(1024, 64, 2, 4);
    let run = |prefetch| {
        let cfg = FrontendConfig {
            prefetch,
            ..with_btb(BtbMode::Fdipx, BtbCapacity::Infinite)
        };
        simulate_records(&t, &cfg).unwrap()
    };
    let (off, on) = (run(false), run(true));
    assert!(on.prefetches_issued >= off.prefetches_issued);
    assert!(on.miss_stall_cycles < off.miss_stall_cycles);
}

#[test]
fn call_return_pairs_are_predicted_after_warmup() {
    let spec = GeneratorSpec {
        instruction_count: 60_000,
        static_branch_count: 300,
        code_footprint_bytes: 16 * 1024,
        offset_mix: [0.3, 0.3, 0.2, 0.0, 0.2],
        ..GeneratorSpec::default()
    };
    let t = generate_trace(&spec).unwrap();
    assert!(t.iter().any(|r| r.kind == Some(BranchKind::Return)));
    let cfg = FrontendConfig {
        warmup_instructions: 30_000,
        ..with_btb(BtbMode::Fdipx, BtbCapacity::Infinite)
    };
    assert_eq!(simulate_records(&t, &cfg).unwrap().resteers, 0);
}

#[test]
fn trace_errors_carry_the_record_ordinal() {
    let mut t = small_trace(1);
    t.truncate(10);
    let bytes = write_trace(&t, Vec::new()).unwrap();
    let cut = &bytes[..bytes.len() - 5];
    match simulate(
        read_trace(std::io::Cursor::new(cut.to_vec())).unwrap(),
        &FrontendConfig::default(),
    ) {
        Err(SimError::Trace { ordinal, .. }) => assert_eq!(ordinal, 9),
        other => panic!("{other:?}"),
    }
}

//! Acceptance suite: one test per criterion, each printing a PASS line.
//!
//! Run with `cargo test -p spmopt-core --test acceptance -- --nocapture`.

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spmopt_core::allocator::{
    solve_exact, solve_exhaustive, AllocationModel, PlacementTarget, VariableCosts,
};
use spmopt_core::energy::{assign_spm_ranges, spm_dynamic_energy, static_energy};
use spmopt_core::exact::Exact;
use spmopt_core::memspec::{area_equivalent, load_pool, MemoryPool};
use spmopt_core::pipeline::run_single;
use spmopt_core::simtrace::{simulate, Trace, TraceRecord};
use spmopt_core::workload::{
    classify_access, parse_access, parse_linear, parse_workload, AccessClass, AccessMode,
    Bindings, CacheFriendliness, IteratorSpec, LoopNest, VariableProfile,
};

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn pool_from(file: &str) -> MemoryPool {
    let path = configs().join(file);
    load_pool(&std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path:?}: {e}")))
        .unwrap()
}

fn random_model(rng: &mut ChaCha8Rng) -> AllocationModel {
    let n_spms = rng.gen_range(0..=3usize);
    let n_vars = rng.gen_range(0..=12usize);
    let spm_capacities_bytes = (0..n_spms).map(|_| rng.gen_range(0..4000u64)).collect();
    let variables = (0..n_vars)
        .map(|i| VariableCosts {
            name: format!("v{i}"),
            footprint_bytes: rng.gen_range(1..=2000u64),
            cache_friendly: rng.gen_bool(0.25),
            h_cost_pj: Exact::from(rng.gen_range(0..1_000_000u64)),
            f_costs_pj: (0..n_spms)
                .map(|_| Exact::from(rng.gen_range(0..1_000_000u64)))
                .collect(),
        })
        .collect();
    AllocationModel {
        variables,
        spm_capacities_bytes,
    }
}

/// Criterion 1: on 500 randomized models (<= 12 variables, <= 3
/// scratchpads), branch-and-bound and exhaustive enumeration return equal
/// objectives and identical placements. Exact equality.
#[test]
fn acceptance_1_solver_optimality() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    for case in 0..500 {
        let model = random_model(&mut rng);
        let exact = solve_exact(&model).unwrap();
        let oracle = solve_exhaustive(&model).unwrap();
        assert_eq!(
            exact.objective_pj, oracle.objective_pj,
            "case {case}: objectives differ"
        );
        assert_eq!(
            exact.placements, oracle.placements,
            "case {case}: placements differ"
        );
    }
    println!("acceptance 1 (solver optimality, 500 models): PASS");
}

/// Criterion 2: every plan from the criterion-1 distribution satisfies the
/// single-placement, capacity and friendliness-forcing invariants.
#[test]
fn acceptance_2_constraint_satisfaction() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    for case in 0..500 {
        let model = random_model(&mut rng);
        let plan = solve_exact(&model).unwrap();

        // Single placement: one entry per variable, in declaration order.
        assert_eq!(plan.placements.len(), model.variables.len(), "case {case}");
        // Capacity and forcing, re-derived here rather than via plan.check.
        let mut used = vec![0u64; model.spm_capacities_bytes.len()];
        for (p, v) in plan.placements.iter().zip(&model.variables) {
            assert_eq!(p.variable, v.name, "case {case}");
            match p.target {
                PlacementTarget::MainMemory => {}
                PlacementTarget::Scratchpad(i) => {
                    assert!(!v.cache_friendly, "case {case}: friendly variable off-loaded");
                    used[i] += v.footprint_bytes;
                }
            }
        }
        for (used, cap) in used.iter().zip(&model.spm_capacities_bytes) {
            assert!(used <= cap, "case {case}: capacity violated");
        }
        // And the library's own validator agrees.
        plan.check(&model).unwrap();
    }
    println!("acceptance 2 (constraint satisfaction, 500 plans): PASS");
}

/// Criterion 3: the three access archetypes classify Friendly, Unfriendly,
/// Unfriendly with 8-byte elements and 64-byte lines.
#[test]
fn acceptance_3_access_archetypes() {
    let known = ["A", "B"].iter().map(|s| s.to_string()).collect();
    let var = VariableProfile {
        name: "A".into(),
        element_size_bytes: 8,
        dims: vec![16, 128],
        element_count: 16 * 128,
        reads_override: None,
        writes_override: None,
        cache_friendly: CacheFriendliness::Auto,
        init: None,
    };
    let nest = LoopNest {
        iterators: vec![
            IteratorSpec {
                name: "i".into(),
                lower: parse_linear("0").unwrap(),
                upper: parse_linear("16").unwrap(),
            },
            IteratorSpec {
                name: "j".into(),
                lower: parse_linear("0").unwrap(),
                upper: parse_linear("16").unwrap(),
            },
        ],
        accesses: vec![],
    };
    let classify = |text: &str| {
        let expr = parse_access(text, &known).unwrap();
        classify_access(&expr, &var, &nest, 64).unwrap()
    };
    assert_eq!(classify("A[i][j]"), AccessClass::Friendly);
    assert_eq!(classify("A[i][B[j]]"), AccessClass::Unfriendly);
    assert_eq!(classify("A[i][j*8]"), AccessClass::Unfriendly);
    println!("acceptance 3 (access archetypes F/U/U): PASS");
}

/// Criterion 4: per-read energies of every scratchpad row are returned
/// exactly, and the mW x ns static-energy conversion reproduces
/// 84.809 mW * 1 ms = 8.4809e7 pJ within 1e-12 relative error.
#[test]
fn acceptance_4_table_arithmetic() {
    let table = pool_from("pools/table.json");
    let expected_read_pj = ["195.251", "228.512", "276.137", "388.324", "516.687"];
    assert_eq!(table.scratchpads.len(), expected_read_pj.len());
    for (spm, expected) in table.scratchpads.iter().zip(expected_read_pj) {
        assert_eq!(
            spm_dynamic_energy(1, 0, spm).unwrap(),
            Exact::parse(expected).unwrap(),
            "{}",
            spm.name
        );
    }

    // A pool whose only leaking module is the 1024 kB scratchpad.
    let mut pool = table.clone();
    pool.caches.clear();
    pool.scratchpads.truncate(1);
    let one_ms_in_ns = Exact::from(1_000_000u64);
    let e = static_energy(&one_ms_in_ns, &pool);
    let expected = Exact::parse("8.4809e7").unwrap();
    let rel_err = (&e - &expected).abs() / &expected;
    assert!(
        rel_err <= Exact::parse("1e-12").unwrap(),
        "relative error {rel_err} too large (got {e})"
    );
    println!("acceptance 4 (technology table arithmetic): PASS");
}

/// Criterion 5: the area-equivalent partner of the 2048 kB SRAM cache
/// among the scratchpad rows is the 8192 kB module (1.343 vs 1.311 mm2).
#[test]
fn acceptance_5_area_equivalent_pairing() {
    let table = pool_from("pools/table.json");
    let reference = table
        .caches
        .iter()
        .find(|c| c.name == "sram_cache_2048kB")
        .unwrap();
    let tolerance = Exact::parse("0.05").unwrap();
    let picked = area_equivalent(reference, &table.scratchpads, &tolerance).unwrap();
    assert_eq!(picked.name, "sttram_spm_8192kB");
    // The denser technology packs about four times the capacity into the
    // same die area; for this pairing the ratio is exactly 4.
    assert_eq!(picked.capacity_bytes, 4 * reference.capacity_bytes);
    println!("acceptance 5 (area-equivalent pairing 2048 kB -> 8192 kB): PASS");
}

/// Criterion 6: simulator oracles. (a) 1024 streaming 8-byte reads through
/// 64-byte lines miss exactly once per line; (b) an LRU adversary cycling
/// over associativity + 1 lines never hits in steady state; (c) a trace
/// confined to a scratchpad range leaves every cache counter at zero.
#[test]
fn acceptance_6_simulator_oracles() {
    // (a) streaming: 1024 * 8 B / 64 B = 128 distinct lines.
    let streaming_pool = load_pool(
        r#"{
            "main_memory": {"name": "mm", "technology": "DRAM", "capacity_bytes": 1073741824,
                "area_mm2": 0, "read_latency_ns": 50, "write_latency_ns": 50,
                "read_energy_pj": 10000, "write_energy_pj": 10000, "leakage_mw": 0},
            "caches": [{"name": "l1", "technology": "SRAM", "capacity_bytes": 262144,
                "area_mm2": 0.229, "read_latency_ns": 2.258, "write_latency_ns": 1.588,
                "miss_latency_ns": 0.083, "read_energy_pj": 72, "write_energy_pj": 25,
                "leakage_mw": 336.330,
                "cache_geometry": {"line_size_bytes": 64, "associativity": 8, "write_policy": "write_back"}}]
        }"#,
    )
    .unwrap();
    let read_at = |address| TraceRecord {
        address,
        size_bytes: 8,
        mode: AccessMode::Read,
        variable: 0,
    };
    let trace = Trace {
        variables: vec!["A".into()],
        records: (0..1024u64).map(|i| read_at(i * 8)).collect(),
    };
    let stats = simulate(&trace, &streaming_pool, &[]).unwrap();
    assert_eq!(stats.caches[0].misses(), 128);
    assert_eq!(stats.caches[0].hits(), 896);

    // (b) adversary: single-set 4-way cache, cycle over 5 lines.
    let adversary_pool = load_pool(
        r#"{
            "main_memory": {"name": "mm", "technology": "DRAM", "capacity_bytes": 1073741824,
                "area_mm2": 0, "read_latency_ns": 50, "write_latency_ns": 50,
                "read_energy_pj": 10000, "write_energy_pj": 10000, "leakage_mw": 0},
            "caches": [{"name": "tiny", "technology": "SRAM", "capacity_bytes": 256,
                "area_mm2": 0, "read_latency_ns": 1, "write_latency_ns": 1,
                "miss_latency_ns": 0.1, "read_energy_pj": 1, "write_energy_pj": 1,
                "leakage_mw": 1,
                "cache_geometry": {"line_size_bytes": 64, "associativity": 4, "write_policy": "write_back"}}]
        }"#,
    )
    .unwrap();
    let trace = Trace {
        variables: vec!["A".into()],
        records: (0..20u64).flat_map(|_| (0..5u64).map(|i| read_at(i * 256))).collect(),
    };
    let stats = simulate(&trace, &adversary_pool, &[]).unwrap();
    assert_eq!(stats.caches[0].hits(), 0, "LRU adversary must never hit");
    assert_eq!(stats.caches[0].misses(), 100);

    // The friendly counterpart: associativity-many lines hit after pass 1.
    let trace = Trace {
        variables: vec!["A".into()],
        records: (0..20u64).flat_map(|_| (0..4u64).map(|i| read_at(i * 256))).collect(),
    };
    let stats = simulate(&trace, &adversary_pool, &[]).unwrap();
    assert_eq!(stats.caches[0].misses(), 4);
    assert_eq!(stats.caches[0].hits(), 76);

    // (c) scratchpad-routed traffic bypasses the caches entirely.
    let spm_pool = pool_from("pools/spm_8192kB.json");
    let ranges = assign_spm_ranges(
        spm_pool.main_memory.capacity_bytes,
        &[spm_pool.scratchpads[0].capacity_bytes],
        spm_pool.physical_address_bits,
    )
    .unwrap();
    let base = ranges[0].start;
    let trace = Trace {
        variables: vec!["A".into()],
        records: (0..1000u64)
            .map(|i| TraceRecord {
                address: base + (i % 256) * 8,
                size_bytes: 8,
                mode: if i % 3 == 0 { AccessMode::Write } else { AccessMode::Read },
                variable: 0,
            })
            .collect(),
    };
    let stats = simulate(&trace, &spm_pool, &ranges).unwrap();
    for c in &stats.caches {
        assert_eq!(c.accesses(), 0, "cache saw scratchpad traffic");
    }
    assert_eq!(stats.main_memory.reads + stats.main_memory.writes, 0);
    assert_eq!(stats.spms[0].reads + stats.spms[0].writes, 1000);
    println!("acceptance 6 (simulator oracles a/b/c): PASS");
}

/// Criterion 7: for every bundled affine workload at N in {4, 16, 32},
/// static counts equal simulated per-variable totals exactly.
#[test]
fn acceptance_7_static_vs_trace_counts() {
    let pool = pool_from("pools/spm_8192kB.json");
    for workload_file in ["mm2.json", "bicg.json", "atax.json"] {
        let path = configs().join("workloads").join(workload_file);
        let spec = parse_workload(&std::fs::read_to_string(&path).unwrap()).unwrap();
        for n in [4i64, 16, 32] {
            let mut bindings = Bindings::new();
            bindings.insert("N".into(), n);
            let run = run_single(&pool, &spec, &bindings).unwrap();
            assert!(
                run.cross.all_zero(),
                "{workload_file} at N={n}: {:?}",
                run.cross
                    .rows
                    .iter()
                    .filter(|r| !r.is_zero())
                    .collect::<Vec<_>>()
            );
        }
    }
    println!("acceptance 7 (static counts == simulated counts): PASS");
}

/// Criterion 8: sweeping the 2mm-like kernel over growing N with the
/// area-equivalent pools, (a) the scratchpad configuration's normalized
/// static energy stays below 1 at every size, and (b) its normalized total
/// energy is non-increasing across the three largest sizes.
#[test]
fn acceptance_8_sweep_trend() {
    let sram = pool_from("pools/cache_2048kB.json");
    let spm = pool_from("pools/spm_8192kB.json");
    let spec = parse_workload(
        &std::fs::read_to_string(configs().join("workloads/mm2.json")).unwrap(),
    )
    .unwrap();

    let sizes = [16i64, 64, 128, 160];
    let mut norm_static = Vec::new();
    let mut norm_total = Vec::new();
    for &n in &sizes {
        let mut bindings = Bindings::new();
        bindings.insert("N".into(), n);
        let baseline = run_single(&sram, &spec, &bindings).unwrap();
        let candidate = run_single(&spm, &spec, &bindings).unwrap();
        norm_static.push(&candidate.energy.e_static_pj / &baseline.energy.e_static_pj);
        norm_total.push(&candidate.energy.e_total_pj / &baseline.energy.e_total_pj);
    }

    for (n, ratio) in sizes.iter().zip(&norm_static) {
        assert!(
            *ratio < Exact::one(),
            "normalized static energy at N={n} is {} >= 1",
            ratio.to_fixed_decimal(6)
        );
    }
    let tail = &norm_total[sizes.len() - 3..];
    assert!(
        tail[0] >= tail[1] && tail[1] >= tail[2],
        "normalized total energy not non-increasing over the three largest sizes: {}, {}, {}",
        tail[0].to_fixed_decimal(6),
        tail[1].to_fixed_decimal(6),
        tail[2].to_fixed_decimal(6)
    );
    println!(
        "acceptance 8 (sweep trend, norm E_TOT tail {} >= {} >= {}): PASS",
        tail[0].to_fixed_decimal(4),
        tail[1].to_fixed_decimal(4),
        tail[2].to_fixed_decimal(4)
    );
}

/// Criterion 9: scratchpad ranges over the sample pool begin at the main
/// memory size and are contiguous, half-open and pairwise disjoint, with
/// the union exactly covering the summed capacities.
#[test]
fn acceptance_9_address_mapping() {
    let table = pool_from("pools/table.json");
    let sizes: Vec<u64> = table.scratchpads.iter().map(|s| s.capacity_bytes).collect();
    let ranges = assign_spm_ranges(
        table.main_memory.capacity_bytes,
        &sizes,
        table.physical_address_bits,
    )
    .unwrap();

    assert_eq!(ranges[0].start, table.main_memory.capacity_bytes);
    let mut union = 0u64;
    for (i, range) in ranges.iter().enumerate() {
        assert!(range.start < range.end_exclusive, "half-open and non-empty");
        assert_eq!(range.len(), sizes[i]);
        union += range.len();
        if i > 0 {
            assert_eq!(range.start, ranges[i - 1].end_exclusive, "contiguous");
        }
        for other in &ranges[i + 1..] {
            assert!(
                range.end_exclusive <= other.start || other.end_exclusive <= range.start,
                "ranges overlap"
            );
        }
    }
    assert_eq!(union, sizes.iter().sum::<u64>());
    println!("acceptance 9 (scratchpad address mapping): PASS");
}

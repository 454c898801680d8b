//! Shared input builders for the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spmopt_core::allocator::{AllocationModel, VariableCosts};
use spmopt_core::exact::Exact;
use spmopt_core::memspec::{load_pool, MemoryPool};
use spmopt_core::simtrace::{Trace, TraceRecord};
use spmopt_core::workload::AccessMode;

/// A reproducible placement instance.
pub fn random_model(variables: usize, scratchpads: usize, seed: u64) -> AllocationModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    AllocationModel {
        variables: (0..variables)
            .map(|i| VariableCosts {
                name: format!("v{i}"),
                footprint_bytes: rng.gen_range(1..=2000),
                cache_friendly: rng.gen_bool(0.25),
                h_cost_pj: Exact::from(rng.gen_range(0..1_000_000u64)),
                f_costs_pj: (0..scratchpads)
                    .map(|_| Exact::from(rng.gen_range(0..1_000_000u64)))
                    .collect(),
            })
            .collect(),
        spm_capacities_bytes: (0..scratchpads).map(|_| rng.gen_range(500..4000)).collect(),
    }
}

/// Two-level write-back hierarchy used by the simulation benchmarks.
pub fn two_level_pool() -> MemoryPool {
    load_pool(
        r#"{
            "main_memory": {"name": "mm", "technology": "DRAM", "capacity_bytes": 1073741824,
                "area_mm2": 0, "read_latency_ns": 50, "write_latency_ns": 50,
                "read_energy_pj": 10000, "write_energy_pj": 10000, "leakage_mw": 0},
            "caches": [
                {"name": "l1", "technology": "SRAM", "capacity_bytes": 32768,
                 "area_mm2": 0.04, "read_latency_ns": 1.0, "write_latency_ns": 0.8,
                 "miss_latency_ns": 0.05, "read_energy_pj": 20, "write_energy_pj": 12,
                 "leakage_mw": 40,
                 "cache_geometry": {"line_size_bytes": 64, "associativity": 8, "write_policy": "write_back"}},
                {"name": "l2", "technology": "SRAM", "capacity_bytes": 2097152,
                 "area_mm2": 1.343, "read_latency_ns": 9.989, "write_latency_ns": 7.941,
                 "miss_latency_ns": 0.149, "read_energy_pj": 378, "write_energy_pj": 24,
                 "leakage_mw": 2141.436,
                 "cache_geometry": {"line_size_bytes": 64, "associativity": 8, "write_policy": "write_back"}}
            ]
        }"#,
    )
    .unwrap()
}

/// Sequential 8-byte reads over `records` addresses.
pub fn streaming_trace(records: usize) -> Trace {
    Trace {
        variables: vec!["A".into()],
        records: (0..records)
            .map(|i| TraceRecord {
                address: (i as u64 % (1 << 26)) * 8,
                size_bytes: 8,
                mode: AccessMode::Read,
                variable: 0,
            })
            .collect(),
    }
}

/// Pseudo-random mixed reads/writes inside an 8 MiB working set.
pub fn scattered_trace(records: usize, seed: u64) -> Trace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Trace {
        variables: vec!["A".into()],
        records: (0..records)
            .map(|_| TraceRecord {
                address: rng.gen_range(0..(1u64 << 20)) * 8,
                size_bytes: 8,
                mode: if rng.gen_bool(0.3) { AccessMode::Write } else { AccessMode::Read },
                variable: 0,
            })
            .collect(),
    }
}

//! Energy accounting and the scratchpad physical address map.
//!
//! Static energy is leakage power integrated over the run: P[mW] * t[ns] is
//! already picojoules (1 mW * 1 ns = 1e-3 J/s * 1e-9 s = 1e-12 J = 1 pJ).
//! Dynamic energy is accumulated per access event from the module tables;
//! a power-times-time form is available for cache dynamic energy when a
//! measured dynamic power is supplied instead of event counts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::Exact;
use crate::memspec::{MemoryKind, MemoryModuleSpec, MemoryPool};

/// A half-open physical byte range `[start, end_exclusive)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AddressRange {
    pub start: u64,
    pub end_exclusive: u64,
}

impl AddressRange {
    pub fn len(&self) -> u64 {
        self.end_exclusive - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start >= self.end_exclusive
    }

    pub fn contains(&self, addr: u64) -> bool {
        self.start <= addr && addr < self.end_exclusive
    }
}

/// Access totals observed at one cache level.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CacheActivity {
    pub reads: u64,
    pub writes: u64,
    pub misses: u64,
}

/// Access totals that reached main memory.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MainMemoryActivity {
    pub reads: u64,
    pub writes: u64,
}

/// The full energy breakdown of one run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnergyReport {
    pub t_exec_ns: Exact,
    pub e_static_pj: Exact,
    pub e_spm_pj: Exact,
    pub e_cache_dyn_pj: Exact,
    pub e_mm_pj: Exact,
    pub e_dyn_pj: Exact,
    pub e_total_pj: Exact,
}

/// Leakage of every pool module integrated over `t_exec_ns`.
pub fn static_energy(t_exec_ns: &Exact, pool: &MemoryPool) -> Exact {
    let leakage_mw: Exact = pool.modules().map(|m| &m.leakage_mw).sum();
    leakage_mw * t_exec_ns
}

/// Dynamic energy of one scratchpad: `reads * E_r + writes * E_w`.
pub fn spm_dynamic_energy(reads: u64, writes: u64, spec: &MemoryModuleSpec) -> Result<Exact> {
    if spec.kind() != MemoryKind::Scratchpad {
        return Err(Error::Energy(format!(
            "spm_dynamic_energy expects a scratchpad, {:?} is a {:?}",
            spec.name,
            spec.kind()
        )));
    }
    Ok(Exact::from(reads) * &spec.read_energy_pj + Exact::from(writes) * &spec.write_energy_pj)
}

/// Per-access dynamic energy of the cache hierarchy and of main memory.
///
/// Each access arriving at a cache probes it once (the hit/miss energy); a
/// miss pays one more probe when the refilled line is installed. Refill and
/// write-back traffic shows up in the next level's own counts, so nothing
/// is double-charged.
pub fn cache_and_mm_energy(
    cache_activity: &[CacheActivity],
    mm_activity: &MainMemoryActivity,
    pool: &MemoryPool,
) -> Result<(Exact, Exact)> {
    if cache_activity.len() != pool.caches.len() {
        return Err(Error::Energy(format!(
            "activity for {} cache levels, pool has {}",
            cache_activity.len(),
            pool.caches.len()
        )));
    }
    let mut e_cache = Exact::zero();
    for (activity, spec) in cache_activity.iter().zip(&pool.caches) {
        e_cache += Exact::from(activity.reads + activity.misses) * &spec.read_energy_pj
            + Exact::from(activity.writes) * &spec.write_energy_pj;
    }
    let mm = &pool.main_memory;
    let e_mm = Exact::from(mm_activity.reads) * &mm.read_energy_pj
        + Exact::from(mm_activity.writes) * &mm.write_energy_pj;
    Ok((e_cache, e_mm))
}

/// Alternative cache dynamic energy from a measured dynamic power figure.
pub fn cache_energy_from_power(p_dyn_mw: &Exact, t_exec_ns: &Exact) -> Exact {
    p_dyn_mw * t_exec_ns
}

/// Assembles the report and verifies its identities.
///
/// `e_static_pj` must equal the pool leakage integrated over `t_exec_ns`;
/// a mismatch means the components were computed at different times.
pub fn total_energy(
    t_exec_ns: &Exact,
    e_static_pj: &Exact,
    e_spm_pj: &Exact,
    e_cache_dyn_pj: &Exact,
    e_mm_pj: &Exact,
    pool: &MemoryPool,
) -> Result<EnergyReport> {
    let expected_static = static_energy(t_exec_ns, pool);
    if *e_static_pj != expected_static {
        return Err(Error::Energy(format!(
            "static component {e_static_pj} pJ is inconsistent with t_exec = {t_exec_ns} ns (expected {expected_static} pJ)"
        )));
    }
    for (name, value) in [
        ("t_exec_ns", t_exec_ns),
        ("e_static_pj", e_static_pj),
        ("e_spm_pj", e_spm_pj),
        ("e_cache_dyn_pj", e_cache_dyn_pj),
        ("e_mm_pj", e_mm_pj),
    ] {
        if value.is_negative() {
            return Err(Error::Energy(format!("{name} must be non-negative")));
        }
    }
    let e_dyn = e_mm_pj + e_cache_dyn_pj + e_spm_pj;
    let e_total = e_static_pj + &e_dyn;
    Ok(EnergyReport {
        t_exec_ns: t_exec_ns.clone(),
        e_static_pj: e_static_pj.clone(),
        e_spm_pj: e_spm_pj.clone(),
        e_cache_dyn_pj: e_cache_dyn_pj.clone(),
        e_mm_pj: e_mm_pj.clone(),
        e_dyn_pj: e_dyn,
        e_total_pj: e_total,
    })
}

/// Lays out scratchpads directly after main memory: contiguous, disjoint,
/// half-open byte ranges in list order.
pub fn assign_spm_ranges(
    main_memory_bytes: u64,
    spm_sizes: &[u64],
    physical_address_bits: u32,
) -> Result<Vec<AddressRange>> {
    if physical_address_bits == 0 || physical_address_bits > 64 {
        return Err(Error::AddressSpace(
            "physical_address_bits must be in 1..=64".into(),
        ));
    }
    let limit: u128 = 1u128 << physical_address_bits;
    let mut cursor = main_memory_bytes as u128;
    if cursor > limit {
        return Err(Error::AddressSpace(format!(
            "main memory of {main_memory_bytes} bytes exceeds a {physical_address_bits}-bit address space"
        )));
    }
    let mut ranges = Vec::with_capacity(spm_sizes.len());
    for (i, &size) in spm_sizes.iter().enumerate() {
        if size == 0 {
            return Err(Error::AddressSpace(format!(
                "scratchpad {i} has zero size"
            )));
        }
        let end = cursor + size as u128;
        // end_exclusive must also be representable in a u64 address.
        if end > limit || end > u64::MAX as u128 {
            return Err(Error::AddressSpace(format!(
                "scratchpad {i} ends at {end:#x}, beyond the {physical_address_bits}-bit address space"
            )));
        }
        ranges.push(AddressRange {
            start: cursor as u64,
            end_exclusive: end as u64,
        });
        cursor = end;
    }
    Ok(ranges)
}

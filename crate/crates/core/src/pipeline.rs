//! End-to-end composition: classify, allocate, lay out, simulate, account.

use std::collections::BTreeMap;

use crate::allocator::{build_model, solve_exact, AllocationModel, AllocationPlan, VariableDemand};
use crate::energy::{assign_spm_ranges, cache_and_mm_energy, static_energy, total_energy, EnergyReport};
use crate::error::Result;
use crate::exact::Exact;
use crate::memspec::MemoryPool;
use crate::simtrace::{
    assign_variable_addresses, cross_check, visit_accesses, CrossCheck, SimStats, Simulator,
    VarLayout,
};
use crate::workload::{workload_cf, workload_counts, AccessCounts, Bindings, Workload, WorkloadSpec};

/// Everything one configuration run produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub workload: Workload,
    pub cf: BTreeMap<String, bool>,
    pub counts: BTreeMap<String, AccessCounts>,
    pub model: AllocationModel,
    pub plan: AllocationPlan,
    pub layout: VarLayout,
    pub stats: SimStats,
    pub energy: EnergyReport,
    pub cross: CrossCheck,
}

/// Classification, counts, model and solved plan for one workload.
#[derive(Debug, Clone)]
pub struct AllocationOutput {
    pub cf: BTreeMap<String, bool>,
    pub counts: BTreeMap<String, AccessCounts>,
    pub model: AllocationModel,
    pub plan: AllocationPlan,
}

/// Builds per-variable demands (footprint, counts, friendliness) and the
/// placement model, then solves it.
pub fn allocate(pool: &MemoryPool, workload: &Workload, bindings: &Bindings) -> Result<AllocationOutput> {
    let cf = workload_cf(workload, pool.l1_line_size())?;
    let counts = workload_counts(workload, bindings)?;
    let demands: Vec<VariableDemand> = workload
        .variables
        .iter()
        .map(|v| VariableDemand {
            name: v.name.clone(),
            footprint_bytes: v.footprint_bytes(),
            counts: counts[&v.name],
            cache_friendly: cf[&v.name],
        })
        .collect();
    let model = build_model(&demands, pool)?;
    let plan = solve_exact(&model)?;
    Ok(AllocationOutput {
        cf,
        counts,
        model,
        plan,
    })
}

/// Lays out the plan, streams the trace through the simulator and builds
/// the energy report.
pub fn simulate_plan(
    pool: &MemoryPool,
    workload: &Workload,
    plan: &AllocationPlan,
    bindings: &Bindings,
) -> Result<(VarLayout, SimStats)> {
    let ranges = assign_spm_ranges(
        pool.main_memory.capacity_bytes,
        &pool
            .scratchpads
            .iter()
            .map(|s| s.capacity_bytes)
            .collect::<Vec<_>>(),
        pool.physical_address_bits,
    )?;
    let layout = assign_variable_addresses(workload, plan, pool, &ranges)?;
    let mut sim = Simulator::new(
        pool,
        &ranges,
        workload.variables.iter().map(|v| v.name.clone()).collect(),
    )?;
    visit_accesses(workload, &layout, bindings, |record| sim.access(&record))?;
    let stats = sim.finish();
    stats.check_conservation(pool)?;
    Ok((layout, stats))
}

/// Assembles the energy report of one simulated run.
pub fn energy_from_stats(stats: &SimStats, pool: &MemoryPool) -> Result<EnergyReport> {
    let (e_cache, e_mm) = cache_and_mm_energy(&stats.cache_activity(), &stats.mm_activity(), pool)?;
    let mut e_spm = Exact::zero();
    for (spec, counters) in pool.scratchpads.iter().zip(&stats.spms) {
        e_spm += crate::energy::spm_dynamic_energy(counters.reads, counters.writes, spec)?;
    }
    let e_static = static_energy(&stats.t_exec_ns, pool);
    total_energy(&stats.t_exec_ns, &e_static, &e_spm, &e_cache, &e_mm, pool)
}

/// The full pipeline for one (pool, workload, bindings) cell.
pub fn run_single(pool: &MemoryPool, spec: &WorkloadSpec, bindings: &Bindings) -> Result<RunOutput> {
    let workload = spec.resolve(bindings)?;
    let allocation = allocate(pool, &workload, bindings)?;
    let (layout, stats) = simulate_plan(pool, &workload, &allocation.plan, bindings)?;
    let energy = energy_from_stats(&stats, pool)?;
    let cross = cross_check(&allocation.counts, &stats);
    Ok(RunOutput {
        workload,
        cf: allocation.cf,
        counts: allocation.counts,
        model: allocation.model,
        plan: allocation.plan,
        layout,
        stats,
        energy,
        cross,
    })
}

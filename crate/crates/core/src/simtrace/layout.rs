//! Physical placement of variables according to an allocation plan.
//!
//! Main-memory variables are packed from address zero, each base aligned to
//! the largest cache line so the stride classification's alignment
//! assumption holds in simulation. Scratchpad variables are packed
//! contiguously inside their scratchpad's range (no tags, no lines, no
//! alignment needed), so the solver's capacity constraint is exactly the
//! packing constraint.

use crate::allocator::{AllocationPlan, PlacementTarget};
use crate::energy::AddressRange;
use crate::error::{Error, Result};
use crate::memspec::MemoryPool;
use crate::workload::Workload;

/// Where a variable's storage lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    MainMemory,
    Scratchpad(usize),
}

/// Resolved placement of one variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarPlacement {
    pub name: String,
    pub base_address: u64,
    pub footprint_bytes: u64,
    pub route: Route,
}

/// Base addresses for every workload variable, plus trace-shaping facts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarLayout {
    /// Parallel to the workload's variable list.
    pub placements: Vec<VarPlacement>,
    /// Smallest cache line size; cache-routed accesses split on it.
    pub split_line_bytes: Option<u64>,
    /// Scratchpad address ranges, parallel to the pool's scratchpad list.
    pub spm_ranges: Vec<AddressRange>,
}

impl VarLayout {
    pub fn placement_of(&self, name: &str) -> Option<&VarPlacement> {
        self.placements.iter().find(|p| p.name == name)
    }
}

/// Assigns a base address to every variable per the plan.
pub fn assign_variable_addresses(
    workload: &Workload,
    plan: &AllocationPlan,
    pool: &MemoryPool,
    spm_ranges: &[AddressRange],
) -> Result<VarLayout> {
    if spm_ranges.len() != pool.scratchpads.len() {
        return Err(Error::Simulation(format!(
            "{} scratchpad ranges for {} scratchpads",
            spm_ranges.len(),
            pool.scratchpads.len()
        )));
    }

    let align = pool
        .caches
        .iter()
        .map(|c| c.geometry().line_size_bytes)
        .max()
        .unwrap_or(1);
    let split_line_bytes = pool
        .caches
        .iter()
        .map(|c| c.geometry().line_size_bytes)
        .min();

    let mut mm_cursor: u64 = 0;
    let mut spm_cursors: Vec<u64> = spm_ranges.iter().map(|r| r.start).collect();
    let mut placements = Vec::with_capacity(workload.variables.len());

    for var in &workload.variables {
        let footprint = var.footprint_bytes();
        let target = plan.target_of(&var.name).ok_or_else(|| {
            Error::Simulation(format!("plan does not place variable {:?}", var.name))
        })?;
        let placement = match target {
            PlacementTarget::MainMemory => {
                let base = align_up(mm_cursor, align)?;
                let end = base
                    .checked_add(footprint)
                    .ok_or_else(|| Error::Overflow(format!("laying out {:?}", var.name)))?;
                if end > pool.main_memory.capacity_bytes {
                    return Err(Error::Simulation(format!(
                        "main memory overflow laying out {:?}: need {end} of {} bytes",
                        var.name, pool.main_memory.capacity_bytes
                    )));
                }
                mm_cursor = end;
                VarPlacement {
                    name: var.name.clone(),
                    base_address: base,
                    footprint_bytes: footprint,
                    route: Route::MainMemory,
                }
            }
            PlacementTarget::Scratchpad(i) => {
                let range = spm_ranges.get(i).ok_or_else(|| {
                    Error::Simulation(format!(
                        "variable {:?} placed in nonexistent scratchpad {i}",
                        var.name
                    ))
                })?;
                let base = spm_cursors[i];
                let end = base
                    .checked_add(footprint)
                    .ok_or_else(|| Error::Overflow(format!("laying out {:?}", var.name)))?;
                if end > range.end_exclusive {
                    return Err(Error::Simulation(format!(
                        "scratchpad {i} overflow laying out {:?}",
                        var.name
                    )));
                }
                spm_cursors[i] = end;
                VarPlacement {
                    name: var.name.clone(),
                    base_address: base,
                    footprint_bytes: footprint,
                    route: Route::Scratchpad(i),
                }
            }
        };
        placements.push(placement);
    }

    Ok(VarLayout {
        placements,
        split_line_bytes,
        spm_ranges: spm_ranges.to_vec(),
    })
}

fn align_up(value: u64, align: u64) -> Result<u64> {
    debug_assert!(align >= 1);
    let rem = value % align;
    if rem == 0 {
        Ok(value)
    } else {
        value
            .checked_add(align - rem)
            .ok_or_else(|| Error::Overflow("aligning a base address".into()))
    }
}

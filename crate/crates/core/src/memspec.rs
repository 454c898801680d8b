//! Memory module specifications and pools.
//!
//! A [`MemoryPool`] describes the memories visible to the processor: exactly
//! one main memory, an ordered cache hierarchy (L1 first) and any number of
//! scratchpads. Module parameters (capacity, latencies, per-access energies,
//! leakage, die area) are opaque technology inputs, typically produced by
//! CACTI-class modeling tools, and are consumed as-is.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::Exact;

/// What role a module plays in the hierarchy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemoryKind {
    Cache,
    Scratchpad,
    MainMemory,
}

/// Storage technology of a module. Free-form names are preserved.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub enum Technology {
    Sram,
    SttRam,
    Dram,
    Other(String),
}

impl From<String> for Technology {
    fn from(s: String) -> Self {
        match s.as_str() {
            "SRAM" => Technology::Sram,
            "STT-RAM" | "STTRAM" => Technology::SttRam,
            "DRAM" => Technology::Dram,
            _ => Technology::Other(s),
        }
    }
}

impl From<Technology> for String {
    fn from(t: Technology) -> String {
        match t {
            Technology::Sram => "SRAM".into(),
            Technology::SttRam => "STT-RAM".into(),
            Technology::Dram => "DRAM".into(),
            Technology::Other(s) => s,
        }
    }
}

/// How a cache handles stores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WritePolicy {
    /// Write-back with write-allocate.
    WriteBack,
    /// Write-through with no write-allocate.
    WriteThrough,
}

/// Geometry of a cache module.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheGeometry {
    pub line_size_bytes: u64,
    pub associativity: u64,
    pub write_policy: WritePolicy,
}

/// One memory module: a cache, a scratchpad or the main memory.
///
/// Units are fixed: bytes, nanoseconds, picojoules, milliwatts, mm^2.
/// For caches, `read_energy_pj` is the per-access probe energy (hit or miss
/// alike); refill traffic is charged at the level that serves it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryModuleSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<MemoryKind>,
    pub technology: Technology,
    pub capacity_bytes: u64,
    pub area_mm2: Exact,
    pub read_latency_ns: Exact,
    pub write_latency_ns: Exact,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub miss_latency_ns: Option<Exact>,
    pub read_energy_pj: Exact,
    pub write_energy_pj: Exact,
    pub leakage_mw: Exact,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_geometry: Option<CacheGeometry>,
}

impl MemoryModuleSpec {
    pub fn kind(&self) -> MemoryKind {
        self.kind.expect("kind is set on validated modules")
    }

    pub fn geometry(&self) -> &CacheGeometry {
        self.cache_geometry
            .as_ref()
            .expect("validated caches carry a geometry")
    }

    fn invariant_err(&self, what: impl Into<String>) -> Error {
        Error::Invariant {
            module: self.name.clone(),
            invariant: what.into(),
        }
    }

    /// Checks the per-module invariants and stamps `kind`.
    fn validate(&mut self, kind: MemoryKind) -> Result<()> {
        if let Some(declared) = self.kind {
            if declared != kind {
                return Err(self.invariant_err(format!(
                    "declared kind {declared:?} does not match its pool section ({kind:?})"
                )));
            }
        }
        self.kind = Some(kind);

        if self.name.is_empty() {
            return Err(self.invariant_err("name must be non-empty"));
        }
        if self.capacity_bytes == 0 {
            return Err(self.invariant_err("capacity_bytes must be positive"));
        }
        for (field, value) in [
            ("area_mm2", &self.area_mm2),
            ("read_latency_ns", &self.read_latency_ns),
            ("write_latency_ns", &self.write_latency_ns),
            ("read_energy_pj", &self.read_energy_pj),
            ("write_energy_pj", &self.write_energy_pj),
            ("leakage_mw", &self.leakage_mw),
        ] {
            if value.is_negative() {
                return Err(self.invariant_err(format!("{field} must be non-negative")));
            }
        }
        if let Some(miss) = &self.miss_latency_ns {
            if miss.is_negative() {
                return Err(self.invariant_err("miss_latency_ns must be non-negative"));
            }
        }

        match kind {
            MemoryKind::Cache => {
                let geom = self
                    .cache_geometry
                    .as_ref()
                    .ok_or_else(|| self.invariant_err("caches require cache_geometry"))?;
                if !geom.line_size_bytes.is_power_of_two() {
                    return Err(
                        self.invariant_err("cache_geometry.line_size_bytes must be a power of two")
                    );
                }
                if geom.associativity == 0 {
                    return Err(self.invariant_err("cache_geometry.associativity must be >= 1"));
                }
                let way_bytes = geom
                    .line_size_bytes
                    .checked_mul(geom.associativity)
                    .ok_or_else(|| self.invariant_err("line_size_bytes * associativity overflows"))?;
                if !self.capacity_bytes.is_multiple_of(way_bytes) {
                    return Err(self.invariant_err(format!(
                        "capacity_bytes ({}) must be divisible by line_size_bytes * associativity ({})",
                        self.capacity_bytes, way_bytes
                    )));
                }
                if self.miss_latency_ns.is_none() {
                    return Err(self.invariant_err("caches require miss_latency_ns"));
                }
            }
            MemoryKind::Scratchpad | MemoryKind::MainMemory => {
                if self.miss_latency_ns.is_some() {
                    return Err(
                        self.invariant_err("miss_latency_ns is meaningful only for caches")
                    );
                }
                if self.cache_geometry.is_some() {
                    return Err(self.invariant_err("cache_geometry is meaningful only for caches"));
                }
            }
        }
        Ok(())
    }
}

fn default_physical_address_bits() -> u32 {
    48
}

/// The CPU-visible memories of one machine configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryPool {
    #[serde(
        default = "default_physical_address_bits",
        skip_serializing_if = "is_default_bits"
    )]
    pub physical_address_bits: u32,
    pub main_memory: MemoryModuleSpec,
    #[serde(default)]
    pub caches: Vec<MemoryModuleSpec>,
    #[serde(default)]
    pub scratchpads: Vec<MemoryModuleSpec>,
}

fn is_default_bits(bits: &u32) -> bool {
    *bits == default_physical_address_bits()
}

impl MemoryPool {
    /// Validates all module and pool invariants; stamps module kinds.
    pub fn validate(&mut self) -> Result<()> {
        if self.physical_address_bits == 0 || self.physical_address_bits > 64 {
            return Err(Error::Schema(
                "physical_address_bits must be in 1..=64".into(),
            ));
        }
        self.main_memory.validate(MemoryKind::MainMemory)?;
        for cache in &mut self.caches {
            cache.validate(MemoryKind::Cache)?;
        }
        for spm in &mut self.scratchpads {
            spm.validate(MemoryKind::Scratchpad)?;
        }

        let mut names = BTreeSet::new();
        for module in self.modules() {
            if !names.insert(module.name.as_str()) {
                return Err(Error::Invariant {
                    module: module.name.clone(),
                    invariant: "module names must be unique within the pool".into(),
                });
            }
        }
        Ok(())
    }

    /// All modules: main memory, then caches (L1 first), then scratchpads.
    pub fn modules(&self) -> impl Iterator<Item = &MemoryModuleSpec> {
        std::iter::once(&self.main_memory)
            .chain(self.caches.iter())
            .chain(self.scratchpads.iter())
    }

    /// Line size seen by the classifier: the first-level cache's, if any.
    pub fn l1_line_size(&self) -> Option<u64> {
        self.caches.first().map(|c| c.geometry().line_size_bytes)
    }
}

/// Parses and validates a pool document (JSON).
pub fn load_pool(document: &str) -> Result<MemoryPool> {
    let mut pool: MemoryPool =
        serde_json::from_str(document).map_err(|e| Error::Schema(e.to_string()))?;
    pool.validate()?;
    Ok(pool)
}

/// Serializes a pool back to its document form.
pub fn pool_to_json(pool: &MemoryPool) -> Result<String> {
    let mut out = serde_json::to_string_pretty(pool)?;
    out.push('\n');
    Ok(out)
}

/// Picks the candidate whose die area is closest to the reference's,
/// relative to the reference area. Candidates whose relative gap exceeds
/// `tolerance` are rejected. Ties prefer larger capacity, then smaller name.
pub fn area_equivalent<'a>(
    reference: &MemoryModuleSpec,
    candidates: &'a [MemoryModuleSpec],
    tolerance: &Exact,
) -> Result<&'a MemoryModuleSpec> {
    if candidates.is_empty() {
        return Err(Error::Schema("area_equivalent: no candidates".into()));
    }
    if tolerance <= &Exact::zero() || tolerance > &Exact::one() {
        return Err(Error::Schema(
            "area_equivalent: tolerance must be in (0, 1]".into(),
        ));
    }
    if reference.area_mm2.is_zero() {
        return Err(Error::Invariant {
            module: reference.name.clone(),
            invariant: "area_equivalent reference must have a positive area".into(),
        });
    }

    let gap = |c: &MemoryModuleSpec| (&c.area_mm2 - &reference.area_mm2).abs() / &reference.area_mm2;
    let best = candidates
        .iter()
        .min_by(|a, b| {
            gap(a)
                .cmp(&gap(b))
                .then(b.capacity_bytes.cmp(&a.capacity_bytes))
                .then(a.name.cmp(&b.name))
        })
        .expect("candidates checked non-empty");

    let best_gap = gap(best);
    if best_gap > *tolerance {
        return Err(Error::NoAreaEquivalent(Box::new(
            crate::error::NoAreaEquivalent {
                reference: reference.name.clone(),
                reference_area: reference.area_mm2.to_string(),
                tolerance: tolerance.to_string(),
                closest: best.name.clone(),
                closest_area: best.area_mm2.to_string(),
                gap: best_gap.to_fixed_decimal(4),
            },
        )));
    }
    Ok(best)
}

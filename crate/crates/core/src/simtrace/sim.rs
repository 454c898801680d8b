//! The trace-driven hierarchy simulator.
//!
//! Addresses inside a scratchpad range go straight to that scratchpad with
//! its fixed latency. Everything else enters the cache chain at L1 and
//! walks toward main memory: a miss probes the level (miss latency), the
//! next level serves the refill, and the installed line may evict a dirty
//! victim, which becomes a write arriving at the next level. Timing is
//! in-order and additive, so the total reproduces exactly from the
//! per-level counters.

use std::collections::BTreeMap;

use super::cache::CacheSim;
use super::{Trace, TraceRecord};
use crate::energy::{AddressRange, CacheActivity, MainMemoryActivity};
use crate::error::{Error, Result};
use crate::exact::Exact;
use crate::memspec::{MemoryPool, WritePolicy};
use crate::workload::{AccessCounts, AccessMode};

/// Event counters of one cache level.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CacheCounters {
    /// Read accesses arriving at this level (demand or refill).
    pub reads: u64,
    /// Write accesses arriving at this level (demand or write-back).
    pub writes: u64,
    pub read_hits: u64,
    pub write_hits: u64,
    pub read_misses: u64,
    pub write_misses: u64,
    /// Dirty victims this level pushed to the next.
    pub writebacks: u64,
}

impl CacheCounters {
    pub fn hits(&self) -> u64 {
        self.read_hits + self.write_hits
    }

    pub fn misses(&self) -> u64 {
        self.read_misses + self.write_misses
    }

    pub fn accesses(&self) -> u64 {
        self.reads + self.writes
    }
}

/// Event counters of one scratchpad.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SpmCounters {
    pub reads: u64,
    pub writes: u64,
}

/// Event counters of main memory.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MmCounters {
    pub reads: u64,
    pub writes: u64,
}

/// Demand accesses of one variable, by destination space.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct VarCounters {
    pub spm_reads: u64,
    pub spm_writes: u64,
    pub mm_reads: u64,
    pub mm_writes: u64,
}

/// Everything the simulator observed in one run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimStats {
    /// Parallel to the pool's cache list.
    pub caches: Vec<CacheCounters>,
    /// Parallel to the pool's scratchpad list.
    pub spms: Vec<SpmCounters>,
    pub main_memory: MmCounters,
    pub per_variable: BTreeMap<String, VarCounters>,
    /// Accumulated memory-access latency.
    pub t_exec_ns: Exact,
}

impl SimStats {
    /// Per-level activity in the form the energy accounting consumes.
    pub fn cache_activity(&self) -> Vec<CacheActivity> {
        self.caches
            .iter()
            .map(|c| CacheActivity {
                reads: c.reads,
                writes: c.writes,
                misses: c.misses(),
            })
            .collect()
    }

    pub fn mm_activity(&self) -> MainMemoryActivity {
        MainMemoryActivity {
            reads: self.main_memory.reads,
            writes: self.main_memory.writes,
        }
    }

    /// Bookkeeping identities: every arrival hits or misses, and each
    /// level's misses and write-backs are exactly the next level's reads
    /// and writes (checked for all-write-back chains).
    pub fn check_conservation(&self, pool: &MemoryPool) -> Result<()> {
        let fail = |what: String| Err(Error::Simulation(format!("count conservation: {what}")));
        for (level, c) in self.caches.iter().enumerate() {
            if c.hits() + c.misses() != c.accesses() {
                return fail(format!(
                    "level {level}: hits {} + misses {} != accesses {}",
                    c.hits(),
                    c.misses(),
                    c.accesses()
                ));
            }
        }
        let all_write_back = pool
            .caches
            .iter()
            .all(|c| c.geometry().write_policy == WritePolicy::WriteBack);
        if all_write_back {
            for level in 0..self.caches.len() {
                let here = &self.caches[level];
                let (next_reads, next_writes) = match self.caches.get(level + 1) {
                    Some(next) => (next.reads, next.writes),
                    None => (self.main_memory.reads, self.main_memory.writes),
                };
                if next_reads != here.misses() {
                    return fail(format!(
                        "level {level}: {} misses but {next_reads} next-level reads",
                        here.misses()
                    ));
                }
                if next_writes != here.writebacks {
                    return fail(format!(
                        "level {level}: {} write-backs but {next_writes} next-level writes",
                        here.writebacks
                    ));
                }
            }
        }
        Ok(())
    }

    /// Per-variable demand totals (scratchpad + cached space).
    pub fn demand_counts(&self) -> BTreeMap<String, AccessCounts> {
        self.per_variable
            .iter()
            .map(|(name, v)| {
                (
                    name.clone(),
                    AccessCounts {
                        reads: v.spm_reads + v.mm_reads,
                        writes: v.spm_writes + v.mm_writes,
                    },
                )
            })
            .collect()
    }
}

/// Streaming simulator; feed it records, then `finish()`.
#[derive(Debug)]
pub struct Simulator<'p> {
    pool: &'p MemoryPool,
    spm_ranges: Vec<AddressRange>,
    caches: Vec<CacheSim>,
    cache_counters: Vec<CacheCounters>,
    spm_counters: Vec<SpmCounters>,
    mm: MmCounters,
    var_counters: Vec<VarCounters>,
    variables: Vec<String>,
    line_size: Option<u64>,
}

impl<'p> Simulator<'p> {
    pub fn new(
        pool: &'p MemoryPool,
        spm_ranges: &[AddressRange],
        variables: Vec<String>,
    ) -> Result<Self> {
        if spm_ranges.len() != pool.scratchpads.len() {
            return Err(Error::Simulation(format!(
                "{} scratchpad ranges for {} scratchpads",
                spm_ranges.len(),
                pool.scratchpads.len()
            )));
        }
        for range in spm_ranges {
            if range.start < pool.main_memory.capacity_bytes {
                return Err(Error::Simulation(format!(
                    "scratchpad range {range:?} overlaps main memory"
                )));
            }
        }
        // Refills are one-to-one with misses only when every level tracks
        // the same line size; mixed-line hierarchies are not modeled.
        let mut line_size = None;
        for cache in &pool.caches {
            let line = cache.geometry().line_size_bytes;
            match line_size {
                None => line_size = Some(line),
                Some(existing) if existing != line => {
                    return Err(Error::Simulation(format!(
                        "cache line sizes differ ({existing} vs {line} bytes); uniform lines required"
                    )));
                }
                Some(_) => {}
            }
        }
        let var_counters = vec![VarCounters::default(); variables.len()];
        Ok(Simulator {
            pool,
            spm_ranges: spm_ranges.to_vec(),
            caches: pool.caches.iter().map(CacheSim::new).collect(),
            cache_counters: vec![CacheCounters::default(); pool.caches.len()],
            spm_counters: vec![SpmCounters::default(); pool.scratchpads.len()],
            mm: MmCounters::default(),
            var_counters,
            variables,
            line_size,
        })
    }

    pub fn access(&mut self, record: &TraceRecord) -> Result<()> {
        let var = self
            .var_counters
            .get_mut(record.variable as usize)
            .ok_or_else(|| {
                Error::Simulation(format!(
                    "record references variable index {} of {}",
                    record.variable,
                    self.variables.len()
                ))
            })?;
        let end = record
            .address
            .checked_add(record.size_bytes as u64)
            .ok_or(Error::AddressUnmapped {
                address: record.address,
                size: record.size_bytes,
            })?;
        let write = record.mode == AccessMode::Write;

        // Scratchpad ranges are checked first; they sit above main memory.
        if let Some(i) = self
            .spm_ranges
            .iter()
            .position(|r| r.contains(record.address))
        {
            if end > self.spm_ranges[i].end_exclusive {
                return Err(Error::AddressUnmapped {
                    address: record.address,
                    size: record.size_bytes,
                });
            }
            if write {
                self.spm_counters[i].writes += 1;
                var.spm_writes += 1;
            } else {
                self.spm_counters[i].reads += 1;
                var.spm_reads += 1;
            }
            return Ok(());
        }

        if end > self.pool.main_memory.capacity_bytes {
            return Err(Error::AddressUnmapped {
                address: record.address,
                size: record.size_bytes,
            });
        }
        if write {
            var.mm_writes += 1;
        } else {
            var.mm_reads += 1;
        }
        if let Some(line) = self.line_size {
            if record.address / line != (end - 1) / line {
                return Err(Error::Simulation(format!(
                    "record at {:#x} (size {}) straddles a {line}-byte cache line",
                    record.address, record.size_bytes
                )));
            }
        }
        self.cache_access(0, record.address, write);
        Ok(())
    }

    fn cache_access(&mut self, level: usize, addr: u64, write: bool) {
        if level == self.caches.len() {
            if write {
                self.mm.writes += 1;
            } else {
                self.mm.reads += 1;
            }
            return;
        }
        let policy = self.pool.caches[level].geometry().write_policy;
        let counters = &mut self.cache_counters[level];
        if write {
            counters.writes += 1;
        } else {
            counters.reads += 1;
        }
        let hit = self.caches[level].lookup(addr);
        match (hit, write) {
            (true, false) => self.cache_counters[level].read_hits += 1,
            (true, true) => {
                self.cache_counters[level].write_hits += 1;
                match policy {
                    WritePolicy::WriteBack => self.caches[level].set_dirty(addr),
                    WritePolicy::WriteThrough => self.cache_access(level + 1, addr, true),
                }
            }
            (false, false) => {
                self.cache_counters[level].read_misses += 1;
                self.cache_access(level + 1, addr, false);
                self.install(level, addr);
            }
            (false, true) => {
                self.cache_counters[level].write_misses += 1;
                match policy {
                    WritePolicy::WriteBack => {
                        // Write-allocate: refill, then dirty the line.
                        self.cache_access(level + 1, addr, false);
                        self.install(level, addr);
                        self.caches[level].set_dirty(addr);
                    }
                    // No allocation on write-through write misses.
                    WritePolicy::WriteThrough => self.cache_access(level + 1, addr, true),
                }
            }
        }
    }

    fn install(&mut self, level: usize, addr: u64) {
        if let Some(victim) = self.caches[level].install(addr) {
            self.cache_counters[level].writebacks += 1;
            self.cache_access(level + 1, victim, true);
        }
    }

    /// Computes the latency total and packages the statistics.
    pub fn finish(self) -> SimStats {
        let mut t = Exact::zero();
        for (spec, c) in self.pool.caches.iter().zip(&self.cache_counters) {
            // Write-back write misses still pay the write latency once the
            // line arrives, so every arriving write is charged it. Under
            // write-through only write hits touch the array.
            let charged_writes = match spec.geometry().write_policy {
                WritePolicy::WriteBack => c.writes,
                WritePolicy::WriteThrough => c.write_hits,
            };
            t += Exact::from(c.read_hits) * &spec.read_latency_ns
                + Exact::from(charged_writes) * &spec.write_latency_ns
                + Exact::from(c.misses()) * spec.miss_latency_ns.as_ref().expect("validated");
        }
        let mm = &self.pool.main_memory;
        t += Exact::from(self.mm.reads) * &mm.read_latency_ns
            + Exact::from(self.mm.writes) * &mm.write_latency_ns;
        for (spec, s) in self.pool.scratchpads.iter().zip(&self.spm_counters) {
            t += Exact::from(s.reads) * &spec.read_latency_ns
                + Exact::from(s.writes) * &spec.write_latency_ns;
        }

        SimStats {
            caches: self.cache_counters,
            spms: self.spm_counters,
            main_memory: self.mm,
            per_variable: self
                .variables
                .into_iter()
                .zip(self.var_counters)
                .collect(),
            t_exec_ns: t,
        }
    }
}

/// Runs a whole trace through a fresh simulator.
pub fn simulate(trace: &Trace, pool: &MemoryPool, spm_ranges: &[AddressRange]) -> Result<SimStats> {
    let mut sim = Simulator::new(pool, spm_ranges, trace.variables.clone())?;
    for record in &trace.records {
        sim.access(record)?;
    }
    let stats = sim.finish();
    debug_assert!(stats.check_conservation(pool).is_ok());
    Ok(stats)
}

/// One variable's static-vs-simulated count comparison.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Discrepancy {
    pub variable: String,
    pub static_reads: u64,
    pub static_writes: u64,
    pub simulated_reads: u64,
    pub simulated_writes: u64,
}

impl Discrepancy {
    pub fn is_zero(&self) -> bool {
        self.static_reads == self.simulated_reads && self.static_writes == self.simulated_writes
    }

    /// Relative count difference, against the static side (floor 1).
    pub fn relative(&self) -> Exact {
        let rel = |a: u64, b: u64| {
            Exact::from(a.abs_diff(b)) / Exact::from(a.max(1))
        };
        let reads = rel(self.static_reads, self.simulated_reads);
        let writes = rel(self.static_writes, self.simulated_writes);
        reads.max(writes)
    }
}

/// Per-variable comparison of static counts against simulated totals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrossCheck {
    pub rows: Vec<Discrepancy>,
}

impl CrossCheck {
    pub fn all_zero(&self) -> bool {
        self.rows.iter().all(Discrepancy::is_zero)
    }

    pub fn max_relative(&self) -> Exact {
        self.rows
            .iter()
            .map(Discrepancy::relative)
            .max()
            .unwrap_or_else(Exact::zero)
    }
}

/// Compares the static model's counts with what the simulator saw.
/// Discrepancies are reported, never thrown.
pub fn cross_check(
    static_counts: &BTreeMap<String, AccessCounts>,
    stats: &SimStats,
) -> CrossCheck {
    let simulated = stats.demand_counts();
    let names: std::collections::BTreeSet<&String> =
        static_counts.keys().chain(simulated.keys()).collect();
    let rows = names
        .into_iter()
        .map(|name| {
            let st = static_counts.get(name).copied().unwrap_or_default();
            let sim = simulated.get(name).copied().unwrap_or_default();
            Discrepancy {
                variable: name.clone(),
                static_reads: st.reads,
                static_writes: st.writes,
                simulated_reads: sim.reads,
                simulated_writes: sim.writes,
            }
        })
        .collect();
    CrossCheck { rows }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::assign_spm_ranges;

    fn pool_with_cache(capacity: u64, ways: u64, policy: &str) -> MemoryPool {
        crate::memspec::load_pool(&format!(
            r#"{{
                "main_memory": {{"name": "mm", "technology": "DRAM", "capacity_bytes": 1073741824,
                    "area_mm2": 0, "read_latency_ns": 50, "write_latency_ns": 60,
                    "read_energy_pj": 10000, "write_energy_pj": 11000, "leakage_mw": 0}},
                "caches": [{{"name": "l1", "technology": "SRAM", "capacity_bytes": {capacity},
                    "area_mm2": 0, "read_latency_ns": 2, "write_latency_ns": 3,
                    "miss_latency_ns": 0.5, "read_energy_pj": 72, "write_energy_pj": 25,
                    "leakage_mw": 336.330,
                    "cache_geometry": {{"line_size_bytes": 64, "associativity": {ways},
                                        "write_policy": "{policy}"}}}}]
            }}"#
        ))
        .unwrap()
    }

    fn read_trace(addresses: &[u64]) -> Trace {
        Trace {
            variables: vec!["A".into()],
            records: addresses
                .iter()
                .map(|&address| TraceRecord {
                    address,
                    size_bytes: 8,
                    mode: AccessMode::Read,
                    variable: 0,
                })
                .collect(),
        }
    }

    #[test]
    fn streaming_reads_miss_once_per_line() {
        let pool = pool_with_cache(262144, 8, "write_back");
        let addresses: Vec<u64> = (0..1024u64).map(|i| i * 8).collect();
        let stats = simulate(&read_trace(&addresses), &pool, &[]).unwrap();
        let c = &stats.caches[0];
        assert_eq!(c.misses(), 128);
        assert_eq!(c.hits(), 896);
        assert_eq!(stats.main_memory.reads, 128);
        assert_eq!(stats.main_memory.writes, 0);
        stats.check_conservation(&pool).unwrap();
    }

    #[test]
    fn repeated_access_misses_once() {
        let pool = pool_with_cache(262144, 8, "write_back");
        let addresses = vec![0x40; 100];
        let stats = simulate(&read_trace(&addresses), &pool, &[]).unwrap();
        assert_eq!(stats.caches[0].misses(), 1);
        assert_eq!(stats.caches[0].hits(), 99);
    }

    #[test]
    fn lru_adversary_and_friend() {
        // Single-set cache: 4 ways of 64-byte lines.
        let pool = pool_with_cache(256, 4, "write_back");
        let line = |i: u64| i * 256;

        // Cycling over associativity + 1 lines: zero hits, ever.
        let addresses: Vec<u64> = (0..10).flat_map(|_| (0..5).map(line)).collect();
        let stats = simulate(&read_trace(&addresses), &pool, &[]).unwrap();
        assert_eq!(stats.caches[0].hits(), 0);
        assert_eq!(stats.caches[0].misses(), 50);

        // Cycling over exactly associativity lines: misses only on pass 1.
        let addresses: Vec<u64> = (0..10).flat_map(|_| (0..4).map(line)).collect();
        let stats = simulate(&read_trace(&addresses), &pool, &[]).unwrap();
        assert_eq!(stats.caches[0].misses(), 4);
        assert_eq!(stats.caches[0].hits(), 36);
    }

    #[test]
    fn spm_routed_trace_leaves_caches_cold() {
        let mut pool = pool_with_cache(262144, 8, "write_back");
        pool.scratchpads = crate::memspec::load_pool(
            r#"{
                "main_memory": {"name": "mm2", "technology": "DRAM", "capacity_bytes": 1073741824,
                    "area_mm2": 0, "read_latency_ns": 50, "write_latency_ns": 60,
                    "read_energy_pj": 1, "write_energy_pj": 1, "leakage_mw": 0},
                "scratchpads": [{"name": "spm", "technology": "STT-RAM", "capacity_bytes": 1048576,
                    "area_mm2": 0, "read_latency_ns": 2.221, "write_latency_ns": 5.686,
                    "read_energy_pj": 195.251, "write_energy_pj": 205.024, "leakage_mw": 84.809}]
            }"#,
        )
        .unwrap()
        .scratchpads;
        pool.validate().unwrap();
        let ranges = assign_spm_ranges(pool.main_memory.capacity_bytes, &[1048576], 48).unwrap();

        let base = ranges[0].start;
        let mut trace = read_trace(&[]);
        for i in 0..100u64 {
            trace.records.push(TraceRecord {
                address: base + i * 8,
                size_bytes: 8,
                mode: if i % 2 == 0 { AccessMode::Read } else { AccessMode::Write },
                variable: 0,
            });
        }
        let stats = simulate(&trace, &pool, &ranges).unwrap();
        assert_eq!(stats.caches[0], CacheCounters::default());
        assert_eq!(stats.main_memory, MmCounters::default());
        assert_eq!(stats.spms[0], SpmCounters { reads: 50, writes: 50 });
        assert_eq!(
            stats.per_variable["A"],
            VarCounters { spm_reads: 50, spm_writes: 50, mm_reads: 0, mm_writes: 0 }
        );
        // t = 50 * 2.221 + 50 * 5.686
        assert_eq!(stats.t_exec_ns, Exact::parse("395.35").unwrap());
    }

    #[test]
    fn write_back_traffic_reaches_mm_only_on_eviction() {
        // Single-set, 2-way cache; three distinct lines of writes.
        let pool = pool_with_cache(128, 2, "write_back");
        let mut trace = read_trace(&[]);
        for addr in [0u64, 128, 256] {
            trace.records.push(TraceRecord {
                address: addr,
                size_bytes: 8,
                mode: AccessMode::Write,
                variable: 0,
            });
        }
        let stats = simulate(&trace, &pool, &[]).unwrap();
        let c = &stats.caches[0];
        assert_eq!(c.write_misses, 3);
        // Third write evicts the dirty line 0 -> one write-back.
        assert_eq!(c.writebacks, 1);
        assert_eq!(stats.main_memory.reads, 3); // three refills
        assert_eq!(stats.main_memory.writes, 1); // one write-back
        stats.check_conservation(&pool).unwrap();

        // Latency re-summation: reads pay nothing here (no read hits);
        // 3 writes * 3 ns + 3 misses * 0.5 ns + mm: 3 reads * 50 + 1 write * 60.
        let expected = Exact::parse("9").unwrap()
            + Exact::parse("1.5").unwrap()
            + Exact::from(150u64)
            + Exact::from(60u64);
        assert_eq!(stats.t_exec_ns, expected);
    }

    #[test]
    fn write_through_forwards_every_write() {
        let pool = pool_with_cache(256, 4, "write_through");
        let mut trace = read_trace(&[0, 0]);
        trace.records.push(TraceRecord {
            address: 0,
            size_bytes: 8,
            mode: AccessMode::Write,
            variable: 0,
        });
        trace.records.push(TraceRecord {
            address: 512,
            size_bytes: 8,
            mode: AccessMode::Write,
            variable: 0,
        });
        let stats = simulate(&trace, &pool, &[]).unwrap();
        let c = &stats.caches[0];
        // Read miss + read hit; write hit on the resident line; write miss
        // on the absent one (no allocation).
        assert_eq!((c.read_misses, c.read_hits), (1, 1));
        assert_eq!((c.write_hits, c.write_misses), (1, 1));
        assert_eq!(c.writebacks, 0);
        // Both writes reach main memory; one refill read.
        assert_eq!(stats.main_memory, MmCounters { reads: 1, writes: 2 });
    }

    #[test]
    fn unmapped_addresses_are_rejected() {
        let pool = pool_with_cache(256, 4, "write_back");
        let trace = read_trace(&[1 << 40]);
        assert!(matches!(
            simulate(&trace, &pool, &[]).unwrap_err(),
            Error::AddressUnmapped { .. }
        ));
    }

    #[test]
    fn cross_check_reports_matches_and_mismatches() {
        let pool = pool_with_cache(262144, 8, "write_back");
        let addresses: Vec<u64> = (0..16u64).map(|i| i * 8).collect();
        let stats = simulate(&read_trace(&addresses), &pool, &[]).unwrap();

        let mut counts = BTreeMap::new();
        counts.insert("A".to_string(), AccessCounts { reads: 16, writes: 0 });
        let check = cross_check(&counts, &stats);
        assert!(check.all_zero());
        assert_eq!(check.max_relative(), Exact::zero());

        counts.insert("A".to_string(), AccessCounts { reads: 32, writes: 0 });
        let check = cross_check(&counts, &stats);
        assert!(!check.all_zero());
        assert_eq!(check.max_relative(), Exact::from_ratio(1, 2));
    }

    #[test]
    fn mixed_line_sizes_are_rejected() {
        let mut pool = pool_with_cache(262144, 8, "write_back");
        let mut l2 = pool.caches[0].clone();
        l2.name = "l2".into();
        l2.cache_geometry.as_mut().unwrap().line_size_bytes = 128;
        pool.caches.push(l2);
        pool.validate().unwrap();
        let err = Simulator::new(&pool, &[], vec!["A".into()]).unwrap_err();
        assert!(err.to_string().contains("line sizes differ"), "{err}");
    }
}

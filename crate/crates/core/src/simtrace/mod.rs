//! Trace generation and trace-driven memory hierarchy simulation.
//!
//! Loop nests are unrolled into a stream of sized, addressed accesses which
//! flow either straight into a scratchpad (scratchpad-range addresses never
//! touch the caches) or through the cache hierarchy down to main memory.
//! The simulator counts per-module and per-variable events and accumulates
//! an in-order, one-access-at-a-time latency total which cross-checks the
//! static model the placement solver consumed.

mod cache;
mod layout;
mod sim;
mod trace;

pub use cache::CacheSim;
pub use layout::{assign_variable_addresses, Route, VarLayout, VarPlacement};
pub use sim::{cross_check, simulate, CrossCheck, Discrepancy, SimStats, Simulator};
pub use trace::{generate_trace, visit_accesses};

use crate::error::{Error, Result};
use crate::workload::AccessMode;

/// One memory access of the trace.
///
/// `variable` indexes the trace's name table. Accesses routed through the
/// caches never straddle a cache line; the generator splits them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceRecord {
    pub address: u64,
    pub size_bytes: u32,
    pub mode: AccessMode,
    pub variable: u32,
}

/// A memory access trace with its variable name table.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Trace {
    pub variables: Vec<String>,
    pub records: Vec<TraceRecord>,
}

impl Trace {
    /// Text dump, one record per line: `R|W <hex address> <size> <variable>`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            let mode = match r.mode {
                AccessMode::Read => 'R',
                AccessMode::Write => 'W',
            };
            out.push_str(&format!(
                "{mode} {:#018x} {} {}\n",
                r.address, r.size_bytes, self.variables[r.variable as usize]
            ));
        }
        out
    }

    /// Parses the `dump` format.
    pub fn load(text: &str) -> Result<Trace> {
        let mut trace = Trace::default();
        let mut index_of = std::collections::BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let bad = |what: &str| {
                Error::Simulation(format!("trace line {}: {what}: {line:?}", lineno + 1))
            };
            let mut fields = line.split_whitespace();
            let mode = match fields.next() {
                Some("R") => AccessMode::Read,
                Some("W") => AccessMode::Write,
                _ => return Err(bad("expected R or W")),
            };
            let addr_text = fields.next().ok_or_else(|| bad("missing address"))?;
            let address = u64::from_str_radix(addr_text.trim_start_matches("0x"), 16)
                .map_err(|_| bad("bad address"))?;
            let size_bytes = fields
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad("bad size"))?;
            let name = fields.next().ok_or_else(|| bad("missing variable"))?;
            if fields.next().is_some() {
                return Err(bad("trailing fields"));
            }
            let variable = *index_of.entry(name.to_owned()).or_insert_with(|| {
                trace.variables.push(name.to_owned());
                (trace.variables.len() - 1) as u32
            });
            trace.records.push(TraceRecord {
                address,
                size_bytes,
                mode,
                variable,
            });
        }
        Ok(trace)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dump_and_load_round_trip() {
        let trace = Trace {
            variables: vec!["A".into(), "b2".into()],
            records: vec![
                TraceRecord { address: 0x40000000, size_bytes: 8, mode: AccessMode::Read, variable: 0 },
                TraceRecord { address: 0x10, size_bytes: 4, mode: AccessMode::Write, variable: 1 },
            ],
        };
        let dumped = trace.dump();
        assert_eq!(
            dumped,
            "R 0x0000000040000000 8 A\nW 0x0000000000000010 4 b2\n"
        );
        assert_eq!(Trace::load(&dumped).unwrap(), trace);
    }

    #[test]
    fn load_rejects_malformed_lines() {
        assert!(Trace::load("X 0x10 8 A").is_err());
        assert!(Trace::load("R zz 8 A").is_err());
        assert!(Trace::load("R 0x10 8").is_err());
        assert!(Trace::load("R 0x10 8 A extra").is_err());
    }
}

//! Data placement for heterogeneous on-chip memories.
//!
//! Given a pool of memory modules (caches, scratchpads, main memory) and a
//! workload of affine loop nests, this crate decides which variables should
//! live in main memory behind the caches and which should be copied into a
//! scratchpad, by solving a 0-1 program that minimizes dynamic access
//! energy subject to scratchpad capacities, with cache-friendly variables
//! pinned to main memory. The decision model is validated by a trace-driven
//! hierarchy simulator and an exact energy accounting.
//!
//! Modules:
//! - [`memspec`]: memory module parameters, pools, area-equivalent pairing.
//! - [`workload`]: variables, loop nests, subscript parsing, friendliness
//!   classification and static access counting.
//! - [`allocator`]: the placement model, branch-and-bound solver and the
//!   exhaustive cross-check solver.
//! - [`energy`]: static/dynamic energy accounting and scratchpad address
//!   ranges.
//! - [`simtrace`]: trace generation and the LRU cache hierarchy simulator.
//! - [`pipeline`], [`report`]: composition and report/CSV rendering.

pub mod allocator;
pub mod energy;
pub mod error;
pub mod exact;
pub mod memspec;
pub mod pipeline;
pub mod report;
pub mod simtrace;
pub mod workload;

pub use allocator::{AllocationModel, AllocationPlan, PlacementTarget};
pub use energy::{AddressRange, EnergyReport};
pub use error::{Error, ErrorCategory, Result};
pub use exact::Exact;
pub use memspec::{MemoryModuleSpec, MemoryPool};
pub use simtrace::{SimStats, Trace, TraceRecord};
pub use workload::{VariableProfile, Workload, WorkloadSpec};

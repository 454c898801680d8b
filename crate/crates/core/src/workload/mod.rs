//! Program variables, affine loop nests and access-pattern analysis.
//!
//! A workload declares array variables (shape, element size, optional
//! initial contents for index arrays) and a list of loop nests whose bodies
//! access those arrays. From this the crate derives, per variable, the
//! static read/write counts and a cache-friendliness flag: an access stream
//! is friendly when consecutive innermost iterations can touch the same
//! cache line, so a hardware LRU cache already exploits its locality.

mod classify;
mod counts;
mod doc;
mod expr;

pub use classify::{
    access_stride_bytes, classify_access, classify_site, variable_cf, workload_cf, AccessClass,
};
pub use counts::{count_accesses, workload_counts, AccessCounts};
pub use doc::{parse_workload, VariableDecl, WorkloadSpec};
pub use expr::{parse_access, parse_linear, AccessExpr, IndexExpr, LinearExpr};

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Manual override for the cache-friendliness of a variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CacheFriendliness {
    /// Derive from the access expressions.
    #[default]
    Auto,
    Friendly,
    Unfriendly,
}

/// One program variable with a concrete shape.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableProfile {
    pub name: String,
    pub element_size_bytes: u64,
    /// Row-major array shape.
    pub dims: Vec<u64>,
    pub element_count: u64,
    pub reads_override: Option<u64>,
    pub writes_override: Option<u64>,
    pub cache_friendly: CacheFriendliness,
    /// Initial element values, required when the variable is read as an
    /// indirect subscript.
    pub init: Option<Vec<i64>>,
}

impl VariableProfile {
    pub fn footprint_bytes(&self) -> u64 {
        self.element_size_bytes
            .checked_mul(self.element_count)
            .expect("footprint checked at resolve time")
    }
}

/// Whether an access site reads or writes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AccessMode {
    Read,
    Write,
}

/// One loop iterator with affine bounds `[lower, upper)` over outer
/// iterators and named integer parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IteratorSpec {
    pub name: String,
    pub lower: LinearExpr,
    pub upper: LinearExpr,
}

/// One access site in a nest body.
///
/// `depth` is the number of enclosing iterators: a site at depth `d`
/// executes once per iteration of the outermost `d` loops, before the
/// `d+1`-th loop runs. The default is the innermost position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccessSite {
    pub expr: AccessExpr,
    pub mode: AccessMode,
    pub depth: usize,
}

/// An affine loop nest: one iterator chain plus its body accesses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoopNest {
    pub iterators: Vec<IteratorSpec>,
    pub accesses: Vec<AccessSite>,
}

impl LoopNest {
    /// Sites referencing `variable`, with their positions.
    pub fn sites_of<'a>(&'a self, variable: &'a str) -> impl Iterator<Item = &'a AccessSite> {
        self.accesses.iter().filter(move |s| s.expr.base == variable)
    }
}

/// A fully resolved workload: concrete variable shapes plus the nests.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Workload {
    pub variables: Vec<VariableProfile>,
    pub nests: Vec<LoopNest>,
}

impl Workload {
    pub fn variable(&self, name: &str) -> Result<&VariableProfile> {
        self.variables
            .iter()
            .find(|v| v.name == name)
            .ok_or_else(|| Error::Workload(format!("undeclared variable {name:?}")))
    }
}

/// Integer parameter bindings (e.g. the problem size `N`).
pub type Bindings = BTreeMap<String, i64>;

//! Crate-wide error type.

use thiserror::Error;

/// Broad error categories, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// Malformed or inconsistent input documents.
    Config,
    /// A defect in the placement solver (it must never report infeasible).
    Solver,
    /// Trace generation or simulation failures.
    Simulation,
}

/// Details of a failed area-equivalent search.
#[derive(Debug, Clone, Error)]
#[error("no candidate within area tolerance {tolerance} of {reference} ({reference_area} mm2); closest is {closest} ({closest_area} mm2, gap {gap})")]
pub struct NoAreaEquivalent {
    pub reference: String,
    pub reference_area: String,
    pub tolerance: String,
    pub closest: String,
    pub closest_area: String,
    pub gap: String,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("config: {0}")]
    Schema(String),

    #[error("module {module}: {invariant}")]
    Invariant { module: String, invariant: String },

    #[error(transparent)]
    NoAreaEquivalent(Box<NoAreaEquivalent>),

    #[error("workload: syntax error at byte {pos} in {text:?}: {message}")]
    Syntax {
        text: String,
        pos: usize,
        message: String,
    },

    #[error("workload: unknown variable {name:?} at byte {pos} in {text:?}")]
    UnknownVariable {
        text: String,
        pos: usize,
        name: String,
    },

    #[error("workload: non-affine index at byte {pos} in {text:?}: {message}")]
    NonAffine {
        text: String,
        pos: usize,
        message: String,
    },

    #[error("workload: access {access:?} has {got} subscripts but {variable:?} has {expected} dimensions")]
    DimensionMismatch {
        access: String,
        variable: String,
        got: usize,
        expected: usize,
    },

    #[error("workload: {0}")]
    Workload(String),

    #[error("workload: parameter {name:?} is not bound")]
    UnboundParameter { name: String },

    #[error("workload: iterator {iterator:?} has negative trip count (lower {lower}, upper {upper})")]
    NegativeTripCount {
        iterator: String,
        lower: i64,
        upper: i64,
    },

    #[error("workload: cannot classify {variable:?}: no access expressions and no override")]
    CannotClassify { variable: String },

    #[error("arithmetic overflow while {0}")]
    Overflow(String),

    #[error("allocation: {0}")]
    Allocation(String),

    #[error("solver defect: {0}")]
    SolverDefect(String),

    #[error("energy: {0}")]
    Energy(String),

    #[error("address space: {0}")]
    AddressSpace(String),

    #[error("simulation: {0}")]
    Simulation(String),

    #[error("trace: address {address:#x} (size {size}) maps to no module")]
    AddressUnmapped { address: u64, size: u32 },

    #[error("trace: {variable}[{index}] is out of bounds (dimension size {bound})")]
    IndexOutOfBounds {
        variable: String,
        index: i64,
        bound: u64,
    },

    #[error("trace: indirect subscript reads {variable:?}, which has no initial contents")]
    UninitializedIndexArray { variable: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        use Error::*;
        match self {
            SolverDefect(_) => ErrorCategory::Solver,
            Simulation(_) | AddressUnmapped { .. } | IndexOutOfBounds { .. }
            | UninitializedIndexArray { .. } => ErrorCategory::Simulation,
            _ => ErrorCategory::Config,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

//! Workload documents: the JSON surface for variables and loop nests.

use std::collections::BTreeSet;

use serde::Deserialize;

use super::expr::{parse_access, parse_linear, AccessExpr, IndexExpr, LinearExpr};
use super::{
    AccessMode, AccessSite, Bindings, CacheFriendliness, IteratorSpec, LoopNest, VariableProfile,
    Workload,
};
use crate::error::{Error, Result};

/// A declared variable whose shape may still depend on parameters.
#[derive(Debug, Clone)]
pub struct VariableDecl {
    pub name: String,
    pub element_size_bytes: u64,
    pub dims: Vec<LinearExpr>,
    pub reads_override: Option<u64>,
    pub writes_override: Option<u64>,
    pub cache_friendly: CacheFriendliness,
    pub init: Option<Vec<i64>>,
}

/// A parsed and validated workload, shapes not yet bound.
#[derive(Debug, Clone)]
pub struct WorkloadSpec {
    pub variables: Vec<VariableDecl>,
    pub nests: Vec<LoopNest>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WorkloadDoc {
    variables: Vec<VariableDoc>,
    #[serde(default)]
    loop_nests: Vec<NestDoc>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct VariableDoc {
    name: String,
    element_size_bytes: u64,
    dims: Vec<DimDoc>,
    #[serde(default)]
    reads: Option<u64>,
    #[serde(default)]
    writes: Option<u64>,
    #[serde(default)]
    cache_friendly: CacheFriendliness,
    #[serde(default)]
    init: Option<Vec<i64>>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum DimDoc {
    Literal(u64),
    Expr(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NestDoc {
    iterators: Vec<IteratorDoc>,
    accesses: Vec<AccessDoc>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct IteratorDoc {
    name: String,
    lower: BoundDoc,
    upper: BoundDoc,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum BoundDoc {
    Literal(i64),
    Expr(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AccessDoc {
    expr: String,
    mode: AccessMode,
    #[serde(default)]
    depth: Option<usize>,
}

/// Parses and validates a workload document (JSON).
pub fn parse_workload(document: &str) -> Result<WorkloadSpec> {
    let doc: WorkloadDoc =
        serde_json::from_str(document).map_err(|e| Error::Schema(e.to_string()))?;

    let mut names = BTreeSet::new();
    let mut variables = Vec::with_capacity(doc.variables.len());
    for v in doc.variables {
        if !names.insert(v.name.clone()) {
            return Err(Error::Workload(format!("duplicate variable {:?}", v.name)));
        }
        if v.element_size_bytes == 0 {
            return Err(Error::Workload(format!(
                "variable {:?}: element_size_bytes must be positive",
                v.name
            )));
        }
        if v.dims.is_empty() {
            return Err(Error::Workload(format!(
                "variable {:?}: dims must be non-empty",
                v.name
            )));
        }
        let dims = v
            .dims
            .into_iter()
            .map(|d| match d {
                DimDoc::Literal(n) => Ok(LinearExpr::constant(i64::try_from(n).map_err(|_| {
                    Error::Workload(format!("variable {:?}: dimension too large", v.name))
                })?)),
                DimDoc::Expr(s) => parse_linear(&s),
            })
            .collect::<Result<Vec<_>>>()?;
        variables.push(VariableDecl {
            name: v.name,
            element_size_bytes: v.element_size_bytes,
            dims,
            reads_override: v.reads,
            writes_override: v.writes,
            cache_friendly: v.cache_friendly,
            init: v.init,
        });
    }

    let known: BTreeSet<String> = variables.iter().map(|v| v.name.clone()).collect();
    let dim_count = |name: &str| {
        variables
            .iter()
            .find(|v| v.name == name)
            .map(|v| v.dims.len())
    };

    let mut nests = Vec::with_capacity(doc.loop_nests.len());
    for (nest_index, nest) in doc.loop_nests.into_iter().enumerate() {
        let mut iterator_names = BTreeSet::new();
        let mut iterators = Vec::with_capacity(nest.iterators.len());
        for it in nest.iterators {
            if !iterator_names.insert(it.name.clone()) {
                return Err(Error::Workload(format!(
                    "nest {nest_index}: duplicate iterator {:?}",
                    it.name
                )));
            }
            if known.contains(&it.name) {
                return Err(Error::Workload(format!(
                    "nest {nest_index}: iterator {:?} collides with a variable name",
                    it.name
                )));
            }
            let bound = |b: BoundDoc| match b {
                BoundDoc::Literal(n) => Ok(LinearExpr::constant(n)),
                BoundDoc::Expr(s) => parse_linear(&s),
            };
            iterators.push(IteratorSpec {
                name: it.name,
                lower: bound(it.lower)?,
                upper: bound(it.upper)?,
            });
        }

        let mut accesses = Vec::with_capacity(nest.accesses.len());
        for access in nest.accesses {
            let expr = parse_access(&access.expr, &known)?;
            check_dims(&expr, &dim_count)?;
            let depth = access.depth.unwrap_or(iterators.len());
            if depth > iterators.len() {
                return Err(Error::Workload(format!(
                    "nest {nest_index}: access {:?} has depth {depth}, but the nest has {} iterators",
                    access.expr,
                    iterators.len()
                )));
            }
            accesses.push(AccessSite {
                expr,
                mode: access.mode,
                depth,
            });
        }
        nests.push(LoopNest {
            iterators,
            accesses,
        });
    }

    Ok(WorkloadSpec { variables, nests })
}

/// Validates subscript arity against declared shapes, through indirections.
fn check_dims(expr: &AccessExpr, dim_count: &impl Fn(&str) -> Option<usize>) -> Result<()> {
    let expected = dim_count(&expr.base).ok_or_else(|| Error::Workload(format!(
        "undeclared variable {:?}",
        expr.base
    )))?;
    if expr.indices.len() != expected {
        return Err(Error::DimensionMismatch {
            access: expr.to_string(),
            variable: expr.base.clone(),
            got: expr.indices.len(),
            expected,
        });
    }
    for index in &expr.indices {
        if let IndexExpr::Indirect(inner) = index {
            check_dims(inner, dim_count)?;
        }
    }
    Ok(())
}

impl WorkloadSpec {
    /// Binds parameters, producing concrete variable shapes.
    pub fn resolve(&self, bindings: &Bindings) -> Result<Workload> {
        let mut variables = Vec::with_capacity(self.variables.len());
        for decl in &self.variables {
            let mut dims = Vec::with_capacity(decl.dims.len());
            let mut element_count: u64 = 1;
            for dim in &decl.dims {
                let value = dim.eval(bindings)?;
                if value <= 0 {
                    return Err(Error::Workload(format!(
                        "variable {:?}: dimension {dim} resolves to {value}, must be positive",
                        decl.name
                    )));
                }
                let value = value as u64;
                element_count = element_count.checked_mul(value).ok_or_else(|| {
                    Error::Overflow(format!("element count of {:?}", decl.name))
                })?;
                dims.push(value);
            }
            element_count
                .checked_mul(decl.element_size_bytes)
                .ok_or_else(|| Error::Overflow(format!("footprint of {:?}", decl.name)))?;
            if let Some(init) = &decl.init {
                if init.len() as u64 != element_count {
                    return Err(Error::Workload(format!(
                        "variable {:?}: init has {} values, expected {element_count}",
                        decl.name,
                        init.len()
                    )));
                }
            }
            variables.push(VariableProfile {
                name: decl.name.clone(),
                element_size_bytes: decl.element_size_bytes,
                dims,
                element_count,
                reads_override: decl.reads_override,
                writes_override: decl.writes_override,
                cache_friendly: decl.cache_friendly,
                init: decl.init.clone(),
            });
        }
        Ok(Workload {
            variables,
            nests: self.nests.clone(),
        })
    }
}

//! Unrolls loop nests into an address trace.
//!
//! Accesses are emitted in program order: per iteration of a level, its own
//! sites run in listed order before the next-deeper loop. Indirect
//! subscripts read the referenced array's declared initial contents (the
//! trace models address streams, not computed values, so stores do not
//! update that image, and subscript resolution itself emits no records).
//! Cache-routed accesses are split on the smallest cache line so no record
//! straddles a line.

use std::collections::BTreeMap;

use super::layout::{Route, VarLayout};
use super::{Trace, TraceRecord};
use crate::error::{Error, Result};
use crate::workload::{
    AccessExpr, Bindings, IndexExpr, LoopNest, VariableProfile, Workload,
};

/// Streams the workload's accesses into `visit` without materializing a
/// trace.
pub fn visit_accesses(
    workload: &Workload,
    layout: &VarLayout,
    bindings: &Bindings,
    mut visit: impl FnMut(TraceRecord) -> Result<()>,
) -> Result<()> {
    let mut gen = Generator::new(workload, layout)?;
    for nest in &workload.nests {
        let mut env = bindings.clone();
        gen.walk(nest, 0, &mut env, &mut visit)?;
    }
    Ok(())
}

/// Materializes the whole trace.
pub fn generate_trace(
    workload: &Workload,
    layout: &VarLayout,
    bindings: &Bindings,
) -> Result<Trace> {
    let mut trace = Trace {
        variables: workload.variables.iter().map(|v| v.name.clone()).collect(),
        records: Vec::new(),
    };
    visit_accesses(workload, layout, bindings, |record| {
        trace.records.push(record);
        Ok(())
    })?;
    Ok(trace)
}

struct VarInfo<'w> {
    profile: &'w VariableProfile,
    base: u64,
    cached: bool,
    /// Row-major element weight per dimension.
    weights: Vec<u64>,
}

struct Generator<'w> {
    vars: BTreeMap<&'w str, (u32, VarInfo<'w>)>,
    split_line: Option<u64>,
}

impl<'w> Generator<'w> {
    fn new(workload: &'w Workload, layout: &'w VarLayout) -> Result<Self> {
        let mut vars = BTreeMap::new();
        for (index, var) in workload.variables.iter().enumerate() {
            let placement = layout.placement_of(&var.name).ok_or_else(|| {
                Error::Simulation(format!("no layout for variable {:?}", var.name))
            })?;
            let mut weights = vec![1u64; var.dims.len()];
            for d in (0..var.dims.len().saturating_sub(1)).rev() {
                weights[d] = weights[d + 1]
                    .checked_mul(var.dims[d + 1])
                    .ok_or_else(|| Error::Overflow(format!("shape of {:?}", var.name)))?;
            }
            vars.insert(
                var.name.as_str(),
                (
                    index as u32,
                    VarInfo {
                        profile: var,
                        base: placement.base_address,
                        cached: placement.route == Route::MainMemory,
                        weights,
                    },
                ),
            );
        }
        Ok(Generator {
            vars,
            split_line: layout.split_line_bytes,
        })
    }

    fn walk(
        &mut self,
        nest: &LoopNest,
        level: usize,
        env: &mut Bindings,
        visit: &mut impl FnMut(TraceRecord) -> Result<()>,
    ) -> Result<()> {
        for site in &nest.accesses {
            if site.depth == level {
                self.emit(&site.expr, site.mode, env, visit)?;
            }
        }
        if level == nest.iterators.len() {
            return Ok(());
        }
        let it = &nest.iterators[level];
        let lower = it.lower.eval(env)?;
        let upper = it.upper.eval(env)?;
        if upper < lower {
            return Err(Error::NegativeTripCount {
                iterator: it.name.clone(),
                lower,
                upper,
            });
        }
        let shadowed = env.get(&it.name).copied();
        for value in lower..upper {
            env.insert(it.name.clone(), value);
            self.walk(nest, level + 1, env, visit)?;
        }
        match shadowed {
            Some(v) => env.insert(it.name.clone(), v),
            None => env.remove(&it.name),
        };
        Ok(())
    }

    fn emit(
        &mut self,
        expr: &AccessExpr,
        mode: crate::workload::AccessMode,
        env: &Bindings,
        visit: &mut impl FnMut(TraceRecord) -> Result<()>,
    ) -> Result<()> {
        let (variable, offset) = self.element_of(expr, env)?;
        let (index, info) = &self.vars[variable];
        let elem = info.profile.element_size_bytes;
        let address = info.base + offset * elem;

        // Split cache-routed accesses on line boundaries; scratchpads have
        // no line granularity, so their accesses stay whole.
        let split = match (info.cached, self.split_line) {
            (true, Some(line)) => line,
            _ => u64::MAX,
        };
        let mut cursor = address;
        let end = address + elem;
        while cursor < end {
            let line_end = (cursor / split + 1) * split;
            let chunk = line_end.min(end) - cursor;
            visit(TraceRecord {
                address: cursor,
                size_bytes: chunk as u32,
                mode,
                variable: *index,
            })?;
            cursor += chunk;
        }
        Ok(())
    }

    /// Resolves an access to (variable name, flat element offset).
    fn element_of<'e>(&self, expr: &'e AccessExpr, env: &Bindings) -> Result<(&'e str, u64)> {
        let (_, info) = self
            .vars
            .get(expr.base.as_str())
            .ok_or_else(|| Error::Simulation(format!("no layout for {:?}", expr.base)))?;
        debug_assert_eq!(expr.indices.len(), info.profile.dims.len());

        let mut offset: u64 = 0;
        for (d, index) in expr.indices.iter().enumerate() {
            let value = match index {
                IndexExpr::Affine(lin) => lin.eval(env)?,
                IndexExpr::Indirect(inner) => self.indirect_value(inner, env)?,
            };
            let bound = info.profile.dims[d];
            if value < 0 || value as u64 >= bound {
                return Err(Error::IndexOutOfBounds {
                    variable: expr.base.clone(),
                    index: value,
                    bound,
                });
            }
            offset += value as u64 * info.weights[d];
        }
        Ok((expr.base.as_str(), offset))
    }

    /// Value of an indirect subscript: the referenced element of the inner
    /// array's initial contents.
    fn indirect_value(&self, inner: &AccessExpr, env: &Bindings) -> Result<i64> {
        let (name, offset) = self.element_of(inner, env)?;
        let (_, info) = &self.vars[name];
        let image = info
            .profile
            .init
            .as_ref()
            .ok_or_else(|| Error::UninitializedIndexArray {
                variable: name.to_owned(),
            })?;
        Ok(image[offset as usize])
    }
}

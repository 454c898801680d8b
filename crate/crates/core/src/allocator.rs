//! Energy-minimizing 0-1 placement of variables across memories.
//!
//! Every variable goes either to main memory (cost `h`, unlimited) or to one
//! scratchpad `i` (cost `f_i`, subject to that scratchpad's capacity).
//! Cache-friendly variables are forced to main memory so the cache keeps
//! serving them. The objective is the total dynamic access energy.
//!
//! `solve_exact` is a depth-first branch-and-bound over per-variable choices
//! with an admissible bound (each unplaced variable charged its cheapest
//! statically-feasible target). `solve_exhaustive` enumerates every
//! placement and exists as an independent cross-check for small instances.
//! Costs are compared exactly: scaled to common-denominator integers when
//! they fit machine words, otherwise as rationals. No floating point.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::Exact;
use crate::memspec::MemoryPool;
use crate::workload::AccessCounts;

/// Per-variable inputs to model building.
#[derive(Debug, Clone)]
pub struct VariableDemand {
    pub name: String,
    pub footprint_bytes: u64,
    pub counts: AccessCounts,
    pub cache_friendly: bool,
}

/// Cost row of one variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableCosts {
    pub name: String,
    pub footprint_bytes: u64,
    pub cache_friendly: bool,
    /// Dynamic energy if placed in main memory.
    pub h_cost_pj: Exact,
    /// Dynamic energy if placed in scratchpad `i`, one entry per scratchpad.
    pub f_costs_pj: Vec<Exact>,
}

/// The placement problem: cost rows plus scratchpad capacities.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AllocationModel {
    pub variables: Vec<VariableCosts>,
    pub spm_capacities_bytes: Vec<u64>,
}

impl AllocationModel {
    pub fn validate(&self) -> Result<()> {
        for var in &self.variables {
            if var.footprint_bytes == 0 {
                return Err(Error::Allocation(format!(
                    "variable {:?} has zero footprint",
                    var.name
                )));
            }
            if var.f_costs_pj.len() != self.spm_capacities_bytes.len() {
                return Err(Error::Allocation(format!(
                    "variable {:?} has {} scratchpad costs, expected {}",
                    var.name,
                    var.f_costs_pj.len(),
                    self.spm_capacities_bytes.len()
                )));
            }
            if var.h_cost_pj.is_negative() || var.f_costs_pj.iter().any(Exact::is_negative) {
                return Err(Error::Allocation(format!(
                    "variable {:?} has a negative cost",
                    var.name
                )));
            }
        }
        Ok(())
    }

    fn cost_of(&self, index: usize, target: PlacementTarget) -> &Exact {
        let var = &self.variables[index];
        match target {
            PlacementTarget::MainMemory => &var.h_cost_pj,
            PlacementTarget::Scratchpad(i) => &var.f_costs_pj[i],
        }
    }
}

/// Where one variable lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "target", content = "spm_index")]
pub enum PlacementTarget {
    MainMemory,
    /// Index into the pool's scratchpad list.
    Scratchpad(usize),
}

impl PlacementTarget {
    /// Tie-break rank: main memory before scratchpads, lower index first.
    fn rank(self) -> usize {
        match self {
            PlacementTarget::MainMemory => 0,
            PlacementTarget::Scratchpad(i) => i + 1,
        }
    }
}

/// What the solver proved about its answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveProof {
    Optimal,
    /// Unreachable by construction: the all-main-memory placement is always
    /// feasible. Returned by no code path; reporting it is a defect.
    Infeasible,
}

/// A solved placement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationPlan {
    pub objective_pj: Exact,
    pub proof: SolveProof,
    pub nodes_explored: u64,
    /// One entry per model variable, in declaration order.
    pub placements: Vec<Placement>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub variable: String,
    #[serde(flatten)]
    pub target: PlacementTarget,
}

impl AllocationPlan {
    pub fn target_of(&self, variable: &str) -> Option<PlacementTarget> {
        self.placements
            .iter()
            .find(|p| p.variable == variable)
            .map(|p| p.target)
    }

    /// Checks the three plan invariants and the objective identity.
    pub fn check(&self, model: &AllocationModel) -> Result<()> {
        if self.placements.len() != model.variables.len() {
            return Err(Error::Allocation(format!(
                "plan covers {} variables, model has {}",
                self.placements.len(),
                model.variables.len()
            )));
        }
        let mut used = vec![0u64; model.spm_capacities_bytes.len()];
        let mut objective = Exact::zero();
        for (index, (placement, var)) in
            self.placements.iter().zip(&model.variables).enumerate()
        {
            if placement.variable != var.name {
                return Err(Error::Allocation(format!(
                    "plan entry {index} is {:?}, expected {:?}",
                    placement.variable, var.name
                )));
            }
            match placement.target {
                PlacementTarget::MainMemory => {}
                PlacementTarget::Scratchpad(i) => {
                    if var.cache_friendly {
                        return Err(Error::Allocation(format!(
                            "cache-friendly variable {:?} placed in a scratchpad",
                            var.name
                        )));
                    }
                    let slot = used.get_mut(i).ok_or_else(|| {
                        Error::Allocation(format!(
                            "variable {:?} placed in nonexistent scratchpad {i}",
                            var.name
                        ))
                    })?;
                    *slot += var.footprint_bytes;
                }
            }
            objective += model.cost_of(index, placement.target);
        }
        for (i, (&used, &cap)) in used.iter().zip(&model.spm_capacities_bytes).enumerate() {
            if used > cap {
                return Err(Error::Allocation(format!(
                    "scratchpad {i} overfilled: {used} > {cap} bytes"
                )));
            }
        }
        if objective != self.objective_pj {
            return Err(Error::Allocation(format!(
                "objective mismatch: plan says {}, placements sum to {}",
                self.objective_pj, objective
            )));
        }
        Ok(())
    }

    /// Plan document (JSON), stable field order.
    pub fn to_document(&self) -> Result<String> {
        let mut out = serde_json::to_string_pretty(self)?;
        out.push('\n');
        Ok(out)
    }

    pub fn from_document(document: &str) -> Result<Self> {
        serde_json::from_str(document).map_err(|e| Error::Schema(e.to_string()))
    }
}

/// Builds the cost model from per-variable demands and a pool.
///
/// `h = E_mm_read * reads + E_mm_write * writes`;
/// `f_i = E_spm_read(i) * reads + E_spm_write(i) * writes`.
pub fn build_model(demands: &[VariableDemand], pool: &MemoryPool) -> Result<AllocationModel> {
    let mm = &pool.main_memory;
    let variables = demands
        .iter()
        .map(|d| {
            let reads = Exact::from(d.counts.reads);
            let writes = Exact::from(d.counts.writes);
            let h = &reads * &mm.read_energy_pj + &writes * &mm.write_energy_pj;
            let f = pool
                .scratchpads
                .iter()
                .map(|spm| &reads * &spm.read_energy_pj + &writes * &spm.write_energy_pj)
                .collect();
            VariableCosts {
                name: d.name.clone(),
                footprint_bytes: d.footprint_bytes,
                cache_friendly: d.cache_friendly,
                h_cost_pj: h,
                f_costs_pj: f,
            }
        })
        .collect();
    let model = AllocationModel {
        variables,
        spm_capacities_bytes: pool.scratchpads.iter().map(|s| s.capacity_bytes).collect(),
    };
    model.validate()?;
    Ok(model)
}

/// Cost scalar the searches run on: common-denominator integers when they
/// fit, exact rationals otherwise.
trait CostScalar: Clone + Ord {
    fn zero() -> Self;
    fn plus(&self, other: &Self) -> Self;
}

impl CostScalar for u128 {
    fn zero() -> Self {
        0
    }
    fn plus(&self, other: &Self) -> Self {
        // scaled_costs guarantees the worst-case sum fits.
        self + other
    }
}

impl CostScalar for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn plus(&self, other: &Self) -> Self {
        self + other
    }
}

/// Per-variable cost table in search form.
struct SearchCosts<C> {
    /// `costs[v][rank]`, indexed by `PlacementTarget::rank`.
    by_rank: Vec<Vec<C>>,
}

fn scaled_costs(model: &AllocationModel) -> Option<SearchCosts<u128>> {
    let mut lcm = BigInt::from(1u32);
    let mut each = |c: &Exact| {
        lcm = lcm.lcm(c.denom());
    };
    for var in &model.variables {
        each(&var.h_cost_pj);
        var.f_costs_pj.iter().for_each(&mut each);
    }
    let mut by_rank = Vec::with_capacity(model.variables.len());
    let mut worst_sum = BigInt::from(0u32);
    for var in &model.variables {
        let mut row = Vec::with_capacity(1 + var.f_costs_pj.len());
        let mut row_max = BigInt::from(0u32);
        for cost in std::iter::once(&var.h_cost_pj).chain(&var.f_costs_pj) {
            let scaled = cost.numer() * (&lcm / cost.denom());
            row_max = row_max.max(scaled.clone());
            row.push(scaled.to_u128()?);
        }
        worst_sum += row_max;
        by_rank.push(row);
    }
    // Partial sums in the searches must never overflow.
    worst_sum.to_u128()?;
    Some(SearchCosts { by_rank })
}

fn rational_costs(model: &AllocationModel) -> SearchCosts<BigRational> {
    let by_rank = model
        .variables
        .iter()
        .map(|var| {
            std::iter::once(&var.h_cost_pj)
                .chain(&var.f_costs_pj)
                .map(|c| c.as_rational().clone())
                .collect()
        })
        .collect();
    SearchCosts { by_rank }
}

/// Candidate targets of each variable, cheapest first (rank breaks ties):
/// this order *is* the tie-breaking rule. Both solvers explore it
/// depth-first in declaration order and keep the first strict improvement,
/// so among equal-cost optima they return the same plan: each variable in
/// turn takes its cheapest target, preferring main memory, then the lowest
/// scratchpad index. Scratchpads the variable cannot fit even when empty
/// are dropped here; cache-friendly variables keep only main memory.
fn ordered_targets<C: CostScalar>(
    model: &AllocationModel,
    costs: &SearchCosts<C>,
) -> Vec<Vec<PlacementTarget>> {
    model
        .variables
        .iter()
        .enumerate()
        .map(|(v, var)| {
            let mut targets = vec![PlacementTarget::MainMemory];
            if !var.cache_friendly {
                for (i, &cap) in model.spm_capacities_bytes.iter().enumerate() {
                    if var.footprint_bytes <= cap {
                        targets.push(PlacementTarget::Scratchpad(i));
                    }
                }
            }
            targets.sort_by(|&a, &b| {
                costs.by_rank[v][a.rank()]
                    .cmp(&costs.by_rank[v][b.rank()])
                    .then(a.rank().cmp(&b.rank()))
            });
            targets
        })
        .collect()
}

struct SearchResult {
    targets: Vec<PlacementTarget>,
    nodes: u64,
}

/// Branch-and-bound over per-variable placements.
fn branch_and_bound<C: CostScalar>(
    model: &AllocationModel,
    costs: &SearchCosts<C>,
) -> SearchResult {
    let order = ordered_targets(model, costs);
    let n = model.variables.len();

    // Admissible bound: cheapest statically-feasible target per variable.
    let mut suffix_min = vec![C::zero(); n + 1];
    for v in (0..n).rev() {
        let cheapest = &costs.by_rank[v][order[v][0].rank()];
        suffix_min[v] = suffix_min[v + 1].plus(cheapest);
    }

    struct State<'m, C> {
        order: &'m [Vec<PlacementTarget>],
        costs: &'m SearchCosts<C>,
        footprints: Vec<u64>,
        suffix_min: Vec<C>,
        remaining: Vec<u64>,
        chosen: Vec<PlacementTarget>,
        best: Option<(C, Vec<PlacementTarget>)>,
        nodes: u64,
    }

    fn dfs<C: CostScalar>(s: &mut State<'_, C>, v: usize, acc: C) {
        s.nodes += 1;
        if let Some((best_cost, _)) = &s.best {
            if acc.plus(&s.suffix_min[v]) >= *best_cost {
                return;
            }
        }
        if v == s.order.len() {
            s.best = Some((acc, s.chosen.clone()));
            return;
        }
        for &target in &s.order[v] {
            let cost = acc.plus(&s.costs.by_rank[v][target.rank()]);
            match target {
                PlacementTarget::MainMemory => {
                    s.chosen.push(target);
                    dfs(s, v + 1, cost);
                    s.chosen.pop();
                }
                PlacementTarget::Scratchpad(i) => {
                    if s.footprints[v] <= s.remaining[i] {
                        s.remaining[i] -= s.footprints[v];
                        s.chosen.push(target);
                        dfs(s, v + 1, cost);
                        s.chosen.pop();
                        s.remaining[i] += s.footprints[v];
                    }
                }
            }
        }
    }

    let mut state = State {
        order: &order,
        costs,
        footprints: model.variables.iter().map(|v| v.footprint_bytes).collect(),
        suffix_min,
        remaining: model.spm_capacities_bytes.clone(),
        chosen: Vec::with_capacity(n),
        best: None,
        nodes: 0,
    };
    dfs(&mut state, 0, C::zero());
    let (_, targets) = state.best.expect("all-main-memory is always feasible");
    SearchResult {
        targets,
        nodes: state.nodes,
    }
}

/// Plain enumeration of every feasible placement. Independent of the
/// branch-and-bound path; shares only the candidate ordering that defines
/// tie-breaking.
fn enumerate_all<C: CostScalar>(model: &AllocationModel, costs: &SearchCosts<C>) -> SearchResult {
    let order = ordered_targets(model, costs);
    let n = model.variables.len();

    #[allow(clippy::too_many_arguments)]
    fn walk<C: CostScalar>(
        order: &[Vec<PlacementTarget>],
        costs: &SearchCosts<C>,
        footprints: &[u64],
        remaining: &mut Vec<u64>,
        chosen: &mut Vec<PlacementTarget>,
        best: &mut Option<(C, Vec<PlacementTarget>)>,
        nodes: &mut u64,
        v: usize,
        acc: C,
    ) {
        *nodes += 1;
        if v == order.len() {
            let better = match best {
                Some((cost, _)) => acc < *cost,
                None => true,
            };
            if better {
                *best = Some((acc, chosen.clone()));
            }
            return;
        }
        for &target in &order[v] {
            let cost = acc.plus(&costs.by_rank[v][target.rank()]);
            match target {
                PlacementTarget::MainMemory => {
                    chosen.push(target);
                    walk(order, costs, footprints, remaining, chosen, best, nodes, v + 1, cost);
                    chosen.pop();
                }
                PlacementTarget::Scratchpad(i) => {
                    if footprints[v] <= remaining[i] {
                        remaining[i] -= footprints[v];
                        chosen.push(target);
                        walk(order, costs, footprints, remaining, chosen, best, nodes, v + 1, cost);
                        chosen.pop();
                        remaining[i] += footprints[v];
                    }
                }
            }
        }
    }

    let footprints: Vec<u64> = model.variables.iter().map(|v| v.footprint_bytes).collect();
    let mut remaining = model.spm_capacities_bytes.clone();
    let mut chosen = Vec::with_capacity(n);
    let mut best = None;
    let mut nodes = 0;
    walk(
        &order,
        costs,
        &footprints,
        &mut remaining,
        &mut chosen,
        &mut best,
        &mut nodes,
        0,
        C::zero(),
    );
    let (_, targets) = best.expect("all-main-memory is always feasible");
    SearchResult { targets, nodes }
}

fn finish(model: &AllocationModel, result: SearchResult) -> Result<AllocationPlan> {
    let mut objective = Exact::zero();
    let placements = result
        .targets
        .iter()
        .enumerate()
        .map(|(v, &target)| {
            objective += model.cost_of(v, target);
            Placement {
                variable: model.variables[v].name.clone(),
                target,
            }
        })
        .collect();
    let plan = AllocationPlan {
        objective_pj: objective,
        proof: SolveProof::Optimal,
        nodes_explored: result.nodes,
        placements,
    };
    plan.check(model).map_err(|e| {
        Error::SolverDefect(format!("solution fails its own invariants: {e}"))
    })?;
    Ok(plan)
}

/// Finds the globally minimal placement by branch-and-bound.
pub fn solve_exact(model: &AllocationModel) -> Result<AllocationPlan> {
    model.validate()?;
    let result = match scaled_costs(model) {
        Some(costs) => branch_and_bound(model, &costs),
        None => branch_and_bound(model, &rational_costs(model)),
    };
    finish(model, result)
}

/// Enumerates all placements; cross-check oracle for small instances.
pub fn solve_exhaustive(model: &AllocationModel) -> Result<AllocationPlan> {
    model.validate()?;
    const MAX_VARIABLES: usize = 14;
    if model.variables.len() > MAX_VARIABLES {
        return Err(Error::Allocation(format!(
            "exhaustive enumeration capped at {MAX_VARIABLES} variables, got {}",
            model.variables.len()
        )));
    }
    let result = match scaled_costs(model) {
        Some(costs) => enumerate_all(model, &costs),
        None => enumerate_all(model, &rational_costs(model)),
    };
    finish(model, result)
}

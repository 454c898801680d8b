//! Subcommand implementations.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use spmopt_core::allocator::{AllocationPlan, PlacementTarget};
use spmopt_core::error::{Error, Result};
use spmopt_core::memspec::{load_pool, MemoryPool};
use spmopt_core::pipeline::{allocate as solve_allocation, energy_from_stats, run_single, simulate_plan};
use spmopt_core::report::{sweep_csv, sweep_long_csv, EnergyReportDoc, StatsDoc, SweepCell};
use spmopt_core::simtrace::{cross_check, generate_trace};
use spmopt_core::workload::{
    access_stride_bytes, classify_site, parse_workload, AccessClass, AccessMode, Bindings,
    CacheFriendliness, WorkloadSpec,
};

use crate::{
    AllocateArgs, ClassifyArgs, ReportArgs, ReportFormat, SimulateArgs, SweepArgs,
};

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| Error::Schema(format!("{}: {e}", path.display())))
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)
        .map_err(|e| Error::Schema(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?;
    Ok(path)
}

fn load_pool_file(path: &Path) -> Result<MemoryPool> {
    load_pool(&read_file(path)?)
        .map_err(|e| Error::Schema(format!("{}: {e}", path.display())))
}

fn load_workload_file(path: &Path) -> Result<WorkloadSpec> {
    parse_workload(&read_file(path)?)
        .map_err(|e| Error::Schema(format!("{}: {e}", path.display())))
}

fn parse_bindings(pairs: &[String]) -> Result<Bindings> {
    let mut bindings = Bindings::new();
    for pair in pairs {
        let (name, value) = pair.split_once('=').ok_or_else(|| {
            Error::Schema(format!("--bind expects NAME=INT, got {pair:?}"))
        })?;
        let value: i64 = value
            .trim()
            .parse()
            .map_err(|_| Error::Schema(format!("--bind {pair:?}: value is not an integer")))?;
        bindings.insert(name.trim().to_owned(), value);
    }
    Ok(bindings)
}

pub fn classify(args: ClassifyArgs) -> Result<()> {
    let pool = load_pool_file(&args.pool)?;
    let spec = load_workload_file(&args.workload)?;
    let bindings = parse_bindings(&args.bindings)?;
    let workload = spec.resolve(&bindings)?;
    let line = pool.l1_line_size();
    let cf = spmopt_core::workload::workload_cf(&workload, line)?;

    match line {
        Some(line) => println!(
            "{} variable(s), {} nest(s); cache line {line} B",
            workload.variables.len(),
            workload.nests.len()
        ),
        None => println!(
            "{} variable(s), {} nest(s); no cache in pool: nothing is forced to main memory",
            workload.variables.len(),
            workload.nests.len()
        ),
    }

    for var in &workload.variables {
        let origin = match var.cache_friendly {
            CacheFriendliness::Auto => "auto",
            CacheFriendliness::Friendly => "override friendly",
            CacheFriendliness::Unfriendly => "override unfriendly",
        };
        println!("{}: C={} ({origin})", var.name, if cf[&var.name] { 1 } else { 0 });
        let Some(line) = line else { continue };
        for (nest_index, nest) in workload.nests.iter().enumerate() {
            for site in nest.sites_of(&var.name) {
                let mode = match site.mode {
                    AccessMode::Read => "read",
                    AccessMode::Write => "write",
                };
                let verdict = match classify_site(site, var, nest, line)? {
                    AccessClass::Friendly => "friendly",
                    AccessClass::Unfriendly => "unfriendly",
                };
                let stride = if site.depth == 0 {
                    "single execution".to_string()
                } else {
                    let iterator = &nest.iterators[site.depth - 1].name;
                    match access_stride_bytes(&site.expr, var, iterator)? {
                        Some(bytes) => format!("stride {bytes} B"),
                        None => "indirect".to_string(),
                    }
                };
                println!(
                    "    {mode} {} [nest {nest_index}, depth {}]: {stride} -> {verdict}",
                    site.expr, site.depth
                );
            }
        }
    }
    Ok(())
}

pub fn allocate(args: AllocateArgs) -> Result<()> {
    let pool = load_pool_file(&args.pool)?;
    let spec = load_workload_file(&args.workload)?;
    let bindings = parse_bindings(&args.bindings)?;
    let workload = spec.resolve(&bindings)?;
    let allocation = solve_allocation(&pool, &workload, &bindings)?;
    let plan = &allocation.plan;

    let path = write_file(&args.out, "plan.json", &plan.to_document()?)?;
    let off_loaded = plan
        .placements
        .iter()
        .filter(|p| p.target != PlacementTarget::MainMemory)
        .count();
    println!(
        "placed {} variable(s), {off_loaded} in scratchpads; objective {} pJ ({} nodes)",
        allocation.model.variables.len(),
        plan.objective_pj.to_fixed_decimal(3),
        plan.nodes_explored
    );
    for p in &plan.placements {
        let target = match p.target {
            PlacementTarget::MainMemory => "main memory".to_string(),
            PlacementTarget::Scratchpad(i) => format!("scratchpad {}", pool.scratchpads[i].name),
        };
        println!("    {} -> {target}", p.variable);
    }
    println!("wrote {}", path.display());
    Ok(())
}

pub fn simulate(args: SimulateArgs) -> Result<()> {
    let pool = load_pool_file(&args.pool)?;
    let spec = load_workload_file(&args.workload)?;
    let bindings = parse_bindings(&args.bindings)?;
    let workload = spec.resolve(&bindings)?;
    let plan = AllocationPlan::from_document(&read_file(&args.plan)?)?;

    let (layout, stats) = simulate_plan(&pool, &workload, &plan, &bindings)?;
    let energy = energy_from_stats(&stats, &pool)?;
    let counts = spmopt_core::workload::workload_counts(&workload, &bindings)?;
    let cross = cross_check(&counts, &stats);

    let stats_path = write_file(&args.out, "stats.json", &StatsDoc::build(&stats, &pool, &cross).to_json()?)?;
    let energy_path = write_file(
        &args.out,
        "energy.json",
        &EnergyReportDoc::from_report(&energy).to_json()?,
    )?;
    if args.dump_trace {
        let trace = generate_trace(&workload, &layout, &bindings)?;
        write_file(&args.out, "trace.txt", &trace.dump())?;
    }

    println!(
        "t_mem {} ns, E_tot {} pJ (static {}, dynamic {})",
        energy.t_exec_ns.to_fixed_decimal(3),
        energy.e_total_pj.to_fixed_decimal(3),
        energy.e_static_pj.to_fixed_decimal(3),
        energy.e_dyn_pj.to_fixed_decimal(3),
    );
    for (spec, c) in pool.caches.iter().zip(&stats.caches) {
        println!(
            "    {}: {} accesses, {} hits, {} misses, {} write-backs",
            spec.name,
            c.accesses(),
            c.hits(),
            c.misses(),
            c.writebacks
        );
    }
    let mismatches = cross.rows.iter().filter(|r| !r.is_zero()).count();
    println!(
        "cross-check: {mismatches} variable(s) with count discrepancies (max relative {})",
        cross.max_relative().to_fixed_decimal(6)
    );
    println!("wrote {} and {}", stats_path.display(), energy_path.display());
    Ok(())
}

pub fn sweep(args: SweepArgs) -> Result<()> {
    let spec = load_workload_file(&args.workload)?;
    let mut configs = Vec::new();
    for entry in &args.configs {
        let (name, path) = entry.split_once('=').ok_or_else(|| {
            Error::Schema(format!("--config expects NAME=POOL_PATH, got {entry:?}"))
        })?;
        if configs.iter().any(|(n, _)| n == name) {
            return Err(Error::Schema(format!("duplicate configuration name {name:?}")));
        }
        configs.push((name.to_owned(), load_pool_file(Path::new(path))?));
    }
    if args.sizes.is_empty() {
        return Err(Error::Schema("--sizes must list at least one size".into()));
    }
    let baseline = match &args.baseline {
        Some(name) => name.clone(),
        None if configs.iter().any(|(n, _)| n == "cache_256kB") => "cache_256kB".to_owned(),
        None => {
            return Err(Error::Schema(
                "--baseline required (no configuration named cache_256kB to default to)".into(),
            ))
        }
    };
    if !configs.iter().any(|(n, _)| *n == baseline) {
        return Err(Error::Schema(format!(
            "baseline {baseline:?} is not among the configurations"
        )));
    }
    let base_bindings = parse_bindings(&args.bindings)?;

    // Cells are independent pipeline runs; evaluate them in parallel and
    // assemble in deterministic order.
    let mut cell_inputs = Vec::new();
    for (name, pool) in &configs {
        for &size in &args.sizes {
            cell_inputs.push((name.clone(), pool, size));
        }
    }
    let cells: Result<Vec<SweepCell>> = cell_inputs
        .par_iter()
        .map(|(name, pool, size)| {
            let mut bindings = base_bindings.clone();
            bindings.insert(args.size_param.clone(), *size);
            let run = run_single(pool, &spec, &bindings).map_err(|e| {
                Error::Schema(format!("configuration {name:?} at {}={}: {e}", args.size_param, size))
            })?;
            Ok(SweepCell {
                config: name.clone(),
                size: *size,
                report: run.energy,
            })
        })
        .collect();
    let cells = cells?;

    let csv = sweep_csv(&cells, &baseline)?;
    let path = write_file(&args.out, "sweep.csv", &csv)?;
    println!(
        "{} cells ({} configurations x {} sizes), baseline {baseline}",
        cells.len(),
        configs.len(),
        args.sizes.len()
    );
    println!("wrote {}", path.display());
    if args.long {
        let long = sweep_long_csv(&cells, &baseline)?;
        let path = write_file(&args.out, "sweep_long.csv", &long)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

pub fn report(args: ReportArgs) -> Result<()> {
    let doc = EnergyReportDoc::from_json(&read_file(&args.input)?)?;
    let rows = [
        ("t_mem_ns", &doc.t_mem_ns),
        ("e_static_pj", &doc.e_static_pj),
        ("e_spm_pj", &doc.e_spm_pj),
        ("e_cache_dyn_pj", &doc.e_cache_dyn_pj),
        ("e_mm_pj", &doc.e_mm_pj),
        ("e_dyn_pj", &doc.e_dyn_pj),
        ("e_tot_pj", &doc.e_tot_pj),
    ];
    match args.format {
        ReportFormat::Doc => {
            for (name, value) in rows {
                println!("{name:<16} {value:>20}");
            }
        }
        ReportFormat::Csv => {
            let header: Vec<&str> = rows.iter().map(|(n, _)| *n).collect();
            let values: Vec<&str> = rows.iter().map(|(_, v)| v.as_str()).collect();
            println!("{}", header.join(","));
            println!("{}", values.join(","));
        }
    }
    Ok(())
}

//! Report documents and baseline-normalized sweep tables.
//!
//! Raw quantities render with three decimals, normalized ratios with six;
//! both come from exact rationals, so output is byte-stable across runs.

use serde::{Deserialize, Serialize};

use crate::energy::EnergyReport;
use crate::error::{Error, Result};
use crate::exact::Exact;
use crate::memspec::MemoryPool;
use crate::simtrace::{CrossCheck, SimStats};

/// Energy report document. The time column is labeled `t_mem_ns`: it covers
/// memory-access latency only, not whole-program execution time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnergyReportDoc {
    pub t_mem_ns: String,
    pub e_static_pj: String,
    pub e_spm_pj: String,
    pub e_cache_dyn_pj: String,
    pub e_mm_pj: String,
    pub e_dyn_pj: String,
    pub e_tot_pj: String,
}

impl EnergyReportDoc {
    pub fn from_report(report: &EnergyReport) -> Self {
        let f = |v: &Exact| v.to_fixed_decimal(3);
        EnergyReportDoc {
            t_mem_ns: f(&report.t_exec_ns),
            e_static_pj: f(&report.e_static_pj),
            e_spm_pj: f(&report.e_spm_pj),
            e_cache_dyn_pj: f(&report.e_cache_dyn_pj),
            e_mm_pj: f(&report.e_mm_pj),
            e_dyn_pj: f(&report.e_dyn_pj),
            e_tot_pj: f(&report.e_total_pj),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut out = serde_json::to_string_pretty(self)?;
        out.push('\n');
        Ok(out)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))
    }
}

/// Simulation statistics document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatsDoc {
    pub t_mem_ns: String,
    pub caches: Vec<CacheStatsRow>,
    pub scratchpads: Vec<SpmStatsRow>,
    pub main_memory: MmStatsRow,
    pub variables: Vec<VarStatsRow>,
    pub cross_check: Vec<CrossCheckRow>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheStatsRow {
    pub name: String,
    pub reads: u64,
    pub writes: u64,
    pub hits: u64,
    pub misses: u64,
    pub writebacks: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpmStatsRow {
    pub name: String,
    pub reads: u64,
    pub writes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MmStatsRow {
    pub name: String,
    pub reads: u64,
    pub writes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VarStatsRow {
    pub name: String,
    pub spm_reads: u64,
    pub spm_writes: u64,
    pub mm_reads: u64,
    pub mm_writes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossCheckRow {
    pub variable: String,
    pub static_reads: u64,
    pub static_writes: u64,
    pub simulated_reads: u64,
    pub simulated_writes: u64,
}

impl StatsDoc {
    pub fn build(stats: &SimStats, pool: &MemoryPool, cross: &CrossCheck) -> Self {
        StatsDoc {
            t_mem_ns: stats.t_exec_ns.to_fixed_decimal(3),
            caches: pool
                .caches
                .iter()
                .zip(&stats.caches)
                .map(|(spec, c)| CacheStatsRow {
                    name: spec.name.clone(),
                    reads: c.reads,
                    writes: c.writes,
                    hits: c.hits(),
                    misses: c.misses(),
                    writebacks: c.writebacks,
                })
                .collect(),
            scratchpads: pool
                .scratchpads
                .iter()
                .zip(&stats.spms)
                .map(|(spec, s)| SpmStatsRow {
                    name: spec.name.clone(),
                    reads: s.reads,
                    writes: s.writes,
                })
                .collect(),
            main_memory: MmStatsRow {
                name: pool.main_memory.name.clone(),
                reads: stats.main_memory.reads,
                writes: stats.main_memory.writes,
            },
            variables: stats
                .per_variable
                .iter()
                .map(|(name, v)| VarStatsRow {
                    name: name.clone(),
                    spm_reads: v.spm_reads,
                    spm_writes: v.spm_writes,
                    mm_reads: v.mm_reads,
                    mm_writes: v.mm_writes,
                })
                .collect(),
            cross_check: cross
                .rows
                .iter()
                .map(|d| CrossCheckRow {
                    variable: d.variable.clone(),
                    static_reads: d.static_reads,
                    static_writes: d.static_writes,
                    simulated_reads: d.simulated_reads,
                    simulated_writes: d.simulated_writes,
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut out = serde_json::to_string_pretty(self)?;
        out.push('\n');
        Ok(out)
    }
}

/// One sweep cell: a configuration evaluated at one problem size.
#[derive(Debug, Clone)]
pub struct SweepCell {
    pub config: String,
    pub size: i64,
    pub report: EnergyReport,
}

/// The four metrics the sweep tables carry.
const SWEEP_METRICS: [&str; 4] = ["t_mem_ns", "e_static_pj", "e_dyn_pj", "e_tot_pj"];

fn metric_value(report: &EnergyReport, metric: &str) -> Exact {
    match metric {
        "t_mem_ns" => report.t_exec_ns.clone(),
        "e_static_pj" => report.e_static_pj.clone(),
        "e_dyn_pj" => report.e_dyn_pj.clone(),
        "e_tot_pj" => report.e_total_pj.clone(),
        _ => unreachable!("unknown metric {metric}"),
    }
}

fn normalized(raw: &Exact, baseline: &Exact, what: &str, size: i64) -> Result<Exact> {
    if baseline.is_zero() {
        if raw.is_zero() {
            return Ok(Exact::one());
        }
        return Err(Error::Schema(format!(
            "sweep: baseline {what} is zero at size {size}, cannot normalize"
        )));
    }
    Ok(raw / baseline)
}

fn sorted_with_baselines<'c>(
    cells: &'c [SweepCell],
    baseline: &str,
) -> Result<Vec<(&'c SweepCell, &'c SweepCell)>> {
    if !cells.iter().any(|c| c.config == baseline) {
        return Err(Error::Schema(format!(
            "sweep: baseline configuration {baseline:?} has no cells"
        )));
    }
    let mut sorted: Vec<&SweepCell> = cells.iter().collect();
    sorted.sort_by(|a, b| a.config.cmp(&b.config).then(a.size.cmp(&b.size)));
    sorted
        .into_iter()
        .map(|cell| {
            let base = cells
                .iter()
                .find(|c| c.config == baseline && c.size == cell.size)
                .ok_or_else(|| {
                    Error::Schema(format!(
                        "sweep: baseline {baseline:?} missing size {}",
                        cell.size
                    ))
                })?;
            Ok((cell, base))
        })
        .collect()
}

/// Wide sweep table: one row per (configuration, size), raw values plus
/// columns normalized against the baseline configuration at the same size.
pub fn sweep_csv(cells: &[SweepCell], baseline: &str) -> Result<String> {
    let rows = sorted_with_baselines(cells, baseline)?;
    let mut out = String::from(
        "config,n,t_mem_ns,e_static_pj,e_spm_pj,e_cache_dyn_pj,e_mm_pj,e_dyn_pj,e_tot_pj,\
         norm_t_mem_ns,norm_e_static_pj,norm_e_dyn_pj,norm_e_tot_pj\n",
    );
    for (cell, base) in rows {
        let r = &cell.report;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}",
            cell.config,
            cell.size,
            r.t_exec_ns.to_fixed_decimal(3),
            r.e_static_pj.to_fixed_decimal(3),
            r.e_spm_pj.to_fixed_decimal(3),
            r.e_cache_dyn_pj.to_fixed_decimal(3),
            r.e_mm_pj.to_fixed_decimal(3),
            r.e_dyn_pj.to_fixed_decimal(3),
            r.e_total_pj.to_fixed_decimal(3),
        ));
        for metric in SWEEP_METRICS {
            let ratio = normalized(
                &metric_value(r, metric),
                &metric_value(&base.report, metric),
                metric,
                cell.size,
            )?;
            out.push_str(&format!(",{}", ratio.to_fixed_decimal(6)));
        }
        out.push('\n');
    }
    Ok(out)
}

/// Long-format sweep table (one metric per row), convenient for plotting.
pub fn sweep_long_csv(cells: &[SweepCell], baseline: &str) -> Result<String> {
    let rows = sorted_with_baselines(cells, baseline)?;
    let mut out = String::from("config,n,metric,value,normalized\n");
    for (cell, base) in rows {
        for metric in SWEEP_METRICS {
            let raw = metric_value(&cell.report, metric);
            let ratio = normalized(&raw, &metric_value(&base.report, metric), metric, cell.size)?;
            out.push_str(&format!(
                "{},{},{metric},{},{}\n",
                cell.config,
                cell.size,
                raw.to_fixed_decimal(3),
                ratio.to_fixed_decimal(6),
            ));
        }
    }
    Ok(out)
}

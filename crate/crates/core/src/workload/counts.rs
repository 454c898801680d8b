//! Static access counting over affine loop nests.
//!
//! A site's trip count is the product of the iteration counts of its
//! enclosing loops. Rectangular levels are multiplied out in closed form;
//! levels whose deeper bounds depend on the current iterator are enumerated,
//! so triangular nests count exactly too.

use std::collections::BTreeMap;

use super::{AccessMode, Bindings, LoopNest, Workload};
use crate::error::{Error, Result};

/// Static read/write totals of one variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AccessCounts {
    pub reads: u64,
    pub writes: u64,
}

impl AccessCounts {
    fn bump(&mut self, mode: AccessMode, by: u64) -> Result<()> {
        let slot = match mode {
            AccessMode::Read => &mut self.reads,
            AccessMode::Write => &mut self.writes,
        };
        *slot = slot
            .checked_add(by)
            .ok_or_else(|| Error::Overflow("accumulating access counts".into()))?;
        Ok(())
    }
}

/// Counts per-variable reads and writes of one nest under the bindings.
pub fn count_accesses(
    nest: &LoopNest,
    bindings: &Bindings,
) -> Result<BTreeMap<String, AccessCounts>> {
    // Per level: do any deeper bounds reference this iterator?
    let dependent: Vec<bool> = (0..nest.iterators.len())
        .map(|level| {
            let name = &nest.iterators[level].name;
            nest.iterators[level + 1..]
                .iter()
                .any(|it| it.lower.references(name) || it.upper.references(name))
        })
        .collect();

    let mut acc = BTreeMap::new();
    let mut env = bindings.clone();
    descend(nest, &dependent, 0, &mut env, 1, &mut acc)?;
    Ok(acc)
}

fn descend(
    nest: &LoopNest,
    dependent: &[bool],
    level: usize,
    env: &mut Bindings,
    mult: u64,
    acc: &mut BTreeMap<String, AccessCounts>,
) -> Result<()> {
    for site in &nest.accesses {
        if site.depth == level {
            acc.entry(site.expr.base.clone())
                .or_default()
                .bump(site.mode, mult)?;
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
    let trip = (upper - lower) as u64;
    if trip == 0 {
        return Ok(());
    }

    if dependent[level] {
        let shadowed = env.get(&it.name).copied();
        for value in lower..upper {
            env.insert(it.name.clone(), value);
            descend(nest, dependent, level + 1, env, mult, acc)?;
        }
        match shadowed {
            Some(v) => env.insert(it.name.clone(), v),
            None => env.remove(&it.name),
        };
        Ok(())
    } else {
        let mult = mult
            .checked_mul(trip)
            .ok_or_else(|| Error::Overflow("multiplying trip counts".into()))?;
        descend(nest, dependent, level + 1, env, mult, acc)
    }
}

/// Counts over all nests of a workload, with per-variable manual overrides
/// applied. Variables without sites report zero.
pub fn workload_counts(
    workload: &Workload,
    bindings: &Bindings,
) -> Result<BTreeMap<String, AccessCounts>> {
    let mut totals: BTreeMap<String, AccessCounts> = workload
        .variables
        .iter()
        .map(|v| (v.name.clone(), AccessCounts::default()))
        .collect();
    for nest in &workload.nests {
        for (name, counts) in count_accesses(nest, bindings)? {
            let slot = totals
                .get_mut(&name)
                .ok_or_else(|| Error::Workload(format!("undeclared variable {name:?}")))?;
            slot.bump(AccessMode::Read, counts.reads)?;
            slot.bump(AccessMode::Write, counts.writes)?;
        }
    }
    for var in &workload.variables {
        let slot = totals.get_mut(&var.name).expect("populated above");
        if let Some(reads) = var.reads_override {
            slot.reads = reads;
        }
        if let Some(writes) = var.writes_override {
            slot.writes = writes;
        }
    }
    Ok(totals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workload::{parse_access, parse_linear, AccessSite, IteratorSpec};
    use std::collections::BTreeSet;

    fn it(name: &str, lower: &str, upper: &str) -> IteratorSpec {
        IteratorSpec {
            name: name.into(),
            lower: parse_linear(lower).unwrap(),
            upper: parse_linear(upper).unwrap(),
        }
    }

    fn site(expr: &str, known: &[&str], mode: AccessMode, depth: usize) -> AccessSite {
        let known: BTreeSet<String> = known.iter().map(|s| s.to_string()).collect();
        AccessSite {
            expr: parse_access(expr, &known).unwrap(),
            mode,
            depth,
        }
    }

    fn bind(pairs: &[(&str, i64)]) -> Bindings {
        pairs.iter().map(|(n, v)| (n.to_string(), *v)).collect()
    }

    /// Oracle: walk every iteration explicitly and count site executions.
    fn unrolled(nest: &LoopNest, bindings: &Bindings) -> BTreeMap<String, AccessCounts> {
        fn go(
            nest: &LoopNest,
            level: usize,
            env: &mut Bindings,
            acc: &mut BTreeMap<String, AccessCounts>,
        ) {
            for site in &nest.accesses {
                if site.depth == level {
                    acc.entry(site.expr.base.clone())
                        .or_default()
                        .bump(site.mode, 1)
                        .unwrap();
                }
            }
            if level == nest.iterators.len() {
                return;
            }
            let it = &nest.iterators[level];
            let lower = it.lower.eval(env).unwrap();
            let upper = it.upper.eval(env).unwrap();
            for value in lower..upper {
                env.insert(it.name.clone(), value);
                go(nest, level + 1, env, acc);
            }
            env.remove(&it.name);
        }
        let mut acc = BTreeMap::new();
        let mut env = bindings.clone();
        go(nest, 0, &mut env, &mut acc);
        acc
    }

    #[test]
    fn rectangular_nest_counts_by_product() {
        let nest = LoopNest {
            iterators: vec![it("i", "0", "N"), it("j", "0", "N")],
            accesses: vec![site("A[i][j]", &["A"], AccessMode::Read, 2)],
        };
        let counts = count_accesses(&nest, &bind(&[("N", 10)])).unwrap();
        assert_eq!(counts["A"], AccessCounts { reads: 100, writes: 0 });
    }

    #[test]
    fn mixed_depth_sites() {
        // for i in [0,4): { write x[i]; for j in [0,3): read x[i] }
        let nest = LoopNest {
            iterators: vec![it("i", "0", "4"), it("j", "0", "3")],
            accesses: vec![
                site("x[i]", &["x"], AccessMode::Write, 1),
                site("x[i]", &["x"], AccessMode::Read, 2),
            ],
        };
        let counts = count_accesses(&nest, &Bindings::new()).unwrap();
        assert_eq!(counts["x"], AccessCounts { reads: 12, writes: 4 });
        assert_eq!(counts, unrolled(&nest, &Bindings::new()));
    }

    #[test]
    fn empty_iteration_space_counts_zero() {
        let nest = LoopNest {
            iterators: vec![it("i", "0", "N"), it("j", "0", "N")],
            accesses: vec![site("A[i][j]", &["A"], AccessMode::Read, 2)],
        };
        let counts = count_accesses(&nest, &bind(&[("N", 0)])).unwrap();
        assert!(counts.is_empty());
    }

    #[test]
    fn triangular_nest_counts_exactly() {
        // for i in [0,N): for j in [i+1,N): read A[i][j]
        let nest = LoopNest {
            iterators: vec![it("i", "0", "N"), it("j", "i + 1", "N")],
            accesses: vec![site("A[i][j]", &["A"], AccessMode::Read, 2)],
        };
        let bindings = bind(&[("N", 9)]);
        let counts = count_accesses(&nest, &bindings).unwrap();
        assert_eq!(counts["A"].reads, 9 * 8 / 2);
        assert_eq!(counts, unrolled(&nest, &bindings));
    }

    #[test]
    fn unbound_parameter_and_negative_trip_are_errors() {
        let nest = LoopNest {
            iterators: vec![it("i", "0", "N")],
            accesses: vec![site("A[i]", &["A"], AccessMode::Read, 1)],
        };
        assert!(matches!(
            count_accesses(&nest, &Bindings::new()).unwrap_err(),
            Error::UnboundParameter { .. }
        ));
        assert!(matches!(
            count_accesses(&nest, &bind(&[("N", -2)])).unwrap_err(),
            Error::NegativeTripCount { .. }
        ));
    }

    #[test]
    fn workload_overrides_replace_counted_totals() {
        use crate::workload::parse_workload;
        let spec = parse_workload(
            r#"{"variables": [
                {"name": "a", "element_size_bytes": 8, "dims": [8], "reads": 777},
                {"name": "b", "element_size_bytes": 8, "dims": [8], "reads": 5, "writes": 6},
                {"name": "unused", "element_size_bytes": 8, "dims": [8]}
            ],
            "loop_nests": [{"iterators": [{"name": "i", "lower": 0, "upper": 8}],
                "accesses": [
                    {"expr": "a[i]", "mode": "read"},
                    {"expr": "a[i]", "mode": "write"}
                ]}]}"#,
        )
        .unwrap();
        let workload = spec.resolve(&Bindings::new()).unwrap();
        let counts = workload_counts(&workload, &Bindings::new()).unwrap();
        // Overridden reads replace the counted 8; counted writes survive.
        assert_eq!(counts["a"], AccessCounts { reads: 777, writes: 8 });
        // Profiled counts for a variable with no sites at all.
        assert_eq!(counts["b"], AccessCounts { reads: 5, writes: 6 });
        assert_eq!(counts["unused"], AccessCounts::default());
    }

    #[test]
    fn matches_unrolled_enumeration_on_assorted_nests() {
        let nests = vec![
            LoopNest {
                iterators: vec![it("i", "0", "7"), it("j", "0", "i"), it("k", "j", "7")],
                accesses: vec![
                    site("A[i][j]", &["A"], AccessMode::Read, 3),
                    site("B[k]", &["B"], AccessMode::Write, 3),
                    site("B[j]", &["B"], AccessMode::Read, 2),
                    site("C[i]", &["C"], AccessMode::Write, 1),
                    site("C[0]", &["C"], AccessMode::Read, 0),
                ],
            },
            LoopNest {
                iterators: vec![it("i", "2", "5"), it("j", "i - 1", "2*i")],
                accesses: vec![site("A[i][j]", &["A"], AccessMode::Write, 2)],
            },
        ];
        for nest in &nests {
            assert_eq!(
                count_accesses(nest, &Bindings::new()).unwrap(),
                unrolled(nest, &Bindings::new())
            );
        }
    }
}

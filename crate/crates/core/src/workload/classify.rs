//! Cache-friendliness classification of array accesses.
//!
//! An access is friendly when two consecutive iterations of its effective
//! innermost iterator can land in the same cache line. For a line-aligned
//! row-major array that reduces to `|stride| < line_size`: with stride equal
//! to the line size, consecutive accesses always fall in distinct blocks.
//! Any data-dependent (indirect) subscript is unfriendly outright.

use std::collections::BTreeMap;

use super::expr::{AccessExpr, IndexExpr};
use super::{AccessSite, CacheFriendliness, LoopNest, VariableProfile, Workload};
use crate::error::{Error, Result};

/// Classification of a single access stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccessClass {
    Friendly,
    Unfriendly,
}

/// Byte stride between consecutive values of `iterator`, or `None` when a
/// subscript is indirect.
pub fn access_stride_bytes(
    expr: &AccessExpr,
    var: &VariableProfile,
    iterator: &str,
) -> Result<Option<i128>> {
    if expr.indices.len() != var.dims.len() {
        return Err(Error::DimensionMismatch {
            access: expr.to_string(),
            variable: var.name.clone(),
            got: expr.indices.len(),
            expected: var.dims.len(),
        });
    }
    if expr.has_indirect_index() {
        return Ok(None);
    }

    let overflow = || Error::Overflow(format!("computing the stride of {expr}"));
    // Row-major element weight of each dimension.
    let mut weights = vec![1i128; var.dims.len()];
    for d in (0..var.dims.len().saturating_sub(1)).rev() {
        weights[d] = weights[d + 1]
            .checked_mul(var.dims[d + 1] as i128)
            .ok_or_else(overflow)?;
    }

    let mut stride_elems: i128 = 0;
    for (index, weight) in expr.indices.iter().zip(&weights) {
        let IndexExpr::Affine(lin) = index else {
            unreachable!("indirect handled above")
        };
        let term = (lin.coefficient(iterator) as i128)
            .checked_mul(*weight)
            .ok_or_else(overflow)?;
        stride_elems = stride_elems.checked_add(term).ok_or_else(overflow)?;
    }
    stride_elems
        .checked_mul(var.element_size_bytes as i128)
        .ok_or_else(overflow)
        .map(Some)
}

/// Classifies one access against the nest's innermost iterator.
pub fn classify_access(
    expr: &AccessExpr,
    var: &VariableProfile,
    nest: &LoopNest,
    line_size_bytes: u64,
) -> Result<AccessClass> {
    let site = AccessSite {
        expr: expr.clone(),
        mode: super::AccessMode::Read,
        depth: nest.iterators.len(),
    };
    classify_site(&site, var, nest, line_size_bytes)
}

/// Classifies an access site against its innermost *enclosing* iterator.
///
/// A site outside every loop executes once and is trivially friendly.
pub fn classify_site(
    site: &AccessSite,
    var: &VariableProfile,
    nest: &LoopNest,
    line_size_bytes: u64,
) -> Result<AccessClass> {
    if site.expr.has_indirect_index() {
        // Still validate the shape before answering.
        if site.expr.indices.len() != var.dims.len() {
            return Err(Error::DimensionMismatch {
                access: site.expr.to_string(),
                variable: var.name.clone(),
                got: site.expr.indices.len(),
                expected: var.dims.len(),
            });
        }
        return Ok(AccessClass::Unfriendly);
    }
    if site.depth == 0 {
        return Ok(AccessClass::Friendly);
    }
    let iterator = &nest.iterators[site.depth - 1].name;
    let stride = access_stride_bytes(&site.expr, var, iterator)?
        .expect("affine access has a stride");
    if stride.unsigned_abs() < line_size_bytes as u128 {
        Ok(AccessClass::Friendly)
    } else {
        Ok(AccessClass::Unfriendly)
    }
}

/// Cache-friendliness of one variable against one nest: true only when
/// every access to it classifies friendly. A manual override wins
/// unconditionally.
pub fn variable_cf(var: &VariableProfile, nest: &LoopNest, line_size_bytes: u64) -> Result<bool> {
    match var.cache_friendly {
        CacheFriendliness::Friendly => return Ok(true),
        CacheFriendliness::Unfriendly => return Ok(false),
        CacheFriendliness::Auto => {}
    }
    let mut seen = false;
    for site in nest.sites_of(&var.name) {
        seen = true;
        if classify_site(site, var, nest, line_size_bytes)? == AccessClass::Unfriendly {
            return Ok(false);
        }
    }
    if !seen {
        return Err(Error::CannotClassify {
            variable: var.name.clone(),
        });
    }
    Ok(true)
}

/// Cache-friendliness of every variable, conjoined over all nests.
///
/// `line_size_bytes` is the line size of the cache the data would stream
/// through; without a cache there is nothing to keep friendly data in, so
/// every variable gets C = 0 and no classification is attempted.
pub fn workload_cf(
    workload: &Workload,
    line_size_bytes: Option<u64>,
) -> Result<BTreeMap<String, bool>> {
    let mut out = BTreeMap::new();
    let Some(line) = line_size_bytes else {
        for var in &workload.variables {
            out.insert(var.name.clone(), false);
        }
        return Ok(out);
    };

    for var in &workload.variables {
        let cf = match var.cache_friendly {
            CacheFriendliness::Friendly => true,
            CacheFriendliness::Unfriendly => false,
            CacheFriendliness::Auto => {
                let mut seen = false;
                let mut friendly = true;
                for nest in &workload.nests {
                    for site in nest.sites_of(&var.name) {
                        seen = true;
                        if classify_site(site, var, nest, line)? == AccessClass::Unfriendly {
                            friendly = false;
                        }
                    }
                }
                if !seen {
                    return Err(Error::CannotClassify {
                        variable: var.name.clone(),
                    });
                }
                friendly
            }
        };
        out.insert(var.name.clone(), cf);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workload::{parse_access, parse_linear, AccessMode, IteratorSpec};
    use std::collections::BTreeSet;

    fn var(name: &str, elem: u64, dims: &[u64]) -> VariableProfile {
        VariableProfile {
            name: name.into(),
            element_size_bytes: elem,
            dims: dims.to_vec(),
            element_count: dims.iter().product(),
            reads_override: None,
            writes_override: None,
            cache_friendly: CacheFriendliness::Auto,
            init: None,
        }
    }

    fn nest_ij(accesses: Vec<AccessSite>) -> LoopNest {
        LoopNest {
            iterators: vec![
                IteratorSpec {
                    name: "i".into(),
                    lower: parse_linear("0").unwrap(),
                    upper: parse_linear("N").unwrap(),
                },
                IteratorSpec {
                    name: "j".into(),
                    lower: parse_linear("0").unwrap(),
                    upper: parse_linear("N").unwrap(),
                },
            ],
            accesses,
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

    #[test]
    fn row_major_unit_stride_is_friendly() {
        let a = var("A", 8, &[100, 100]);
        let nest = nest_ij(vec![]);
        let expr = site("A[i][j]", &["A"], AccessMode::Read, 2).expr;
        assert_eq!(classify_access(&expr, &a, &nest, 64).unwrap(), AccessClass::Friendly);
        assert_eq!(access_stride_bytes(&expr, &a, "j").unwrap(), Some(8));
    }

    #[test]
    fn indirect_subscript_is_unfriendly_at_any_line_size() {
        let a = var("A", 8, &[100, 100]);
        let nest = nest_ij(vec![]);
        let expr = site("A[i][B[j]]", &["A", "B"], AccessMode::Read, 2).expr;
        for line in [16u64, 64, 4096] {
            assert_eq!(
                classify_access(&expr, &a, &nest, line).unwrap(),
                AccessClass::Unfriendly
            );
        }
    }

    #[test]
    fn strided_access_depends_on_element_size() {
        let nest = nest_ij(vec![]);
        let expr = site("A[i][j*8]", &["A"], AccessMode::Read, 2).expr;
        // 8-byte elements: stride 64 never shares a 64-byte block.
        let doubles = var("A", 8, &[100, 1000]);
        assert_eq!(
            classify_access(&expr, &doubles, &nest, 64).unwrap(),
            AccessClass::Unfriendly
        );
        // 4-byte elements: stride 32 shares a block with its successor.
        let floats = var("A", 4, &[100, 1000]);
        assert_eq!(
            classify_access(&expr, &floats, &nest, 64).unwrap(),
            AccessClass::Friendly
        );
    }

    #[test]
    fn column_major_traversal_is_unfriendly() {
        // Innermost iterator in the leading dimension strides a whole row.
        let a = var("A", 8, &[64, 64]);
        let nest = nest_ij(vec![]);
        let expr = site("A[j][i]", &["A"], AccessMode::Read, 2).expr;
        assert_eq!(access_stride_bytes(&expr, &a, "j").unwrap(), Some(8 * 64));
        assert_eq!(
            classify_access(&expr, &a, &nest, 64).unwrap(),
            AccessClass::Unfriendly
        );
    }

    #[test]
    fn scale_consistency() {
        // Doubling element size and line size together preserves the class.
        let nest = nest_ij(vec![]);
        let expr = site("A[i][j*4]", &["A"], AccessMode::Read, 2).expr;
        for (elem, line) in [(4u64, 64u64), (8, 128), (16, 256)] {
            let v = var("A", elem, &[100, 1000]);
            assert_eq!(
                classify_access(&expr, &v, &nest, line).unwrap(),
                AccessClass::Friendly
            );
        }
    }

    #[test]
    fn outer_loop_site_uses_its_own_iterator() {
        // x[i] at depth 1 in an (i, j) nest: consecutive executions step i.
        let x = var("x", 8, &[100]);
        let nest = nest_ij(vec![]);
        let s = site("x[i]", &["x"], AccessMode::Write, 1);
        assert_eq!(classify_site(&s, &x, &nest, 64).unwrap(), AccessClass::Friendly);
        // The same expression at depth 2 has stride 0 in j: also friendly.
        let s = site("x[i]", &["x"], AccessMode::Read, 2);
        assert_eq!(classify_site(&s, &x, &nest, 64).unwrap(), AccessClass::Friendly);
    }

    #[test]
    fn cf_is_a_conjunction_and_overrides_win() {
        let mut a = var("A", 8, &[100, 100]);
        let friendly = site("A[i][j]", &["A"], AccessMode::Read, 2);
        let indirect = site("A[i][B[j]]", &["A", "B"], AccessMode::Read, 2);

        let nest = nest_ij(vec![friendly.clone(), friendly.clone()]);
        assert!(variable_cf(&a, &nest, 64).unwrap());

        let nest = nest_ij(vec![friendly.clone(), indirect]);
        assert!(!variable_cf(&a, &nest, 64).unwrap());

        a.cache_friendly = CacheFriendliness::Unfriendly;
        let nest = nest_ij(vec![friendly.clone()]);
        assert!(!variable_cf(&a, &nest, 64).unwrap());

        // A friendly override wins even over an indirect access.
        a.cache_friendly = CacheFriendliness::Friendly;
        let indirect = site("A[i][B[j]]", &["A", "B"], AccessMode::Read, 2);
        let nest = nest_ij(vec![indirect.clone()]);
        assert!(variable_cf(&a, &nest, 64).unwrap());

        // Adding accesses can only flip the flag from 1 to 0, never back.
        a.cache_friendly = CacheFriendliness::Auto;
        let unfriendly_nest = nest_ij(vec![indirect]);
        assert!(!variable_cf(&a, &unfriendly_nest, 64).unwrap());
        let with_extra_friendly = nest_ij(vec![
            unfriendly_nest.accesses[0].clone(),
            friendly,
        ]);
        assert!(!variable_cf(&a, &with_extra_friendly, 64).unwrap());

        let empty = nest_ij(vec![]);
        assert!(matches!(
            variable_cf(&a, &empty, 64).unwrap_err(),
            Error::CannotClassify { .. }
        ));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let a = var("A", 8, &[100, 100]);
        let nest = nest_ij(vec![]);
        let expr = site("A[i]", &["A"], AccessMode::Read, 2).expr;
        assert!(matches!(
            classify_access(&expr, &a, &nest, 64).unwrap_err(),
            Error::DimensionMismatch { .. }
        ));
    }
}

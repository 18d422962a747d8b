//! The ⋄ operation `E ⋄ F = E ∪ F ∪ EF` on sets of positive integers.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DiamondError {
    #[error("multiplicity sets contain positive integers only")]
    NonPositive,
    #[error("cap {cap} is below the largest generator {max}")]
    CapTooSmall { cap: u64, max: u64 },
    #[error("product overflows u64; supply a cap")]
    Overflow,
}

/// A finite set of positive integers; `cap` marks a set truncated to `[1, cap]`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct MultSet {
    pub elements: BTreeSet<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cap: Option<u64>,
}

impl MultSet {
    pub fn new(elements: impl IntoIterator<Item = u64>) -> Result<Self, DiamondError> {
        let elements: BTreeSet<u64> = elements.into_iter().collect();
        if elements.contains(&0) {
            return Err(DiamondError::NonPositive);
        }
        Ok(MultSet { elements, cap: None })
    }

    pub fn singleton(p: u64) -> Result<Self, DiamondError> {
        MultSet::new([p])
    }

    pub fn is_capped(&self) -> bool {
        self.cap.is_some()
    }

    /// `self ⋄ other`; a cap on either side carries over (the smaller one wins).
    pub fn diamond(&self, other: &MultSet) -> Result<MultSet, DiamondError> {
        let cap = match (self.cap, other.cap) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        let elements = diamond_capped(&self.elements, &other.elements, cap)?;
        Ok(MultSet { elements, cap })
    }
}

impl fmt::Display for MultSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<String> = self.elements.iter().map(u64::to_string).collect();
        write!(f, "{{{}}}", items.join(","))?;
        if let Some(c) = self.cap {
            write!(f, " (capped at {c})")?;
        }
        Ok(())
    }
}

fn diamond_capped(e: &BTreeSet<u64>, f: &BTreeSet<u64>, cap: Option<u64>) -> Result<BTreeSet<u64>, DiamondError> {
    let mut out: BTreeSet<u64> = e.union(f).copied().collect();
    for a in e {
        for b in f {
            match (a.checked_mul(*b), cap) {
                (Some(p), Some(c)) if p > c => {}
                (Some(p), _) => {
                    out.insert(p);
                }
                (None, Some(_)) => {}
                (None, None) => return Err(DiamondError::Overflow),
            }
        }
    }
    if let Some(c) = cap {
        out.retain(|x| *x <= c);
    }
    Ok(out)
}

/// `E ⋄ F` for finite sets (products are assumed to fit in `u64`).
pub fn diamond(e: &BTreeSet<u64>, f: &BTreeSet<u64>) -> BTreeSet<u64> {
    diamond_capped(e, f, None).expect("⋄ product overflowed u64")
}

/// `{p_1} ⋄ ⋯ ⋄ {p_k}` truncated to `[1, cap]`.
pub fn generate(ps: &[u64], cap: u64) -> Result<MultSet, DiamondError> {
    if ps.contains(&0) {
        return Err(DiamondError::NonPositive);
    }
    if let Some(&max) = ps.iter().max() {
        if cap < max {
            return Err(DiamondError::CapTooSmall { cap, max });
        }
    }
    let mut acc = BTreeSet::new();
    for &p in ps {
        // once an element exceeds the cap, so do all its multiples
        acc = diamond_capped(&acc, &BTreeSet::from([p]), Some(cap))?;
    }
    Ok(MultSet { elements: acc, cap: Some(cap) })
}

/// Every multiset `[p_1 ≤ ⋯ ≤ p_k]` with `{p_1} ⋄ ⋯ ⋄ {p_k} = E`.
///
/// Each `p_i` lies in the generated set, so candidates are drawn from `E`
/// itself, and a branch is cut as soon as its partial product set leaves `E`.
/// `1` is used at most once (repeating it changes nothing).
pub fn factor(e: &BTreeSet<u64>) -> Vec<Vec<u64>> {
    let mut out = Vec::new();
    if e.is_empty() || e.contains(&0) {
        return out;
    }
    let candidates: Vec<u64> = e.iter().copied().collect();
    let mut stack = Vec::new();
    search(e, &candidates, 0, &BTreeSet::new(), &mut stack, &mut out);
    out
}

fn search(
    target: &BTreeSet<u64>,
    candidates: &[u64],
    start: usize,
    current: &BTreeSet<u64>,
    stack: &mut Vec<u64>,
    out: &mut Vec<Vec<u64>>,
) {
    for (i, &p) in candidates.iter().enumerate().skip(start) {
        if p == 1 && stack.first() == Some(&1) {
            continue;
        }
        let Ok(next) = diamond_capped(current, &BTreeSet::from([p]), target.last().copied()) else {
            continue;
        };
        // elements beyond max E were dropped by the cap; detect them separately
        let overflow = current.iter().any(|c| c.checked_mul(p).is_none_or(|x| x > *target.last().unwrap()));
        if overflow || !next.is_subset(target) {
            continue;
        }
        stack.push(p);
        if next == *target {
            out.push(stack.clone());
        } else {
            let from = if p == 1 { i + 1 } else { i };
            search(target, candidates, from, &next, stack, out);
        }
        stack.pop();
    }
}

/// Whether `E` is closed under products up to `bound`.
pub fn is_mult_subsemigroup(e: &BTreeSet<u64>, bound: u64) -> bool {
    e.iter().all(|a| {
        e.range(a..).all(|b| match a.checked_mul(*b) {
            Some(p) if p <= bound => e.contains(&p),
            _ => true,
        })
    })
}

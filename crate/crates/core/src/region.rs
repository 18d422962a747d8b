//! Finite subsets of a group.
//!
//! A [`Region`] is either an explicit sorted list of elements or a coordinate
//! box. Boxes keep the large Følner sets of the lattice and semidirect towers
//! symbolic: membership, cardinality, translation and containment are computed
//! from the coordinate ranges without enumerating points.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::group::{CoordKind, GroupDescriptor, GroupElement};

/// A sorted, duplicate-free set of elements.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct ElementSet(Vec<GroupElement>);

impl ElementSet {
    pub fn new(mut v: Vec<GroupElement>) -> Self {
        v.sort_unstable();
        v.dedup();
        ElementSet(v)
    }

    pub fn empty() -> Self {
        ElementSet(Vec::new())
    }

    pub fn singleton(e: GroupElement) -> Self {
        ElementSet(vec![e])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, e: &GroupElement) -> bool {
        self.0.binary_search(e).is_ok()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, GroupElement> {
        self.0.iter()
    }

    pub fn as_slice(&self) -> &[GroupElement] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<GroupElement> {
        self.0
    }

    pub fn is_subset(&self, other: &ElementSet) -> bool {
        self.0.iter().all(|e| other.contains(e))
    }

    pub fn union(&self, other: &ElementSet) -> ElementSet {
        let mut v = Vec::with_capacity(self.len() + other.len());
        v.extend_from_slice(&self.0);
        v.extend_from_slice(&other.0);
        ElementSet::new(v)
    }

    pub fn intersection(&self, other: &ElementSet) -> ElementSet {
        ElementSet(self.0.iter().filter(|e| other.contains(e)).cloned().collect())
    }

    pub fn difference(&self, other: &ElementSet) -> ElementSet {
        ElementSet(self.0.iter().filter(|e| !other.contains(e)).cloned().collect())
    }

    /// `#(self △ other)` without materializing the result.
    pub fn symmetric_difference_len(&self, other: &ElementSet) -> usize {
        let common = self.0.iter().filter(|e| other.contains(e)).count();
        self.len() + other.len() - 2 * common
    }

    pub fn is_disjoint(&self, other: &ElementSet) -> bool {
        let (small, large) = if self.len() <= other.len() { (self, other) } else { (other, self) };
        small.0.iter().all(|e| !large.contains(e))
    }

    /// Left translate `g·S`.
    pub fn left_translate(&self, desc: &GroupDescriptor, g: &GroupElement) -> ElementSet {
        ElementSet::new(self.0.iter().map(|s| desc.op_unchecked(g, s)).collect())
    }

    /// Right translate `S·c`.
    pub fn right_translate(&self, desc: &GroupDescriptor, c: &GroupElement) -> ElementSet {
        ElementSet::new(self.0.iter().map(|s| desc.op_unchecked(s, c)).collect())
    }

    /// Algebraic product `S·C`.
    pub fn product(&self, desc: &GroupDescriptor, c: &ElementSet) -> ElementSet {
        let mut v = Vec::with_capacity(self.len() * c.len());
        for a in &self.0 {
            for b in &c.0 {
                v.push(desc.op_unchecked(a, b));
            }
        }
        ElementSet::new(v)
    }
}

impl FromIterator<GroupElement> for ElementSet {
    fn from_iter<I: IntoIterator<Item = GroupElement>>(iter: I) -> Self {
        ElementSet::new(iter.into_iter().collect())
    }
}

impl<'a> IntoIterator for &'a ElementSet {
    type Item = &'a GroupElement;
    type IntoIter = std::slice::Iter<'a, GroupElement>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// `len` consecutive values starting at `lo`; on a cyclic coordinate of order
/// `q` this is the arc `lo, lo+1, …` taken mod `q` (`len ≤ q`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CoordRange {
    pub lo: i64,
    pub len: u64,
}

impl CoordRange {
    pub fn new(lo: i64, len: u64) -> Self {
        CoordRange { lo, len }
    }

    fn contains(&self, kind: CoordKind, v: i64) -> bool {
        match kind {
            CoordKind::Mod(q) => ((v - self.lo).rem_euclid(q) as u64) < self.len,
            _ => v >= self.lo && ((v - self.lo) as u64) < self.len,
        }
    }

    fn shift(&self, kind: CoordKind, by: i64) -> CoordRange {
        match kind {
            CoordKind::Mod(q) if self.len >= q as u64 => CoordRange { lo: 0, len: q as u64 },
            CoordKind::Mod(q) => CoordRange { lo: (self.lo + by).rem_euclid(q), len: self.len },
            _ => CoordRange { lo: self.lo + by, len: self.len },
        }
    }

    fn is_full(&self, kind: CoordKind) -> bool {
        matches!(kind, CoordKind::Mod(q) if self.len >= q as u64)
    }

    fn intersection_len(&self, other: &CoordRange, kind: CoordKind) -> u64 {
        match kind {
            CoordKind::Mod(q) => {
                if self.is_full(kind) {
                    return other.len.min(q as u64);
                }
                if other.is_full(kind) {
                    return self.len;
                }
                // arc of self, re-based at other.lo
                let s = (self.lo - other.lo).rem_euclid(q) as u64;
                let q = q as u64;
                let end = s + self.len;
                let mut n = 0;
                if s < other.len {
                    n += end.min(q).min(other.len) - s;
                }
                if end > q {
                    n += (end - q).min(other.len);
                }
                n
            }
            _ => {
                let lo = self.lo.max(other.lo);
                let hi = (self.lo + self.len as i64).min(other.lo + other.len as i64);
                (hi - lo).max(0) as u64
            }
        }
    }

    fn is_within(&self, other: &CoordRange, kind: CoordKind) -> bool {
        match kind {
            CoordKind::Mod(q) => {
                if other.is_full(kind) {
                    return true;
                }
                if self.len > other.len {
                    return false;
                }
                let off = (self.lo - other.lo).rem_euclid(q) as u64;
                off + self.len <= other.len
            }
            _ => self.lo >= other.lo && self.lo + self.len as i64 <= other.lo + other.len as i64,
        }
    }

    fn values(&self, kind: CoordKind) -> impl Iterator<Item = i64> + '_ {
        (0..self.len as i64).map(move |t| kind.reduce(self.lo + t))
    }
}

/// A product of coordinate ranges.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CoordBox {
    pub ranges: Vec<CoordRange>,
}

impl CoordBox {
    pub fn new(ranges: Vec<CoordRange>) -> Self {
        CoordBox { ranges }
    }

    /// The `r`-th exhaustion box of the group.
    pub fn ball(desc: &GroupDescriptor, r: u64) -> Self {
        CoordBox::new(desc.ball_ranges(r).into_iter().map(|(lo, len)| CoordRange::new(lo, len)).collect())
    }

    pub fn count(&self) -> u128 {
        self.ranges.iter().map(|r| r.len as u128).product()
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.iter().any(|r| r.len == 0)
    }

    pub fn contains(&self, kinds: &[CoordKind], x: &GroupElement) -> bool {
        x.0.len() == self.ranges.len()
            && self.ranges.iter().zip(kinds).zip(&x.0).all(|((r, k), v)| r.contains(*k, *v))
    }

    pub fn intersection_count(&self, other: &CoordBox, kinds: &[CoordKind]) -> u128 {
        self.ranges
            .iter()
            .zip(&other.ranges)
            .zip(kinds)
            .map(|((a, b), k)| a.intersection_len(b, *k) as u128)
            .product()
    }

    pub fn is_within(&self, other: &CoordBox, kinds: &[CoordKind]) -> bool {
        self.is_empty()
            || self.ranges.iter().zip(&other.ranges).zip(kinds).all(|((a, b), k)| a.is_within(b, *k))
    }

    pub fn enumerate(&self, kinds: &[CoordKind]) -> Vec<GroupElement> {
        let mut out = vec![Vec::with_capacity(self.ranges.len())];
        for (r, k) in self.ranges.iter().zip(kinds) {
            let vals: Vec<i64> = r.values(*k).collect();
            let mut next = Vec::with_capacity(out.len() * vals.len());
            for prefix in &out {
                for v in &vals {
                    let mut p = prefix.clone();
                    p.push(*v);
                    next.push(p);
                }
            }
            out = next;
        }
        out.into_iter().map(GroupElement).collect()
    }

    fn shifted(&self, kinds: &[CoordKind], by: &[i64]) -> CoordBox {
        CoordBox::new(
            self.ranges.iter().zip(kinds).zip(by).map(|((r, k), b)| r.shift(*k, *b)).collect(),
        )
    }

    /// `g·B`. Left translation of a box is again a box.
    pub fn left_translate(&self, desc: &GroupDescriptor, g: &GroupElement) -> CoordBox {
        CoordBox::new(left_ranges(desc, &g.0, &self.ranges))
    }

    /// `B·c` as a union of boxes (one per residue slice in a semidirect product).
    pub fn right_translate(&self, desc: &GroupDescriptor, c: &GroupElement) -> Vec<CoordBox> {
        right_ranges(desc, &self.ranges, &c.0).into_iter().map(CoordBox::new).collect()
    }

    /// Uniformly random point, given one uniform draw per coordinate.
    pub fn point_at(&self, kinds: &[CoordKind], offsets: &[u64]) -> GroupElement {
        GroupElement(
            self.ranges
                .iter()
                .zip(kinds)
                .zip(offsets)
                .map(|((r, k), o)| k.reduce(r.lo + *o as i64))
                .collect(),
        )
    }
}

fn left_ranges(desc: &GroupDescriptor, g: &[i64], ranges: &[CoordRange]) -> Vec<CoordRange> {
    match desc {
        GroupDescriptor::DirectSum { summands } => {
            let mut out = Vec::with_capacity(ranges.len());
            let mut off = 0;
            for s in summands {
                let w = s.width();
                out.extend(left_ranges(s, &g[off..off + w], &ranges[off..off + w]));
                off += w;
            }
            out
        }
        GroupDescriptor::Semidirect { base, fiber, p } => {
            // (g,x,n)(h,y,k) = (g+h, x + A^n y, n+k): block i of the image is
            // block (i-n mod p) of the box shifted by x_i.
            let p = *p as usize;
            let wb = base.width();
            let wf = fiber.width();
            let fk = fiber.coord_kinds();
            let mut out = CoordBox::new(ranges[..wb].to_vec()).shifted(&base.coord_kinds(), &g[..wb]).ranges;
            let n = g[wb + wf * p] as usize;
            for i in 0..p {
                let j = (i + p - n % p) % p;
                let block = CoordBox::new(ranges[wb + j * wf..wb + (j + 1) * wf].to_vec());
                out.extend(block.shifted(&fk, &g[wb + i * wf..wb + (i + 1) * wf]).ranges);
            }
            out.push(ranges[wb + wf * p].shift(CoordKind::Mod(p as i64), n as i64));
            out
        }
        _ => CoordBox::new(ranges.to_vec()).shifted(&desc.coord_kinds(), g).ranges,
    }
}

fn right_ranges(desc: &GroupDescriptor, ranges: &[CoordRange], c: &[i64]) -> Vec<Vec<CoordRange>> {
    match desc {
        GroupDescriptor::DirectSum { summands } => {
            let mut acc: Vec<Vec<CoordRange>> = vec![Vec::with_capacity(ranges.len())];
            let mut off = 0;
            for s in summands {
                let w = s.width();
                let parts = right_ranges(s, &ranges[off..off + w], &c[off..off + w]);
                let mut next = Vec::with_capacity(acc.len() * parts.len());
                for a in &acc {
                    for part in &parts {
                        let mut v = a.clone();
                        v.extend_from_slice(part);
                        next.push(v);
                    }
                }
                acc = next;
                off += w;
            }
            acc
        }
        GroupDescriptor::Semidirect { base, fiber, p } => {
            // (h,y,k) fixed on the right; slice the box by its residue n.
            let pp = *p as usize;
            let wb = base.width();
            let wf = fiber.width();
            let fk = fiber.coord_kinds();
            let bk = base.coord_kinds();
            let kind_n = CoordKind::Mod(*p);
            let k = c[wb + wf * pp];
            let base_part = CoordBox::new(ranges[..wb].to_vec()).shifted(&bk, &c[..wb]).ranges;
            let res = ranges[wb + wf * pp];
            res.values(kind_n)
                .map(|n| {
                    let n = n as usize;
                    let mut out = base_part.clone();
                    for i in 0..pp {
                        let j = (i + pp - n % pp) % pp;
                        let block = CoordBox::new(ranges[wb + i * wf..wb + (i + 1) * wf].to_vec());
                        out.extend(block.shifted(&fk, &c[wb + j * wf..wb + (j + 1) * wf]).ranges);
                    }
                    out.push(CoordRange::new(kind_n.reduce(n as i64 + k), 1));
                    out
                })
                .collect()
        }
        _ => vec![CoordBox::new(ranges.to_vec()).shifted(&desc.coord_kinds(), c).ranges],
    }
}

/// A finite subset of a group.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Region {
    Box(CoordBox),
    Explicit(ElementSet),
}

impl Region {
    pub fn count(&self) -> u128 {
        match self {
            Region::Box(b) => b.count(),
            Region::Explicit(s) => s.len() as u128,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    pub fn contains(&self, desc: &GroupDescriptor, x: &GroupElement) -> bool {
        match self {
            Region::Box(b) => b.contains(&desc.coord_kinds(), x),
            Region::Explicit(s) => s.contains(x),
        }
    }

    /// Membership test with precomputed coordinate kinds (hot loops).
    pub fn contains_with(&self, kinds: &[CoordKind], x: &GroupElement) -> bool {
        match self {
            Region::Box(b) => b.contains(kinds, x),
            Region::Explicit(s) => s.contains(x),
        }
    }

    pub fn to_set(&self, desc: &GroupDescriptor) -> ElementSet {
        match self {
            Region::Box(b) => ElementSet::new(b.enumerate(&desc.coord_kinds())),
            Region::Explicit(s) => s.clone(),
        }
    }

    /// `#(gR ∩ R)`.
    pub fn translate_overlap(&self, desc: &GroupDescriptor, g: &GroupElement) -> u128 {
        match self {
            Region::Box(b) => b.left_translate(desc, g).intersection_count(b, &desc.coord_kinds()),
            Region::Explicit(s) => s.iter().filter(|x| s.contains(&desc.op_unchecked(g, x))).count() as u128,
        }
    }

    /// Whether `self·c ⊆ other`.
    pub fn right_translate_within(&self, desc: &GroupDescriptor, c: &GroupElement, other: &Region) -> bool {
        let kinds = desc.coord_kinds();
        match (self, other) {
            (Region::Box(a), Region::Box(b)) => a.right_translate(desc, c).iter().all(|s| s.is_within(b, &kinds)),
            (Region::Box(a), Region::Explicit(_)) => {
                a.enumerate(&kinds).iter().all(|x| other.contains_with(&kinds, &desc.op_unchecked(x, c)))
            }
            (Region::Explicit(a), _) => a.iter().all(|x| other.contains_with(&kinds, &desc.op_unchecked(x, c))),
        }
    }

    /// Whether the translates `{self·c : c ∈ cs}` are pairwise disjoint.
    pub fn translates_disjoint(&self, desc: &GroupDescriptor, cs: &ElementSet) -> bool {
        match self {
            Region::Explicit(f) => {
                let total = f.len() * cs.len();
                let mut seen = HashSet::with_capacity(total);
                for c in cs {
                    for x in f {
                        if !seen.insert(desc.op_unchecked(x, c)) {
                            return false;
                        }
                    }
                }
                true
            }
            Region::Box(b) => {
                let kinds = desc.coord_kinds();
                let slices: Vec<Vec<CoordBox>> = cs.iter().map(|c| b.right_translate(desc, c)).collect();
                for i in 0..slices.len() {
                    for j in i + 1..slices.len() {
                        for s in &slices[i] {
                            for t in &slices[j] {
                                if s.intersection_count(t, &kinds) > 0 {
                                    return false;
                                }
                            }
                        }
                    }
                }
                true
            }
        }
    }

    /// Cartesian product of regions of two groups, laid out as the direct sum.
    pub fn product(&self, d1: &GroupDescriptor, other: &Region, d2: &GroupDescriptor) -> Region {
        match (self, other) {
            (Region::Box(a), Region::Box(b)) => {
                let mut ranges = a.ranges.clone();
                ranges.extend_from_slice(&b.ranges);
                Region::Box(CoordBox::new(ranges))
            }
            _ => {
                let a = self.to_set(d1);
                let b = other.to_set(d2);
                Region::Explicit(product_sets(&a, &b))
            }
        }
    }
}

/// `A × B` with concatenated coordinates.
pub fn product_sets(a: &ElementSet, b: &ElementSet) -> ElementSet {
    let mut v = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            let mut coords = x.0.clone();
            coords.extend_from_slice(&y.0);
            v.push(GroupElement(coords));
        }
    }
    ElementSet::new(v)
}

//! Exact arithmetic for the groups the towers live on.
//!
//! Every group is laid out as a flat vector of `i64` coordinates:
//!
//! * free Abelian and lattice coordinates are unbounded integers (lattice
//!   coordinates count multiples of the mesh),
//! * cyclic coordinates are residues in `0..q`,
//! * a semidirect product `G × J^p ⋊ Z(p)` stores `[g | x_0 | … | x_{p-1} | n]`.
//!
//! The semidirect law is `(g,x,n)(h,y,k) = (g+h, x + A^n y, n+k)` where `A`
//! rotates the `p` blocks one step to the right.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::{BigRational, Rational64};
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::rational::{fmt_q, parse_q, r64_str, r64_to_big};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GroupError {
    #[error("element has {found} coordinates, descriptor expects {expected}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("invalid group descriptor: {0}")]
    InvalidDescriptor(String),
    #[error("value {value} is not a multiple of the lattice mesh {mesh}")]
    NotRepresentable { value: String, mesh: String },
    #[error("cannot decode element: {0}")]
    Decode(String),
    #[error("tuple of length {found} cannot be shifted with p = {p}")]
    ShiftLength { p: usize, found: usize },
}

/// A finitely described group.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GroupDescriptor {
    /// `Z^rank`.
    FreeAbelian { rank: usize },
    /// `Z(order)`.
    Cyclic { order: i64 },
    /// `Z(order)^{⊕support}`: the first `support` summands of `Z(order)^{⊕N}`.
    CyclicSum { order: i64, support: usize },
    /// Finite direct sum; zero summands is the trivial group.
    DirectSum { summands: Vec<GroupDescriptor> },
    /// `(mesh·Z)^dim`, the exact stand-in for `R^dim`.
    LatticeRm {
        dim: usize,
        #[serde(with = "r64_str")]
        mesh: Rational64,
    },
    /// `base × fiber^p ⋊_A Z(p)`.
    Semidirect {
        base: Box<GroupDescriptor>,
        fiber: Box<GroupDescriptor>,
        p: i64,
    },
}

/// How a single coordinate behaves.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoordKind {
    Int,
    Lattice,
    Mod(i64),
}

impl CoordKind {
    pub fn reduce(self, v: i64) -> i64 {
        match self {
            CoordKind::Mod(q) => v.rem_euclid(q),
            _ => v,
        }
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroupElement(pub Vec<i64>);

impl GroupElement {
    pub fn new(coords: Vec<i64>) -> Self {
        GroupElement(coords)
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }
}

impl fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl From<Vec<i64>> for GroupElement {
    fn from(v: Vec<i64>) -> Self {
        GroupElement(v)
    }
}

/// Result of [`GroupDescriptor::element_order`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ElementOrder {
    Finite(u64),
    InfiniteWithinBound,
}

/// The rotation `A(x_1,…,x_p) = (x_p, x_1, …, x_{p-1})`.
pub fn cyclic_shift<T: Clone>(p: usize, x: &[T]) -> Result<Vec<T>, GroupError> {
    if x.len() != p {
        return Err(GroupError::ShiftLength { p, found: x.len() });
    }
    let mut out = Vec::with_capacity(p);
    if p > 0 {
        out.push(x[p - 1].clone());
        out.extend_from_slice(&x[..p - 1]);
    }
    Ok(out)
}

impl GroupDescriptor {
    pub fn free(rank: usize) -> Self {
        GroupDescriptor::FreeAbelian { rank }
    }

    pub fn integers() -> Self {
        GroupDescriptor::FreeAbelian { rank: 1 }
    }

    pub fn cyclic(order: i64) -> Self {
        GroupDescriptor::Cyclic { order }
    }

    pub fn cyclic_sum(order: i64, support: usize) -> Self {
        GroupDescriptor::CyclicSum { order, support }
    }

    pub fn lattice(dim: usize, mesh: Rational64) -> Self {
        GroupDescriptor::LatticeRm { dim, mesh }
    }

    pub fn direct_sum(summands: Vec<GroupDescriptor>) -> Self {
        GroupDescriptor::DirectSum { summands }
    }

    pub fn trivial() -> Self {
        GroupDescriptor::DirectSum { summands: vec![] }
    }

    pub fn semidirect(base: GroupDescriptor, fiber: GroupDescriptor, p: i64) -> Self {
        GroupDescriptor::Semidirect { base: Box::new(base), fiber: Box::new(fiber), p }
    }

    /// Checks the descriptor invariants (positive mesh, `q ≥ 2`, `p ≥ 2`,
    /// Abelian discrete fiber, Abelian base).
    pub fn validate(&self) -> Result<(), GroupError> {
        match self {
            GroupDescriptor::FreeAbelian { .. } => Ok(()),
            GroupDescriptor::Cyclic { order } | GroupDescriptor::CyclicSum { order, .. } => {
                if *order < 2 {
                    return Err(GroupError::InvalidDescriptor(format!("cyclic order {order} < 2")));
                }
                Ok(())
            }
            GroupDescriptor::DirectSum { summands } => summands.iter().try_for_each(|s| s.validate()),
            GroupDescriptor::LatticeRm { mesh, .. } => {
                if *mesh <= Rational64::zero() {
                    return Err(GroupError::InvalidDescriptor(format!("mesh {mesh} must be positive")));
                }
                Ok(())
            }
            GroupDescriptor::Semidirect { base, fiber, p } => {
                if *p < 2 {
                    return Err(GroupError::InvalidDescriptor(format!("p = {p} must be at least 2")));
                }
                base.validate()?;
                fiber.validate()?;
                if !base.is_abelian() {
                    return Err(GroupError::InvalidDescriptor("semidirect base must be Abelian".into()));
                }
                if !fiber.is_abelian() || fiber.has_lattice() {
                    return Err(GroupError::InvalidDescriptor(
                        "semidirect fiber must be a discrete Abelian group".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    pub fn is_abelian(&self) -> bool {
        match self {
            GroupDescriptor::Semidirect { .. } => false,
            GroupDescriptor::DirectSum { summands } => summands.iter().all(|s| s.is_abelian()),
            _ => true,
        }
    }

    pub fn has_lattice(&self) -> bool {
        match self {
            GroupDescriptor::LatticeRm { .. } => true,
            GroupDescriptor::DirectSum { summands } => summands.iter().any(|s| s.has_lattice()),
            GroupDescriptor::Semidirect { base, fiber, .. } => base.has_lattice() || fiber.has_lattice(),
            _ => false,
        }
    }

    /// Number of `i64` coordinates of an element.
    pub fn width(&self) -> usize {
        match self {
            GroupDescriptor::FreeAbelian { rank } => *rank,
            GroupDescriptor::Cyclic { .. } => 1,
            GroupDescriptor::CyclicSum { support, .. } => *support,
            GroupDescriptor::DirectSum { summands } => summands.iter().map(|s| s.width()).sum(),
            GroupDescriptor::LatticeRm { dim, .. } => *dim,
            GroupDescriptor::Semidirect { base, fiber, p } => base.width() + fiber.width() * (*p as usize) + 1,
        }
    }

    pub fn coord_kinds(&self) -> Vec<CoordKind> {
        let mut out = Vec::with_capacity(self.width());
        self.push_kinds(&mut out);
        out
    }

    fn push_kinds(&self, out: &mut Vec<CoordKind>) {
        match self {
            GroupDescriptor::FreeAbelian { rank } => out.extend(std::iter::repeat_n(CoordKind::Int, *rank)),
            GroupDescriptor::Cyclic { order } => out.push(CoordKind::Mod(*order)),
            GroupDescriptor::CyclicSum { order, support } => {
                out.extend(std::iter::repeat_n(CoordKind::Mod(*order), *support))
            }
            GroupDescriptor::DirectSum { summands } => summands.iter().for_each(|s| s.push_kinds(out)),
            GroupDescriptor::LatticeRm { dim, .. } => out.extend(std::iter::repeat_n(CoordKind::Lattice, *dim)),
            GroupDescriptor::Semidirect { base, fiber, p } => {
                base.push_kinds(out);
                for _ in 0..*p {
                    fiber.push_kinds(out);
                }
                out.push(CoordKind::Mod(*p));
            }
        }
    }

    /// Haar weight of a single point: `mesh^dim` per lattice factor, 1 otherwise.
    pub fn point_weight(&self) -> BigRational {
        match self {
            GroupDescriptor::LatticeRm { dim, mesh } => {
                let m = r64_to_big(mesh);
                let mut acc = BigRational::one();
                for _ in 0..*dim {
                    acc *= &m;
                }
                acc
            }
            GroupDescriptor::DirectSum { summands } => {
                summands.iter().fold(BigRational::one(), |acc, s| acc * s.point_weight())
            }
            GroupDescriptor::Semidirect { base, fiber, p } => {
                let mut acc = base.point_weight();
                for _ in 0..*p {
                    acc *= fiber.point_weight();
                }
                acc
            }
            _ => BigRational::one(),
        }
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement(vec![0; self.width()])
    }

    pub fn check(&self, a: &GroupElement) -> Result<(), GroupError> {
        let w = self.width();
        if a.0.len() != w {
            return Err(GroupError::ShapeMismatch { expected: w, found: a.0.len() });
        }
        Ok(())
    }

    /// Builds an element from raw coordinates, reducing cyclic components.
    pub fn element(&self, coords: Vec<i64>) -> Result<GroupElement, GroupError> {
        let e = GroupElement(coords);
        self.check(&e)?;
        Ok(self.normalize(e))
    }

    pub fn normalize(&self, mut a: GroupElement) -> GroupElement {
        for (v, k) in a.0.iter_mut().zip(self.coord_kinds()) {
            *v = k.reduce(*v);
        }
        a
    }

    /// The group law.
    pub fn op(&self, a: &GroupElement, b: &GroupElement) -> Result<GroupElement, GroupError> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.op_unchecked(a, b))
    }

    /// The group law without shape checks; callers guarantee conformance.
    pub fn op_unchecked(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        let mut out = Vec::with_capacity(a.0.len());
        self.op_into(&a.0, &b.0, &mut out);
        GroupElement(out)
    }

    pub(crate) fn op_into(&self, a: &[i64], b: &[i64], out: &mut Vec<i64>) {
        match self {
            GroupDescriptor::FreeAbelian { .. } | GroupDescriptor::LatticeRm { .. } => {
                out.extend(a.iter().zip(b).map(|(x, y)| x + y))
            }
            GroupDescriptor::Cyclic { order } | GroupDescriptor::CyclicSum { order, .. } => {
                out.extend(a.iter().zip(b).map(|(x, y)| (x + y).rem_euclid(*order)))
            }
            GroupDescriptor::DirectSum { summands } => {
                let mut off = 0;
                for s in summands {
                    let w = s.width();
                    s.op_into(&a[off..off + w], &b[off..off + w], out);
                    off += w;
                }
            }
            GroupDescriptor::Semidirect { base, fiber, p } => {
                let p = *p as usize;
                let wb = base.width();
                let wf = fiber.width();
                base.op_into(&a[..wb], &b[..wb], out);
                let n = a[wb + wf * p] as usize;
                for i in 0..p {
                    // (A^n y)_i = y_{i-n mod p}
                    let j = (i + p - n % p) % p;
                    let xa = &a[wb + i * wf..wb + (i + 1) * wf];
                    let yb = &b[wb + j * wf..wb + (j + 1) * wf];
                    fiber.op_into(xa, yb, out);
                }
                let k = b[wb + wf * p];
                out.push((n as i64 + k).rem_euclid(p as i64));
            }
        }
    }

    pub fn inv(&self, a: &GroupElement) -> Result<GroupElement, GroupError> {
        self.check(a)?;
        Ok(self.inv_unchecked(a))
    }

    pub fn inv_unchecked(&self, a: &GroupElement) -> GroupElement {
        let mut out = Vec::with_capacity(a.0.len());
        self.inv_into(&a.0, &mut out);
        GroupElement(out)
    }

    fn inv_into(&self, a: &[i64], out: &mut Vec<i64>) {
        match self {
            GroupDescriptor::FreeAbelian { .. } | GroupDescriptor::LatticeRm { .. } => out.extend(a.iter().map(|x| -x)),
            GroupDescriptor::Cyclic { order } | GroupDescriptor::CyclicSum { order, .. } => {
                out.extend(a.iter().map(|x| (-x).rem_euclid(*order)))
            }
            GroupDescriptor::DirectSum { summands } => {
                let mut off = 0;
                for s in summands {
                    let w = s.width();
                    s.inv_into(&a[off..off + w], out);
                    off += w;
                }
            }
            GroupDescriptor::Semidirect { base, fiber, p } => {
                // (g,x,n)^{-1} = (-g, -A^{-n} x, -n), (A^{-n} x)_i = x_{i+n mod p}
                let p = *p as usize;
                let wb = base.width();
                let wf = fiber.width();
                base.inv_into(&a[..wb], out);
                let n = a[wb + wf * p] as usize;
                for i in 0..p {
                    let j = (i + n) % p;
                    fiber.inv_into(&a[wb + j * wf..wb + (j + 1) * wf], out);
                }
                out.push((-(n as i64)).rem_euclid(p as i64));
            }
        }
    }

    /// `a^k` (written `k·a` in the Abelian case), `k` may be negative.
    pub fn pow(&self, a: &GroupElement, k: i64) -> GroupElement {
        if self.is_abelian() {
            let kinds = self.coord_kinds();
            return GroupElement(a.0.iter().zip(kinds).map(|(v, kind)| kind.reduce(v * k)).collect());
        }
        let base = if k < 0 { self.inv_unchecked(a) } else { a.clone() };
        let mut e = k.unsigned_abs();
        let mut acc = self.identity();
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.op_unchecked(&acc, &sq);
            }
            sq = self.op_unchecked(&sq, &sq);
            e >>= 1;
        }
        acc
    }

    /// Smallest `k ≤ bound` with `a^k = e`.
    pub fn element_order(&self, a: &GroupElement, bound: u64) -> Result<ElementOrder, GroupError> {
        self.check(a)?;
        if self.is_abelian() {
            return Ok(match self.exact_order(a) {
                Some(k) if k <= bound => ElementOrder::Finite(k),
                _ => ElementOrder::InfiniteWithinBound,
            });
        }
        let id = self.identity();
        let mut acc = a.clone();
        for k in 1..=bound {
            if acc == id {
                return Ok(ElementOrder::Finite(k));
            }
            acc = self.op_unchecked(&acc, a);
        }
        Ok(ElementOrder::InfiniteWithinBound)
    }

    /// Exact order of an element of an Abelian group; `None` means infinite.
    pub fn exact_order(&self, a: &GroupElement) -> Option<u64> {
        debug_assert!(self.is_abelian());
        let mut order: u64 = 1;
        for (v, kind) in a.0.iter().zip(self.coord_kinds()) {
            match kind {
                CoordKind::Int | CoordKind::Lattice => {
                    if *v != 0 {
                        return None;
                    }
                }
                CoordKind::Mod(q) => {
                    let o = (q / v.gcd(&q)) as u64;
                    order = order.lcm(&o);
                }
            }
        }
        Some(order)
    }

    /// Haar weight of a finite set of distinct elements.
    pub fn haar_weight(&self, set: &[GroupElement]) -> BigRational {
        BigRational::from_integer(BigInt::from(set.len())) * self.point_weight()
    }

    /// Decodes an element from JSON: a flat array of integers, with lattice
    /// coordinates given as their real value (`"num/den"` strings or integers).
    pub fn decode(&self, v: &Value) -> Result<GroupElement, GroupError> {
        let arr = v
            .as_array()
            .ok_or_else(|| GroupError::Decode(format!("expected an array, got {v}")))?;
        let kinds = self.coord_kinds();
        if arr.len() != kinds.len() {
            return Err(GroupError::ShapeMismatch { expected: kinds.len(), found: arr.len() });
        }
        let meshes = self.lattice_meshes();
        let mut lattice_idx = 0;
        let mut coords = Vec::with_capacity(arr.len());
        for (x, kind) in arr.iter().zip(kinds) {
            match kind {
                CoordKind::Lattice => {
                    let value = match x {
                        Value::String(s) => parse_q(s),
                        Value::Number(n) => n.as_i64().map(|i| BigRational::from_integer(i.into())),
                        _ => None,
                    }
                    .ok_or_else(|| GroupError::Decode(format!("bad lattice coordinate {x}")))?;
                    let mesh = r64_to_big(&meshes[lattice_idx]);
                    lattice_idx += 1;
                    let units = &value / &mesh;
                    if !units.is_integer() {
                        return Err(GroupError::NotRepresentable { value: fmt_q(&value), mesh: fmt_q(&mesh) });
                    }
                    let units: i64 = units
                        .to_integer()
                        .try_into()
                        .map_err(|_| GroupError::Decode(format!("coordinate {x} out of range")))?;
                    coords.push(units);
                }
                _ => {
                    let i = x
                        .as_i64()
                        .ok_or_else(|| GroupError::Decode(format!("expected an integer coordinate, got {x}")))?;
                    coords.push(kind.reduce(i));
                }
            }
        }
        Ok(GroupElement(coords))
    }

    /// Inverse of [`decode`](Self::decode).
    pub fn encode(&self, a: &GroupElement) -> Value {
        let meshes = self.lattice_meshes();
        let mut lattice_idx = 0;
        Value::Array(
            a.0.iter()
                .zip(self.coord_kinds())
                .map(|(v, kind)| match kind {
                    CoordKind::Lattice => {
                        let mesh = r64_to_big(&meshes[lattice_idx]);
                        lattice_idx += 1;
                        Value::String(fmt_q(&(BigRational::from_integer((*v).into()) * mesh)))
                    }
                    _ => Value::from(*v),
                })
                .collect(),
        )
    }

    /// Mesh of every lattice coordinate, in coordinate order.
    fn lattice_meshes(&self) -> Vec<Rational64> {
        let mut out = Vec::new();
        self.push_meshes(&mut out);
        out
    }

    fn push_meshes(&self, out: &mut Vec<Rational64>) {
        match self {
            GroupDescriptor::LatticeRm { dim, mesh } => out.extend(std::iter::repeat_n(*mesh, *dim)),
            GroupDescriptor::DirectSum { summands } => summands.iter().for_each(|s| s.push_meshes(out)),
            GroupDescriptor::Semidirect { base, fiber, p } => {
                base.push_meshes(out);
                for _ in 0..*p {
                    fiber.push_meshes(out);
                }
            }
            _ => {}
        }
    }

    /// Coordinate ranges `(lo, len)` of the `r`-th set of an increasing
    /// exhaustion of the group by finite boxes.
    ///
    /// Unbounded coordinates get `[-r, r]`; a cyclic group gets the centered
    /// residues of radius `r`; in a direct sum (and in `Z(q)^{⊕N}`) only the
    /// first `r` summands are opened, the rest stay at zero.
    pub fn ball_ranges(&self, r: u64) -> Vec<(i64, u64)> {
        let mut out = Vec::with_capacity(self.width());
        self.push_ball(r, &mut out);
        out
    }

    fn push_ball(&self, r: u64, out: &mut Vec<(i64, u64)>) {
        let centered = |q: i64| -> (i64, u64) {
            let len = (2 * r + 1).min(q as u64);
            if len == q as u64 {
                (0, len)
            } else {
                (-(r as i64), len)
            }
        };
        match self {
            GroupDescriptor::FreeAbelian { rank } | GroupDescriptor::LatticeRm { dim: rank, .. } => {
                out.extend(std::iter::repeat_n((-(r as i64), 2 * r + 1), *rank))
            }
            GroupDescriptor::Cyclic { order } => out.push(centered(*order)),
            GroupDescriptor::CyclicSum { order, support } => {
                for i in 0..*support {
                    out.push(if (i as u64) < r { centered(*order) } else { (0, 1) });
                }
            }
            GroupDescriptor::DirectSum { summands } => {
                for (i, s) in summands.iter().enumerate() {
                    if (i as u64) < r.max(1) {
                        s.push_ball(r, out);
                    } else {
                        out.extend(std::iter::repeat_n((0, 1), s.width()));
                    }
                }
            }
            GroupDescriptor::Semidirect { base, fiber, p } => {
                base.push_ball(r, out);
                for _ in 0..*p {
                    fiber.push_ball(r, out);
                }
                out.push((0, *p as u64));
            }
        }
    }
}

/// Lexicographic comparison helper used by sorted element sets.
pub fn cmp_elements(a: &GroupElement, b: &GroupElement) -> Ordering {
    a.0.cmp(&b.0)
}

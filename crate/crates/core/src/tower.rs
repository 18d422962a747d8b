//! The `(C,F)` data structure truncated at a finite depth `N`.
//!
//! A tower stores `F_0, …, F_N` and `C_1, …, C_N`. The working space is `X_N`:
//! an `n`-cylinder `[A]_n` is identified with its refinement `A·C_{n+1}⋯C_N`,
//! and the measure of an atom of `F_n` is `norm · λ(point) / (#C_1⋯#C_n)`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::group::{GroupDescriptor, GroupElement, GroupError};
use crate::rational::{q_from_u128, q_str};
use crate::region::{product_sets, CoordBox, CoordRange, ElementSet, Region};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TowerError {
    #[error("malformed tower: {0}")]
    Structural(String),
    #[error("F_{level} is empty")]
    EmptyLevel { level: usize },
    #[error("cylinder base is not contained in F_{level}")]
    BaseOutside { level: usize },
    #[error("level {level} is beyond the truncation depth {depth}")]
    LevelOutOfRange { level: usize, depth: usize },
    #[error("cannot refine a level-{from} cylinder down to level {to}")]
    RefineBackwards { from: usize, to: usize },
    #[error("towers have different depths ({left} vs {right})")]
    DepthMismatch { left: usize, right: usize },
    #[error(transparent)]
    Group(#[from] GroupError),
}

/// Finite/infinite dichotomy of the limit measure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasureType {
    FiniteType,
    InfiniteType,
    UndecidedAtDepth,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tower {
    group: GroupDescriptor,
    f: Vec<Region>,
    c: Vec<ElementSet>,
    hint: Option<MeasureType>,
}

impl Tower {
    /// `f` holds `F_0..=F_N`, `c` holds `C_1..=C_N`.
    pub fn new(group: GroupDescriptor, f: Vec<Region>, c: Vec<ElementSet>) -> Result<Self, TowerError> {
        group.validate()?;
        if f.len() != c.len() + 1 {
            return Err(TowerError::Structural(format!(
                "expected {} F-levels for {} C-levels, got {}",
                c.len() + 1,
                c.len(),
                f.len()
            )));
        }
        let w = group.width();
        for (level, region) in f.iter().enumerate() {
            match region {
                Region::Explicit(s) => {
                    for e in s {
                        group.check(e)?;
                    }
                }
                Region::Box(b) => {
                    if b.ranges.len() != w {
                        return Err(GroupError::ShapeMismatch { expected: w, found: b.ranges.len() }.into());
                    }
                }
            }
            if region.is_empty() {
                return Err(TowerError::EmptyLevel { level });
            }
        }
        for cs in &c {
            for e in cs {
                group.check(e)?;
            }
        }
        Ok(Tower { group, f, c, hint: None })
    }

    /// Records what a generator certified about the limit measure.
    pub fn with_measure_hint(mut self, hint: MeasureType) -> Self {
        self.hint = Some(hint);
        self
    }

    pub fn measure_hint(&self) -> Option<MeasureType> {
        self.hint
    }

    pub fn group(&self) -> &GroupDescriptor {
        &self.group
    }

    /// Truncation depth `N`.
    pub fn depth(&self) -> usize {
        self.c.len()
    }

    pub fn f(&self, n: usize) -> &Region {
        &self.f[n]
    }

    /// `C_n` for `1 ≤ n ≤ N`.
    pub fn c(&self, n: usize) -> &ElementSet {
        assert!(n >= 1, "C_0 does not exist");
        &self.c[n - 1]
    }

    fn check_level(&self, level: usize) -> Result<(), TowerError> {
        if level > self.depth() {
            return Err(TowerError::LevelOutOfRange { level, depth: self.depth() });
        }
        Ok(())
    }

    /// `#C_1 ⋯ #C_n`.
    pub fn c_product(&self, n: usize) -> BigInt {
        self.c[..n].iter().fold(BigInt::one(), |acc, c| acc * BigInt::from(c.len()))
    }

    pub fn lambda_f(&self, n: usize) -> BigRational {
        q_from_u128(self.f[n].count()) * self.group.point_weight()
    }

    /// Partial `(CFfin)` factors `λ(F_{n+1}) / (λ(F_n)·#C_{n+1})` for `n = 0..N`.
    pub fn cf_factors(&self) -> Vec<BigRational> {
        (0..self.depth())
            .map(|n| {
                self.lambda_f(n + 1) / (self.lambda_f(n) * BigRational::from_integer(BigInt::from(self.c[n].len())))
            })
            .collect()
    }

    pub fn measure_report(&self) -> MeasureReport {
        let factors = self.cf_factors();
        let mut partial = Vec::with_capacity(factors.len());
        let mut acc = BigRational::one();
        for f in &factors {
            acc *= f;
            partial.push(acc.clone());
        }
        let verdict = match self.hint {
            Some(h) => h,
            None if factors.iter().all(|f| f.is_one()) => MeasureType::FiniteType,
            None => MeasureType::UndecidedAtDepth,
        };
        MeasureReport { factors, partial_products: partial, verdict, normalization: self.normalization_for(verdict) }
    }

    fn normalization_for(&self, verdict: MeasureType) -> BigRational {
        match verdict {
            // μ(X_N) = 1 at the truncation
            MeasureType::FiniteType => {
                BigRational::from_integer(self.c_product(self.depth())) / self.lambda_f(self.depth())
            }
            _ => BigRational::one(),
        }
    }

    /// Constant multiplying `λ` so that `μ(X_N) = 1` for finite-type towers (1 otherwise).
    pub fn normalization(&self) -> BigRational {
        self.normalization_for(self.measure_report().verdict)
    }

    /// Measure of a single level-`n` atom.
    pub fn atom_measure(&self, n: usize) -> BigRational {
        self.normalization() * self.group.point_weight() / BigRational::from_integer(self.c_product(n))
    }

    /// Checks (CF2)–(CF4) exactly and reports Følner ratios for the probes.
    pub fn validate(&self, folner_probes: &[GroupElement]) -> Result<ValidationReport, TowerError> {
        for g in folner_probes {
            self.group.check(g)?;
        }
        let mut levels = Vec::with_capacity(self.depth());
        for n in 0..self.depth() {
            let cs = &self.c[n];
            let cf2 = cs.len() > 1;
            let cf3 = cs.iter().all(|c| self.f[n].right_translate_within(&self.group, c, &self.f[n + 1]));
            let cf4 = self.f[n].translates_disjoint(&self.group, cs);
            levels.push(LevelCheck { level: n, c_size: cs.len(), cf2, cf3, cf4 });
        }
        let mut folner = Vec::new();
        for (n, region) in self.f.iter().enumerate() {
            let size = region.count();
            for (i, g) in folner_probes.iter().enumerate() {
                let overlap = region.translate_overlap(&self.group, g);
                let ratio = q_from_u128(2 * (size - overlap)) / q_from_u128(size);
                folner.push(FolnerRow { level: n, probe: i, ratio });
            }
        }
        Ok(ValidationReport { levels, folner, measure: self.measure_report() })
    }

    pub fn cylinder(&self, level: usize, base: ElementSet) -> Result<CylinderSet, TowerError> {
        self.check_level(level)?;
        let kinds = self.group.coord_kinds();
        for b in &base {
            self.group.check(b)?;
            if !self.f[level].contains_with(&kinds, b) {
                return Err(TowerError::BaseOutside { level });
            }
        }
        Ok(CylinderSet { level, base: Region::Explicit(base) })
    }

    /// `[F_n]_n`.
    pub fn full_cylinder(&self, level: usize) -> Result<CylinderSet, TowerError> {
        self.check_level(level)?;
        Ok(CylinderSet { level, base: self.f[level].clone() })
    }

    pub fn cylinder_measure(&self, c: &CylinderSet) -> Result<BigRational, TowerError> {
        self.check_level(c.level)?;
        Ok(self.atom_measure(c.level) * q_from_u128(c.base.count()))
    }

    /// `[A]_n = [A·C_{n+1}⋯C_m]_m`.
    pub fn refine(&self, c: &CylinderSet, to_level: usize) -> Result<CylinderSet, TowerError> {
        self.check_level(to_level)?;
        if to_level < c.level {
            return Err(TowerError::RefineBackwards { from: c.level, to: to_level });
        }
        if to_level == c.level {
            return Ok(c.clone());
        }
        let mut base = c.base.to_set(&self.group);
        for n in c.level + 1..=to_level {
            base = base.product(&self.group, self.c(n));
        }
        Ok(CylinderSet { level: to_level, base: Region::Explicit(base) })
    }

    /// Splits `A` into the part that `g` keeps inside `F_n` (translated) and the
    /// defect whose translate leaves `F_n`.
    pub fn act(&self, g: &GroupElement, c: &CylinderSet) -> Result<(CylinderSet, CylinderSet), TowerError> {
        self.group.check(g)?;
        self.check_level(c.level)?;
        let kinds = self.group.coord_kinds();
        let region = &self.f[c.level];
        let mut moved = Vec::new();
        let mut defect = Vec::new();
        for a in &c.base.to_set(&self.group) {
            let ga = self.group.op_unchecked(g, a);
            if region.contains_with(&kinds, &ga) {
                moved.push(ga);
            } else {
                defect.push(a.clone());
            }
        }
        Ok((
            CylinderSet { level: c.level, base: Region::Explicit(ElementSet::new(moved)) },
            CylinderSet { level: c.level, base: Region::Explicit(ElementSet::new(defect)) },
        ))
    }

    /// `μ(T_g A △ A)` evaluated at `work_level`, counting defect mass as fully moved.
    pub fn symdiff_measure(&self, g: &GroupElement, c: &CylinderSet, work_level: usize) -> Result<BigRational, TowerError> {
        let refined = self.refine(c, work_level)?;
        let (moved, defect) = self.act(g, &refined)?;
        let original = refined.base.to_set(&self.group);
        let moved = moved.base.to_set(&self.group);
        let atoms = moved.symmetric_difference_len(&original) + defect.base.count() as usize;
        Ok(self.atom_measure(work_level) * BigRational::from_integer(BigInt::from(atoms)))
    }

    /// Product tower over `G_1 ⊕ G_2` with `C_n = C_n⁽¹⁾×C_n⁽²⁾`, `F_n = F_n⁽¹⁾×F_n⁽²⁾`.
    pub fn product(&self, other: &Tower) -> Result<Tower, TowerError> {
        if self.depth() != other.depth() {
            return Err(TowerError::DepthMismatch { left: self.depth(), right: other.depth() });
        }
        let group = GroupDescriptor::direct_sum(vec![self.group.clone(), other.group.clone()]);
        let f = self
            .f
            .iter()
            .zip(&other.f)
            .map(|(a, b)| a.product(&self.group, b, &other.group))
            .collect();
        let c = self.c.iter().zip(&other.c).map(|(a, b)| product_sets(a, b)).collect();
        let mut t = Tower::new(group, f, c)?;
        let (h1, h2) = (self.measure_report().verdict, other.measure_report().verdict);
        t.hint = Some(match (h1, h2) {
            (MeasureType::FiniteType, MeasureType::FiniteType) => MeasureType::FiniteType,
            (MeasureType::InfiniteType, _) | (_, MeasureType::InfiniteType) => MeasureType::InfiniteType,
            _ => MeasureType::UndecidedAtDepth,
        });
        Ok(t)
    }

    /// Reinterprets the coordinates under another descriptor with the same
    /// layout, e.g. `G ⊕ (trivial × J^p ⋊ Z(p))` as `G × J^p ⋊ Z(p)`.
    pub fn relabel(mut self, group: GroupDescriptor) -> Result<Tower, TowerError> {
        group.validate()?;
        if group.coord_kinds() != self.group.coord_kinds() {
            return Err(TowerError::Structural("relabelled group has a different coordinate layout".into()));
        }
        self.group = group;
        Ok(self)
    }

    pub fn to_doc(&self) -> TowerDoc {
        TowerDoc {
            f: self.f.iter().map(|r| RegionDoc::from_region(&self.group, r)).collect(),
            c: self.c.iter().map(|s| s.iter().map(|e| self.group.encode(e)).collect()).collect(),
            measure_hint: self.hint,
        }
    }

    pub fn from_doc(group: GroupDescriptor, doc: &TowerDoc) -> Result<Tower, TowerError> {
        let f = doc.f.iter().map(|r| r.to_region(&group)).collect::<Result<Vec<_>, _>>()?;
        let c = doc
            .c
            .iter()
            .map(|level| level.iter().map(|v| group.decode(v)).collect::<Result<ElementSet, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        let mut t = Tower::new(group, f, c)?;
        t.hint = doc.measure_hint;
        Ok(t)
    }
}

/// A level `n` and a subset of `F_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct CylinderSet {
    pub level: usize,
    pub base: Region,
}

impl CylinderSet {
    pub fn empty(level: usize) -> Self {
        CylinderSet { level, base: Region::Explicit(ElementSet::empty()) }
    }

    pub fn base_set(&self, group: &GroupDescriptor) -> ElementSet {
        self.base.to_set(group)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelCheck {
    /// Checks concern `(F_level, C_{level+1}, F_{level+1})`.
    pub level: usize,
    pub c_size: usize,
    pub cf2: bool,
    pub cf3: bool,
    pub cf4: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FolnerRow {
    pub level: usize,
    pub probe: usize,
    #[serde(with = "q_str")]
    pub ratio: BigRational,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeasureReport {
    #[serde(serialize_with = "ser_q_vec")]
    pub factors: Vec<BigRational>,
    #[serde(serialize_with = "ser_q_vec")]
    pub partial_products: Vec<BigRational>,
    pub verdict: MeasureType,
    #[serde(with = "q_str")]
    pub normalization: BigRational,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub levels: Vec<LevelCheck>,
    pub folner: Vec<FolnerRow>,
    pub measure: MeasureReport,
}

impl ValidationReport {
    /// All exact conditions hold; Følner ratios are diagnostics only.
    pub fn passed(&self) -> bool {
        self.levels.iter().all(|l| l.cf2 && l.cf3 && l.cf4)
    }

    pub fn table(&self) -> String {
        let mut out = String::from("level  #C   CF2   CF3   CF4   factor\n");
        for (l, f) in self.levels.iter().zip(&self.measure.factors) {
            out.push_str(&format!(
                "{:>5}  {:<4} {:<5} {:<5} {:<5} {}\n",
                l.level,
                l.c_size,
                l.cf2,
                l.cf3,
                l.cf4,
                crate::rational::fmt_q(f)
            ));
        }
        out.push_str(&format!("verdict: {:?}\n", self.measure.verdict));
        out
    }
}

pub(crate) fn ser_q_vec<S: serde::Serializer>(v: &[BigRational], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for q in v {
        seq.serialize_element(&crate::rational::fmt_q(q))?;
    }
    seq.end()
}

/// JSON form of a region: `{"explicit": [...]}` or `{"box": [{"lo":..,"len":..}]}`
/// (box bounds are in coordinate units, i.e. multiples of the mesh on lattices).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum RegionDoc {
    Explicit(Vec<Value>),
    Box(Vec<CoordRange>),
}

impl RegionDoc {
    fn from_region(group: &GroupDescriptor, r: &Region) -> RegionDoc {
        match r {
            Region::Box(b) => RegionDoc::Box(b.ranges.clone()),
            Region::Explicit(s) => RegionDoc::Explicit(s.iter().map(|e| group.encode(e)).collect()),
        }
    }

    fn to_region(&self, group: &GroupDescriptor) -> Result<Region, TowerError> {
        Ok(match self {
            RegionDoc::Box(ranges) => Region::Box(CoordBox::new(ranges.clone())),
            RegionDoc::Explicit(v) => {
                Region::Explicit(v.iter().map(|x| group.decode(x)).collect::<Result<ElementSet, _>>()?)
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TowerDoc {
    pub f: Vec<RegionDoc>,
    pub c: Vec<Vec<Value>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure_hint: Option<MeasureType>,
}

/// Convenience: an explicit region from integer coordinates.
pub fn explicit(group: &GroupDescriptor, pts: &[Vec<i64>]) -> Result<Region, GroupError> {
    Ok(Region::Explicit(
        pts.iter().map(|p| group.element(p.clone())).collect::<Result<ElementSet, _>>()?,
    ))
}

/// Convenience: a set from integer coordinates.
pub fn element_set(group: &GroupDescriptor, pts: &[Vec<i64>]) -> Result<ElementSet, GroupError> {
    pts.iter().map(|p| group.element(p.clone())).collect()
}

impl Tower {
    /// `#(C_n ∩ C_n g^{-1}) / #C_n`, the share of `C_n` that `g` maps back into `C_n`.
    pub fn return_ratio(&self, n: usize, g: &GroupElement) -> BigRational {
        let cs = self.c(n);
        let hits = cs.iter().filter(|c| cs.contains(&self.group.op_unchecked(g, c))).count();
        BigRational::new(BigInt::from(hits), BigInt::from(cs.len()))
    }

    pub fn is_zero_measure(&self, c: &CylinderSet) -> bool {
        self.cylinder_measure(c).map(|m| m.is_zero()).unwrap_or(false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z() -> GroupDescriptor {
        GroupDescriptor::integers()
    }

    fn ints(v: &[i64]) -> Vec<Vec<i64>> {
        v.iter().map(|x| vec![*x]).collect()
    }

    fn e(x: i64) -> GroupElement {
        GroupElement(vec![x])
    }

    fn small_tower() -> Tower {
        let g = z();
        Tower::new(
            g.clone(),
            vec![explicit(&g, &ints(&[0, 1])).unwrap(), explicit(&g, &ints(&(0..8).collect::<Vec<_>>())).unwrap()],
            vec![element_set(&g, &ints(&[0, 4])).unwrap()],
        )
        .unwrap()
    }

    #[test]
    fn validation_examples() {
        let t = small_tower();
        let rep = t.validate(&[e(1)]).unwrap();
        assert!(rep.passed());
        assert_eq!(rep.measure.factors, vec![BigRational::from_integer(2.into())]);

        let g = z();
        let bad = Tower::new(
            g.clone(),
            vec![
                explicit(&g, &ints(&(0..6).collect::<Vec<_>>())).unwrap(),
                explicit(&g, &ints(&(0..20).collect::<Vec<_>>())).unwrap(),
            ],
            vec![element_set(&g, &ints(&[0, 3])).unwrap()],
        )
        .unwrap();
        let rep = bad.validate(&[]).unwrap();
        assert!(!rep.levels[0].cf4);
        assert!(rep.levels[0].cf3);
        assert!(!rep.passed());
    }

    #[test]
    fn empty_level_is_structural_error() {
        let g = z();
        let err = Tower::new(
            g.clone(),
            vec![Region::Explicit(ElementSet::empty()), explicit(&g, &ints(&[0])).unwrap()],
            vec![element_set(&g, &ints(&[0, 1])).unwrap()],
        );
        assert_eq!(err.unwrap_err(), TowerError::EmptyLevel { level: 0 });
    }

    #[test]
    fn refine_examples() {
        let t = small_tower();
        let c = t.cylinder(0, element_set(&z(), &ints(&[0])).unwrap()).unwrap();
        assert_eq!(t.refine(&c, 0).unwrap(), c);
        let r = t.refine(&c, 1).unwrap();
        assert_eq!(r.base_set(&z()), element_set(&z(), &ints(&[0, 4])).unwrap());
        assert_eq!(t.cylinder_measure(&r).unwrap(), t.cylinder_measure(&c).unwrap());
        assert!(matches!(t.refine(&c, 2), Err(TowerError::LevelOutOfRange { .. })));
        assert!(matches!(t.refine(&r, 0), Err(TowerError::RefineBackwards { .. })));
    }

    #[test]
    fn act_examples() {
        let t = small_tower();
        let c = t.cylinder(1, element_set(&z(), &ints(&[0, 4])).unwrap()).unwrap();
        let (moved, defect) = t.act(&e(3), &c).unwrap();
        assert_eq!(moved.base_set(&z()), element_set(&z(), &ints(&[3, 7])).unwrap());
        assert!(defect.base.is_empty());
        let (moved, defect) = t.act(&e(5), &c).unwrap();
        assert_eq!(moved.base_set(&z()), element_set(&z(), &ints(&[5])).unwrap());
        assert_eq!(defect.base_set(&z()), element_set(&z(), &ints(&[4])).unwrap());
        let (moved, defect) = t.act(&e(0), &c).unwrap();
        assert_eq!(moved, c);
        assert!(defect.base.is_empty());
    }

    #[test]
    fn measures() {
        let t = small_tower();
        // single factor 2 ≠ 1 and no hint: undecided, λ-normalization
        assert_eq!(t.measure_report().verdict, MeasureType::UndecidedAtDepth);
        let a = t.cylinder(0, element_set(&z(), &ints(&[0])).unwrap()).unwrap();
        let m = t.cylinder_measure(&a).unwrap();
        assert_eq!(m, BigRational::one());
        // μ([Ac]_{1}) = μ([A]_0)/#C_1
        let ac = t.cylinder(1, element_set(&z(), &ints(&[4])).unwrap()).unwrap();
        assert_eq!(t.cylinder_measure(&ac).unwrap(), m / BigRational::from_integer(2.into()));
        assert!(t.cylinder_measure(&CylinderSet::empty(1)).unwrap().is_zero());
    }

    #[test]
    fn symdiff_identity_is_zero() {
        let t = small_tower();
        let c = t.cylinder(0, element_set(&z(), &ints(&[0, 1])).unwrap()).unwrap();
        assert!(t.symdiff_measure(&e(0), &c, 1).unwrap().is_zero());
        // shift by 4 maps {0,1}+{0,4} onto {4,5}+{0,4}: {0,1} lost, {8,9} defect
        let v = t.symdiff_measure(&e(4), &c, 1).unwrap();
        assert_eq!(v, BigRational::from_integer(2.into()));
    }

    #[test]
    fn product_cardinalities_and_measure() {
        let t = small_tower();
        let p = t.product(&t).unwrap();
        assert_eq!(p.c(1).len(), 4);
        assert!(p.validate(&[]).unwrap().passed());
        assert_eq!(p.cf_factors()[0], BigRational::from_integer(4.into()));
        let a = element_set(&z(), &ints(&[0])).unwrap();
        let b = element_set(&z(), &ints(&[0, 1])).unwrap();
        let ab = product_sets(&a, &b);
        let m1 = t.cylinder_measure(&t.cylinder(0, a).unwrap()).unwrap();
        let m2 = t.cylinder_measure(&t.cylinder(0, b).unwrap()).unwrap();
        let mp = p.cylinder_measure(&p.cylinder(0, ab).unwrap()).unwrap();
        assert_eq!(mp, m1 * m2);
        assert!(matches!(
            t.product(&Tower::new(z(), vec![explicit(&z(), &ints(&[0])).unwrap()], vec![]).unwrap()),
            Err(TowerError::DepthMismatch { .. })
        ));
    }

    #[test]
    fn doc_round_trip() {
        let t = small_tower();
        let doc = t.to_doc();
        let json = serde_json::to_string(&doc).unwrap();
        let back: TowerDoc = serde_json::from_str(&json).unwrap();
        assert_eq!(Tower::from_doc(z(), &back).unwrap(), t);
    }
}

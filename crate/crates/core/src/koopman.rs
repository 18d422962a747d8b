//! Finite-level Koopman operators of a tower and the correlation diagnostics
//! that stand in for operator convergence (`→ I`, `→ 0`) on cylinder indicators.

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::group::GroupElement;
use crate::rational::q_str;
use crate::region::ElementSet;
use crate::tower::{CylinderSet, Tower, TowerError};

/// Largest level that will be materialized atom by atom.
pub const MAX_ATOMS: u128 = 4_000_000;

/// `U_T(g)` restricted to level-`n` atom indicators: column `j` carries a single
/// 1 at the atom `g·a_j`, or nothing when the translate leaves `F_n` (defect).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KoopmanLevelMatrix {
    pub level: usize,
    pub element: GroupElement,
    pub atoms: ElementSet,
    pub image: Vec<Option<usize>>,
}

impl KoopmanLevelMatrix {
    pub fn dimension(&self) -> usize {
        self.atoms.len()
    }

    pub fn defect(&self) -> usize {
        self.image.iter().filter(|i| i.is_none()).count()
    }

    pub fn entry(&self, row: usize, col: usize) -> u8 {
        u8::from(self.image[col] == Some(row))
    }

    /// Column sums (0 on defect columns, 1 elsewhere).
    pub fn column_sums(&self) -> Vec<u8> {
        self.image.iter().map(|i| u8::from(i.is_some())).collect()
    }

    pub fn is_permutation(&self) -> bool {
        let mut hit = vec![false; self.image.len()];
        for i in self.image.iter() {
            match i {
                Some(r) if !hit[*r] => hit[*r] = true,
                _ => return false,
            }
        }
        true
    }

    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        let n = self.dimension();
        let mut m = vec![vec![0u8; n]; n];
        for (col, row) in self.image.iter().enumerate() {
            if let Some(r) = row {
                m[*r][col] = 1;
            }
        }
        m
    }
}

pub fn koopman_matrix(t: &Tower, g: &GroupElement, level: usize) -> Result<KoopmanLevelMatrix, TowerError> {
    if level > t.depth() {
        return Err(TowerError::LevelOutOfRange { level, depth: t.depth() });
    }
    t.group().check(g)?;
    let region = t.f(level);
    if region.count() > MAX_ATOMS {
        return Err(TowerError::Structural(format!("level {level} has {} atoms; too many to materialize", region.count())));
    }
    let atoms = region.to_set(t.group());
    let image = atoms
        .iter()
        .map(|a| {
            let ga = t.group().op_unchecked(g, a);
            atoms.as_slice().binary_search(&ga).ok()
        })
        .collect();
    Ok(KoopmanLevelMatrix { level, element: g.clone(), atoms, image })
}

/// One row of a diagnostic table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagnosticRow {
    pub index: usize,
    pub element: Vec<i64>,
    pub work_level: usize,
    #[serde(with = "q_str")]
    pub value: BigRational,
}

/// An element with the cylinders it is tested on and the level the action is
/// evaluated at.
#[derive(Clone, Debug)]
pub struct Probe {
    pub element: GroupElement,
    pub work_level: usize,
    pub cylinders: Vec<CylinderSet>,
}

/// Per element, `max_c μ(T_g c △ c)` at a common level.
pub fn rigidity_diagnostic(
    t: &Tower,
    seq: &[GroupElement],
    cylinders: &[CylinderSet],
    level: usize,
) -> Result<Vec<DiagnosticRow>, TowerError> {
    let probes: Vec<Probe> = seq
        .iter()
        .map(|g| Probe { element: g.clone(), work_level: level, cylinders: cylinders.to_vec() })
        .collect();
    rigidity_table(t, &probes)
}

/// Like [`rigidity_diagnostic`] with per-row cylinders and levels.
pub fn rigidity_table(t: &Tower, probes: &[Probe]) -> Result<Vec<DiagnosticRow>, TowerError> {
    probes
        .iter()
        .enumerate()
        .map(|(index, p)| {
            let mut value = BigRational::zero();
            for c in &p.cylinders {
                let v = t.symdiff_measure(&p.element, c, p.work_level)?;
                if v > value {
                    value = v;
                }
            }
            Ok(DiagnosticRow { index, element: p.element.0.clone(), work_level: p.work_level, value })
        })
        .collect()
}

/// `μ(T_g A ∩ B)` at `level`; the translate of defect atoms is dropped.
pub fn translated_overlap(
    t: &Tower,
    g: &GroupElement,
    a: &CylinderSet,
    b: &CylinderSet,
    level: usize,
) -> Result<BigRational, TowerError> {
    if is_whole_space(t, a) {
        return t.cylinder_measure(&t.refine(b, level)?);
    }
    let (moved, _) = t.act(g, &t.refine(a, level)?)?;
    let b = t.refine(b, level)?.base_set(t.group());
    let hits = moved.base_set(t.group()).intersection(&b).len();
    Ok(t.atom_measure(level) * BigRational::from_integer(hits.into()))
}

/// `[F_N]_N` is the whole truncated space and is invariant.
fn is_whole_space(t: &Tower, c: &CylinderSet) -> bool {
    c.level == t.depth() && c.base.count() == t.f(t.depth()).count()
}

/// Per element, `max |μ(T_g A ∩ B) − μ(A)μ(B)|` over the pairs.
pub fn mixing_diagnostic(
    t: &Tower,
    seq: &[GroupElement],
    pairs: &[(CylinderSet, CylinderSet)],
    level: usize,
) -> Result<Vec<DiagnosticRow>, TowerError> {
    seq.iter()
        .enumerate()
        .map(|(index, g)| {
            let mut value = BigRational::zero();
            for (a, b) in pairs {
                let joint = translated_overlap(t, g, a, b, level)?;
                let v = (joint - t.cylinder_measure(a)? * t.cylinder_measure(b)?).abs();
                if v > value {
                    value = v;
                }
            }
            Ok(DiagnosticRow { index, element: g.0.clone(), work_level: level, value })
        })
        .collect()
}

//! Generators for explicit towers: the rigid `ℝᵐ` tower, the auxiliary
//! `Jᵖ ⋊ ℤ(p)` towers, the 'good'-sequence classifier and the discrete rigid
//! tower built from arithmetic progressions.

use std::collections::HashSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::{BigRational, Rational64};
use num_traits::{CheckedMul, One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::group::{CoordKind, ElementOrder, GroupDescriptor, GroupElement, GroupError};
use crate::rational::{fmt_r64, q_pow, r64_str, r64_to_big, r64_vec_str};
use crate::region::{CoordBox, CoordRange, ElementSet, Region};
use crate::tower::{MeasureType, Tower, TowerError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConstructionError {
    #[error("invalid plan: {0}")]
    Plan(String),
    #[error("sequence cannot be sign-normalized: {0}")]
    Orientation(String),
    #[error("insufficient sequence at level {level}: {reason}")]
    InsufficientSequence { level: usize, reason: String },
    #[error("sequence is not good: {0}")]
    NotGood(String),
    #[error("unsupported J: {0}")]
    UnsupportedJ(String),
    #[error("level {level}: the group is exhausted before the growth factor {growth} is reached")]
    GroupExhausted { level: usize, growth: String },
    #[error("coordinate overflow at level {0}")]
    Overflow(usize),
    #[error("level {level}: {what} is too large to materialize")]
    TooLarge { level: usize, what: String },
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Tower(#[from] TowerError),
}

/// Summable positive rationals `α_1, α_2, …`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AlphaPlan {
    /// `α_n = first · ratio^{n-1}` with `0 < ratio < 1`.
    Geometric {
        #[serde(with = "r64_str")]
        first: Rational64,
        #[serde(with = "r64_str")]
        ratio: Rational64,
    },
    Explicit {
        #[serde(with = "r64_vec_str")]
        values: Vec<Rational64>,
    },
}

impl AlphaPlan {
    pub fn geometric(first: Rational64, ratio: Rational64) -> Self {
        AlphaPlan::Geometric { first, ratio }
    }

    pub fn validate(&self) -> Result<(), ConstructionError> {
        match self {
            AlphaPlan::Geometric { first, ratio } => {
                if *first <= Rational64::zero() || *ratio <= Rational64::zero() || *ratio >= Rational64::one() {
                    return Err(ConstructionError::Plan("geometric alphas need first > 0 and 0 < ratio < 1".into()));
                }
            }
            AlphaPlan::Explicit { values } => {
                if values.iter().any(|a| *a <= Rational64::zero()) {
                    return Err(ConstructionError::Plan("alphas must be positive".into()));
                }
            }
        }
        Ok(())
    }

    /// `α_n`, `n ≥ 1`.
    pub fn alpha(&self, n: usize) -> Option<Rational64> {
        match self {
            AlphaPlan::Geometric { first, ratio } => {
                let mut a = *first;
                for _ in 1..n {
                    a = CheckedMul::checked_mul(&a, ratio)?;
                }
                Some(a)
            }
            AlphaPlan::Explicit { values } => values.get(n.checked_sub(1)?).copied(),
        }
    }
}

/// Strictly increasing heights `h_1 < h_2 < …`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum HeightPlan {
    /// `h_n = start + (n-1)·step`.
    Linear { start: u64, step: u64 },
    Explicit { values: Vec<u64> },
}

impl HeightPlan {
    pub fn validate(&self) -> Result<(), ConstructionError> {
        let ok = match self {
            HeightPlan::Linear { start, step } => *start >= 1 && *step >= 1,
            HeightPlan::Explicit { values } => {
                values.first().is_none_or(|v| *v >= 1) && values.windows(2).all(|w| w[0] < w[1])
            }
        };
        if ok {
            Ok(())
        } else {
            Err(ConstructionError::Plan("heights must be positive and strictly increasing".into()))
        }
    }

    pub fn height(&self, n: usize) -> Option<u64> {
        match self {
            HeightPlan::Linear { start, step } => Some(start + (n as u64 - 1) * step),
            HeightPlan::Explicit { values } => values.get(n.checked_sub(1)?).copied(),
        }
    }
}

/// How the grid multiplicities `w_n⁽ⁱ⁾` of the rigid `ℝᵐ` tower are chosen.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WidthRule {
    /// `h g⁽ⁱ⁾ / (a⁽¹⁾_{n-1}(2w+1)) < α`.
    Printed,
    /// `h g⁽ⁱ⁾ / (a⁽ⁱ⁾_{n-1}(2w+1)) < α`, which is what the factor bound needs.
    PerCoordinate,
    /// Smallest `w` satisfying both.
    #[default]
    Both,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RigidPlan {
    pub alphas: AlphaPlan,
    pub heights: HeightPlan,
    pub width_rule: WidthRule,
    /// Minimal `(CFinf)` factor of the padded `F_n` in the discrete tower.
    pub growth: Rational64,
    /// `F_0`; defaults to `{identity}`.
    pub f0: Option<ElementSet>,
}

impl Default for RigidPlan {
    fn default() -> Self {
        RigidPlan {
            alphas: AlphaPlan::geometric(Rational64::new(1, 2), Rational64::new(1, 2)),
            heights: HeightPlan::Linear { start: 1, step: 1 },
            width_rule: WidthRule::Both,
            growth: Rational64::from_integer(2),
            f0: None,
        }
    }
}

// ---------------------------------------------------------------------------
// rigid ℝᵐ tower

/// `⌊(g_{n+1} − g_n) / (2 g_n)⌋`.
pub fn rm_height(g_n: i64, g_next: i64) -> i64 {
    Integer::div_floor(&(g_next - g_n), &(2 * g_n))
}

/// Coordinate permutation and sign flips putting a sequence into the positive
/// orthant with the dominant coordinate first.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Orientation {
    /// Normalized coordinate `j` is original coordinate `perm[j]`.
    pub perm: Vec<usize>,
    /// Sign applied to each original coordinate.
    pub signs: Vec<i64>,
}

impl Orientation {
    fn from_reference(v: &[i64]) -> Result<Self, ConstructionError> {
        let pivot = (0..v.len())
            .max_by(|&a, &b| v[a].abs().cmp(&v[b].abs()).then(b.cmp(&a)))
            .filter(|&i| v[i] != 0)
            .ok_or_else(|| ConstructionError::Orientation("reference element is zero".into()))?;
        let mut perm = vec![pivot];
        perm.extend((0..v.len()).filter(|&i| i != pivot));
        let signs = v.iter().map(|x| if *x < 0 { -1 } else { 1 }).collect();
        Ok(Orientation { perm, signs })
    }

    fn normalize(&self, v: &[i64]) -> Vec<i64> {
        self.perm.iter().map(|&i| self.signs[i] * v[i]).collect()
    }

    fn denormalize(&self, y: &[i64]) -> Vec<i64> {
        let mut out = vec![0; y.len()];
        for (j, &i) in self.perm.iter().enumerate() {
            out[i] = self.signs[i] * y[j];
        }
        out
    }

    fn denormalize_box(&self, ranges: &[CoordRange]) -> CoordBox {
        let mut out = vec![CoordRange::new(0, 1); ranges.len()];
        for (j, &i) in self.perm.iter().enumerate() {
            let r = ranges[j];
            out[i] = if self.signs[i] < 0 { CoordRange::new(-(r.lo + r.len as i64 - 1), r.len) } else { r };
        }
        CoordBox::new(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RmLevelCertificate {
    pub level: usize,
    /// Index into the input sequence.
    pub k: usize,
    pub h: u64,
    /// Grid multiplicities for the non-dominant coordinates.
    pub w: Vec<u64>,
    pub c_size: usize,
    #[serde(with = "r64_str")]
    pub alpha: Rational64,
    #[serde(with = "crate::rational::q_str")]
    pub factor: BigRational,
    #[serde(with = "crate::rational::q_str")]
    pub factor_bound: BigRational,
    pub factor_ok: bool,
    #[serde(with = "crate::rational::q_str")]
    pub ratio: BigRational,
    pub ratio_ok: bool,
}

#[derive(Clone, Debug)]
pub struct RmConstruction {
    pub tower: Tower,
    /// `k_1, …, k_{N+1}` (0-based indices into the input).
    pub subsequence: Vec<usize>,
    pub orientation: Orientation,
    pub levels: Vec<RmLevelCertificate>,
}

impl RmConstruction {
    /// `g_{k_n}` in original coordinates, `1 ≤ n ≤ N`.
    pub fn rigidity_element(&self, g_seq: &[GroupElement], n: usize) -> GroupElement {
        g_seq[self.subsequence[n - 1]].clone()
    }

    pub fn certified(&self) -> bool {
        self.levels.iter().all(|l| l.factor_ok && l.ratio_ok)
    }
}

fn smallest_w(x: &BigRational) -> u64 {
    // least w ≥ 1 with 2w + 1 > x
    let three = BigRational::from_integer(3.into());
    if *x < three {
        return 1;
    }
    let half = (x - BigRational::one()) / BigRational::from_integer(2.into());
    let w: BigInt = half.floor().to_integer() + 1;
    u64::try_from(w).unwrap_or(u64::MAX)
}

/// The rigid tower over a lattice in `ℝᵐ`: `F_n` are centered boxes and
/// `C_n = ⊔_{|k|≤h_n} (A_n + k g_n)`, so that `#(C_n ∩ (C_n − g_n))/#C_n = 2h_n/(2h_n+1)`.
pub fn rigid_tower_rm(
    desc: &GroupDescriptor,
    g_seq: &[GroupElement],
    plan: &RigidPlan,
    depth: usize,
) -> Result<RmConstruction, ConstructionError> {
    let m = match desc {
        GroupDescriptor::LatticeRm { dim, .. } => *dim,
        _ => return Err(ConstructionError::Plan("the rigid ℝᵐ tower needs a lattice-rm group".into())),
    };
    plan.alphas.validate()?;
    if depth == 0 {
        return Err(ConstructionError::Plan("depth must be at least 1".into()));
    }
    for g in g_seq {
        desc.check(g)?;
    }
    let last = g_seq.last().ok_or_else(|| ConstructionError::Orientation("empty sequence".into()))?;
    let orient = Orientation::from_reference(last.coords())?;
    let norm: Vec<Vec<i64>> = g_seq.iter().map(|g| orient.normalize(g.coords())).collect();
    let valid = |k: usize| norm[k][0] > 0 && norm[k].iter().all(|v| *v >= 0);

    let first = (0..norm.len())
        .find(|&k| valid(k))
        .ok_or(ConstructionError::InsufficientSequence { level: 0, reason: "no element in the normalized orthant".into() })?;
    let mut sel = vec![first];
    let mut alphas = Vec::with_capacity(depth);
    for n in 1..=depth {
        let alpha = plan
            .alphas
            .alpha(n)
            .ok_or_else(|| ConstructionError::Plan(format!("no alpha for level {n}")))?;
        let (a, b) = (*alpha.numer() as i128, *alpha.denom() as i128);
        let prev = norm[*sel.last().unwrap()][0] as i128;
        let next = (sel.last().unwrap() + 1..norm.len()).find(|&k| {
            if !valid(k) {
                return false;
            }
            let g1 = norm[k][0] as i128;
            let h = Integer::div_floor(&(g1 - prev), &(2 * prev));
            // g_{n+1}/g_n > 1/α + 1, h ≥ 1 and (2h+1)α > 2
            g1 * a > (a + b) * prev && h >= 1 && (2 * h + 1) * a > 2 * b
        });
        match next {
            Some(k) => sel.push(k),
            None => {
                return Err(ConstructionError::InsufficientSequence {
                    level: n,
                    reason: format!("no later element grows by more than 1/α+1 with α = {}", fmt_r64(&alpha)),
                })
            }
        }
        alphas.push(alpha);
    }

    let mut widths: Vec<Vec<i64>> = Vec::with_capacity(depth + 1);
    let mut w0 = vec![1i64; m];
    w0[0] = norm[sel[0]][0];
    widths.push(w0);
    let mut cs = Vec::with_capacity(depth);
    let mut ws = Vec::with_capacity(depth);
    let mut hs = Vec::with_capacity(depth);
    for n in 1..=depth {
        let g = &norm[sel[n - 1]];
        let g_next = &norm[sel[n]];
        let h = rm_height(g[0], g_next[0]);
        let alpha = r64_to_big(&alphas[n - 1]);
        let prev = &widths[n - 1];
        let mut level_w = Vec::with_capacity(m - 1);
        let mut next_w = vec![g_next[0]; m];
        for i in 1..m {
            let num = BigRational::from_integer(BigInt::from(2 * h as i128 * g[i] as i128));
            let per_coord = smallest_w(&(num.clone() / (&alpha * BigRational::from_integer(prev[i].into()))));
            let printed = smallest_w(&(num / (&alpha * BigRational::from_integer(g[0].into()))));
            let w = match plan.width_rule {
                WidthRule::Printed => printed,
                WidthRule::PerCoordinate => per_coord,
                WidthRule::Both => printed.max(per_coord),
            };
            let w_i = i64::try_from(w).map_err(|_| ConstructionError::Overflow(n))?;
            next_w[i] = (2 * w_i + 1)
                .checked_mul(prev[i])
                .and_then(|x| x.checked_add(2 * h * g[i]))
                .ok_or(ConstructionError::Overflow(n))?;
            level_w.push(w);
        }
        // C'_n = {(k g⁽¹⁾, l⁽ⁱ⁾ W⁽ⁱ⁾_{n-1} + k g⁽ⁱ⁾)}
        let mut pts = Vec::new();
        let mut ls = vec![0i64; m - 1];
        for k in -h..=h {
            for (i, l) in ls.iter_mut().enumerate() {
                *l = -(level_w[i] as i64);
            }
            loop {
                let mut y = vec![k * g[0]; m];
                for i in 1..m {
                    y[i] = ls[i - 1] * prev[i] + k * g[i];
                }
                pts.push(GroupElement(orient.denormalize(&y)));
                let mut i = 0;
                while i < m - 1 {
                    if ls[i] < level_w[i] as i64 {
                        ls[i] += 1;
                        break;
                    }
                    ls[i] = -(level_w[i] as i64);
                    i += 1;
                }
                if i == m - 1 {
                    break;
                }
            }
        }
        cs.push(ElementSet::new(pts));
        widths.push(next_w);
        ws.push(level_w);
        hs.push(h as u64);
    }

    let f = widths
        .iter()
        .map(|w| {
            let ranges: Vec<CoordRange> = w.iter().map(|&x| CoordRange::new(-(x / 2), x as u64)).collect();
            Region::Box(orient.denormalize_box(&ranges))
        })
        .collect();
    let tower = Tower::new(desc.clone(), f, cs)?.with_measure_hint(MeasureType::FiniteType);
    let factors = tower.cf_factors();
    let levels = (1..=depth)
        .map(|n| {
            let alpha = r64_to_big(&alphas[n - 1]);
            let bound = q_pow(&(BigRational::one() + alpha), m as u32);
            let h = hs[n - 1];
            let ratio = tower.return_ratio(n, &g_seq[sel[n - 1]]);
            let expected = BigRational::new(BigInt::from(2 * h), BigInt::from(2 * h + 1));
            RmLevelCertificate {
                level: n,
                k: sel[n - 1],
                h,
                w: ws[n - 1].clone(),
                c_size: tower.c(n).len(),
                alpha: alphas[n - 1],
                factor_ok: factors[n - 1] < bound,
                factor: factors[n - 1].clone(),
                factor_bound: bound,
                ratio_ok: ratio == expected,
                ratio,
            }
        })
        .collect();
    Ok(RmConstruction { tower, subsequence: sel, orientation: orient, levels })
}

// ---------------------------------------------------------------------------
// auxiliary towers over Jᵖ ⋊ ℤ(p)

/// The 3-adic tower over `ℤᵖ ⋊ ℤ(p)`.
pub fn aux_tower_zp(p: i64, depth: usize) -> Result<Tower, ConstructionError> {
    aux_tower_j(&GroupDescriptor::integers(), p, depth)
}

/// Auxiliary tower over `Jᵖ ⋊ ℤ(p)` for `J = ℤ` or `J = ℤ(q)^{⊕ℕ}` (truncated
/// to a finite support of at least `depth` summands). Every `(CFfin)` factor is 1.
pub fn aux_tower_j(j: &GroupDescriptor, p: i64, depth: usize) -> Result<Tower, ConstructionError> {
    if p < 2 {
        return Err(ConstructionError::Plan("p must be at least 2".into()));
    }
    let pu = p as usize;
    let group = GroupDescriptor::semidirect(GroupDescriptor::trivial(), j.clone(), p);
    group.validate()?;
    let (f, c) = match j {
        GroupDescriptor::FreeAbelian { rank: 1 } => {
            let f = (0..=depth)
                .map(|n| {
                    let side = 3i64.checked_pow(n as u32).ok_or(ConstructionError::Overflow(n))?;
                    let mut ranges = vec![CoordRange::new(-(side - 1) / 2, side as u64); pu];
                    ranges.push(CoordRange::new(0, pu as u64));
                    Ok(Region::Box(CoordBox::new(ranges)))
                })
                .collect::<Result<Vec<_>, ConstructionError>>()?;
            let c = (1..=depth)
                .map(|n| {
                    let step = 3i64.pow(n as u32 - 1);
                    tuples(&[-step, 0, step], pu)
                        .map(|mut x| {
                            x.push(0);
                            GroupElement(x)
                        })
                        .collect()
                })
                .collect();
            (f, c)
        }
        GroupDescriptor::CyclicSum { order, support } => {
            if *support < depth {
                return Err(ConstructionError::UnsupportedJ(format!(
                    "ℤ({order})^⊕ truncated to {support} summands cannot carry depth {depth}"
                )));
            }
            let q = *order;
            let f = (0..=depth)
                .map(|n| {
                    let mut ranges = Vec::with_capacity(pu * support + 1);
                    for _ in 0..pu {
                        for i in 0..*support {
                            ranges.push(if i < n { CoordRange::new(0, q as u64) } else { CoordRange::new(0, 1) });
                        }
                    }
                    ranges.push(CoordRange::new(0, pu as u64));
                    Region::Box(CoordBox::new(ranges))
                })
                .collect();
            let residues: Vec<i64> = (0..q).collect();
            let c = (1..=depth)
                .map(|n| {
                    tuples(&residues, pu)
                        .map(|t| {
                            let mut x = vec![0i64; pu * support + 1];
                            for (copy, v) in t.iter().enumerate() {
                                x[copy * support + n - 1] = *v;
                            }
                            GroupElement(x)
                        })
                        .collect()
                })
                .collect();
            (f, c)
        }
        other => return Err(ConstructionError::UnsupportedJ(format!("{other:?}"))),
    };
    Ok(Tower::new(group, f, c)?.with_measure_hint(MeasureType::FiniteType))
}

/// All length-`len` tuples over `values`.
fn tuples(values: &[i64], len: usize) -> impl Iterator<Item = Vec<i64>> + '_ {
    let total = values.len().pow(len as u32);
    (0..total).map(move |mut idx| {
        let mut t = Vec::with_capacity(len);
        for _ in 0..len {
            t.push(values[idx % values.len()]);
            idx /= values.len();
        }
        t
    })
}

/// Product of a tower over `G` with an auxiliary tower over `trivial × Jᵖ ⋊ ℤ(p)`,
/// read as a tower over `Γ = G × Jᵖ ⋊ ℤ(p)` (the coordinate layouts coincide).
pub fn gamma_tower(base: &Tower, aux: &Tower) -> Result<Tower, ConstructionError> {
    let (fiber, p) = match aux.group() {
        GroupDescriptor::Semidirect { base: b, fiber, p } if b.width() == 0 => (fiber.as_ref().clone(), *p),
        _ => return Err(ConstructionError::Plan("aux tower must live on trivial × Jᵖ ⋊ ℤ(p)".into())),
    };
    let gamma = GroupDescriptor::semidirect(base.group().clone(), fiber, p);
    Ok(base.product(aux)?.relabel(gamma)?)
}

// ---------------------------------------------------------------------------
// good sequences

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GoodCase {
    CyclicSubgroup,
    UnboundedOrders,
    BoundedIndependent,
    Rejected,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GoodWitness {
    /// `g_k = multipliers[k] · g0`.
    Generator { g0: Vec<i64>, multipliers: Vec<i64> },
    OrderTable { orders: Vec<u64> },
    Independence { orders: Vec<u64>, method: String },
    Reason(String),
}

/// Classification of a finite prefix; asymptotic clauses are only supported
/// by prefix evidence.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GoodSequenceCertificate {
    pub case: GoodCase,
    pub witness: GoodWitness,
    pub prefix_len: usize,
    pub prefix_certified: bool,
}

impl GoodSequenceCertificate {
    fn rejected(prefix_len: usize, reason: impl Into<String>) -> Self {
        GoodSequenceCertificate {
            case: GoodCase::Rejected,
            witness: GoodWitness::Reason(reason.into()),
            prefix_len,
            prefix_certified: false,
        }
    }
}

const EXHAUSTIVE_LIMIT: u64 = 1_000_000;

pub fn classify_good(g_seq: &[GroupElement], desc: &GroupDescriptor, order_bound: u64) -> GoodSequenceCertificate {
    let len = g_seq.len();
    if len == 0 {
        return GoodSequenceCertificate::rejected(0, "empty prefix");
    }
    if !desc.is_abelian() {
        return GoodSequenceCertificate::rejected(len, "the base group must be Abelian");
    }
    if let Some(e) = g_seq.iter().find(|g| desc.check(g).is_err()) {
        return GoodSequenceCertificate::rejected(len, format!("{e:?} does not conform to the group"));
    }
    if let Some((g0, multipliers)) = common_generator(desc, g_seq) {
        return GoodSequenceCertificate {
            case: GoodCase::CyclicSubgroup,
            witness: GoodWitness::Generator { g0: g0.0, multipliers },
            prefix_len: len,
            prefix_certified: true,
        };
    }
    let mut orders = Vec::with_capacity(len);
    for g in g_seq {
        match desc.element_order(g, order_bound) {
            Ok(ElementOrder::Finite(o)) => orders.push(o),
            _ => {
                return GoodSequenceCertificate::rejected(
                    len,
                    "mixes elements of infinite order with others outside a single cyclic subgroup",
                )
            }
        }
    }
    if orders.contains(&1) {
        return GoodSequenceCertificate::rejected(len, "contains the identity");
    }
    let half = len / 2;
    if half > 0 && orders[half..].iter().max() > orders[..half].iter().max() {
        return GoodSequenceCertificate {
            case: GoodCase::UnboundedOrders,
            witness: GoodWitness::OrderTable { orders },
            prefix_len: len,
            prefix_certified: true,
        };
    }
    match independent(desc, g_seq, &orders) {
        Ok(method) => GoodSequenceCertificate {
            case: GoodCase::BoundedIndependent,
            witness: GoodWitness::Independence { orders, method },
            prefix_len: len,
            prefix_certified: true,
        },
        Err(reason) => GoodSequenceCertificate::rejected(len, reason),
    }
}

/// Finds `g0` of infinite order with every `g_k ∈ ⟨g0⟩`.
fn common_generator(desc: &GroupDescriptor, gs: &[GroupElement]) -> Option<(GroupElement, Vec<i64>)> {
    let kinds = desc.coord_kinds();
    let free: Vec<usize> = (0..kinds.len()).filter(|&i| !matches!(kinds[i], CoordKind::Mod(_))).collect();
    let first = free.iter().map(|&i| gs[0].0[i]).collect::<Vec<_>>();
    let pivot = first.iter().position(|v| *v != 0)?;
    let g = first.iter().fold(0i64, |acc, v| acc.gcd(v));
    let sign = first[pivot].signum();
    let u: Vec<i64> = first.iter().map(|v| sign * v / g).collect();
    let mut mult = Vec::with_capacity(gs.len());
    for x in gs {
        let v: Vec<i64> = free.iter().map(|&i| x.0[i]).collect();
        if v[pivot] % u[pivot] != 0 {
            return None;
        }
        let m = v[pivot] / u[pivot];
        if m == 0 || v.iter().zip(&u).any(|(a, b)| *a != m * b) {
            return None;
        }
        mult.push(m);
    }
    let big = mult.iter().fold(0i64, |acc, v| acc.gcd(v));
    'divisors: for e in (1..=big).filter(|e| big % e == 0) {
        let ms: Vec<i64> = mult.iter().map(|m| m / e).collect();
        let mut g0 = vec![0i64; kinds.len()];
        for (j, &i) in free.iter().enumerate() {
            g0[i] = e * u[j];
        }
        for (i, kind) in kinds.iter().enumerate() {
            if let CoordKind::Mod(q) = kind {
                if *q as u64 > EXHAUSTIVE_LIMIT {
                    return None;
                }
                let t = (0..*q).find(|t| gs.iter().zip(&ms).all(|(x, m)| (m * t).rem_euclid(*q) == x.0[i]));
                match t {
                    Some(t) => g0[i] = t,
                    None => continue 'divisors,
                }
            }
        }
        return Some((GroupElement(g0), ms));
    }
    None
}

/// Independence of the cyclic subgroups `⟨g_k⟩`.
fn independent(desc: &GroupDescriptor, gs: &[GroupElement], orders: &[u64]) -> Result<String, String> {
    let supports: Vec<Vec<usize>> =
        gs.iter().map(|g| (0..g.0.len()).filter(|&i| g.0[i] != 0).collect()).collect();
    let mut used = HashSet::new();
    if supports.iter().all(|s| s.iter().all(|i| used.insert(*i))) {
        return Ok("disjoint-supports".into());
    }
    let total = orders.iter().try_fold(1u64, |acc, o| acc.checked_mul(*o).filter(|t| *t <= EXHAUSTIVE_LIMIT));
    let Some(total) = total else {
        return Err("independence inconclusive: overlapping supports and too many combinations".into());
    };
    // ⟨g_1⟩ ⊕ ⋯ ⊕ ⟨g_k⟩ → G is injective iff it hits `total` distinct sums
    let mut sums: HashSet<GroupElement> = HashSet::from([desc.identity()]);
    for (g, o) in gs.iter().zip(orders) {
        let mut next = HashSet::with_capacity(sums.len() * *o as usize);
        for s in &sums {
            let mut acc = s.clone();
            for _ in 0..*o {
                next.insert(acc.clone());
                acc = desc.op_unchecked(&acc, g);
            }
        }
        sums = next;
    }
    if sums.len() as u64 == total {
        Ok("exhaustive".into())
    } else {
        Err("the cyclic subgroups are not independent on the prefix".into())
    }
}

// ---------------------------------------------------------------------------
// discrete rigid tower

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProgressionKind {
    Progression,
    Subgroup,
}

/// `{0, s, …, h s}` when `ord s > h`, else `⟨s⟩`; with the exact return ratio
/// `#(C ∩ (C − s))/#C`.
pub fn progression_set(
    desc: &GroupDescriptor,
    s: &GroupElement,
    h: u64,
) -> Result<(ElementSet, ProgressionKind, BigRational), ConstructionError> {
    let (kind, len) = match desc.element_order(s, h)? {
        ElementOrder::Finite(o) => (ProgressionKind::Subgroup, o),
        ElementOrder::InfiniteWithinBound => (ProgressionKind::Progression, h + 1),
    };
    let set: ElementSet = (0..len as i64).map(|j| desc.pow(s, j)).collect();
    let hits = set.iter().filter(|c| set.contains(&desc.op_unchecked(s, c))).count();
    let ratio = BigRational::new(BigInt::from(hits), BigInt::from(set.len()));
    Ok((set, kind, ratio))
}

/// `x ∈ F − F`.
pub fn in_difference_set(desc: &GroupDescriptor, f: &ElementSet, x: &GroupElement) -> bool {
    f.iter().any(|y| f.contains(&desc.op_unchecked(x, y)))
}

/// Case (i) start index: one past the last `g_k ∈ F − F`.
pub fn cyclic_case_start(desc: &GroupDescriptor, g_seq: &[GroupElement], f: &ElementSet) -> usize {
    g_seq.iter().rposition(|g| in_difference_set(desc, f, g)).map_or(0, |k| k + 1)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscreteLevelCertificate {
    pub level: usize,
    pub k: usize,
    pub s: Vec<i64>,
    pub h: u64,
    pub kind: ProgressionKind,
    pub c_size: usize,
    #[serde(with = "crate::rational::q_str")]
    pub ratio: BigRational,
    pub ratio_ok: bool,
    pub independent: bool,
    #[serde(with = "crate::rational::q_str")]
    pub factor: BigRational,
}

#[derive(Clone, Debug)]
pub struct DiscreteConstruction {
    pub tower: Tower,
    pub subsequence: Vec<usize>,
    pub classification: GoodSequenceCertificate,
    pub levels: Vec<DiscreteLevelCertificate>,
    /// `g_{k_n} − d` per level.
    pub steps: Vec<GroupElement>,
}

impl DiscreteConstruction {
    pub fn certified(&self) -> bool {
        self.levels.iter().all(|l| l.ratio_ok && l.independent)
    }
}

/// The discrete rigid tower: `C_n` is an arithmetic progression (or cyclic
/// subgroup) with difference `g_{k_n} − d`, independent of `F_{n-1}`, and `F_n`
/// is `F_{n-1}C_n` padded by the smallest exhaustion ball reaching the growth factor.
pub fn rigid_tower_discrete(
    g_seq: &[GroupElement],
    desc: &GroupDescriptor,
    d: &GroupElement,
    plan: &RigidPlan,
    depth: usize,
    order_bound: u64,
) -> Result<DiscreteConstruction, ConstructionError> {
    plan.heights.validate()?;
    if plan.growth < Rational64::one() {
        return Err(ConstructionError::Plan("growth must be at least 1".into()));
    }
    desc.check(d)?;
    let cert = classify_good(g_seq, desc, order_bound);
    if cert.case == GoodCase::Rejected {
        let GoodWitness::Reason(r) = &cert.witness else { unreachable!() };
        return Err(ConstructionError::NotGood(r.clone()));
    }
    let f0 = match &plan.f0 {
        Some(f) if !f.is_empty() => f.clone(),
        Some(_) => return Err(ConstructionError::Plan("F_0 must be nonempty".into())),
        None => ElementSet::singleton(desc.identity()),
    };
    let d_inv = desc.inv(d)?;
    let kinds = desc.coord_kinds();
    let mut f = vec![f0];
    let mut cs = Vec::with_capacity(depth);
    let mut sel: Vec<usize> = Vec::with_capacity(depth);
    let mut steps = Vec::with_capacity(depth);
    let mut kinds_out = Vec::with_capacity(depth);
    let mut ratios = Vec::with_capacity(depth);
    for n in 1..=depth {
        let h = plan.heights.height(n).ok_or_else(|| ConstructionError::Plan(format!("no height for level {n}")))?;
        let prev = &f[n - 1];
        let after = sel.last().map_or(0, |k| k + 1);
        let start = match cert.case {
            GoodCase::CyclicSubgroup => after.max(cyclic_case_start(desc, g_seq, prev)),
            _ => after,
        };
        let mut chosen = None;
        for k in start..g_seq.len() {
            let s = desc.op_unchecked(&g_seq[k], &d_inv);
            if s == desc.identity() {
                continue;
            }
            let span = match desc.element_order(&s, h)? {
                ElementOrder::Finite(o) => o - 1,
                ElementOrder::InfiniteWithinBound => h,
            };
            if (1..=span as i64).all(|j| !in_difference_set(desc, prev, &desc.pow(&s, j))) {
                chosen = Some((k, s));
                break;
            }
        }
        let (k, s) = chosen.ok_or_else(|| ConstructionError::InsufficientSequence {
            level: n,
            reason: format!(
                "{:?}: no index from {start} on gives a progression independent of F_{}",
                cert.case,
                n - 1
            ),
        })?;
        let (c, kind, ratio) = progression_set(desc, &s, h)?;
        let base = prev.product(desc, &c);
        let target = r64_to_big(&plan.growth) * BigRational::from_integer(BigInt::from(prev.len() * c.len()));
        let padded = pad_to(desc, &kinds, base, &target, n)?.ok_or(ConstructionError::GroupExhausted {
            level: n,
            growth: fmt_r64(&plan.growth),
        })?;
        f.push(padded);
        cs.push(c);
        sel.push(k);
        steps.push(s);
        kinds_out.push(kind);
        ratios.push(ratio);
    }
    let hint = if plan.growth > Rational64::one() { MeasureType::InfiniteType } else { MeasureType::UndecidedAtDepth };
    let regions = f.into_iter().map(Region::Explicit).collect();
    let tower = Tower::new(desc.clone(), regions, cs)?.with_measure_hint(hint);
    let factors = tower.cf_factors();
    let levels = (1..=depth)
        .map(|n| {
            let h = plan.heights.height(n).unwrap();
            let c = tower.c(n);
            let Region::Explicit(prev) = tower.f(n - 1) else { unreachable!() };
            let independent = tower.f(n - 1).translates_disjoint(desc, c)
                && c.iter().all(|x| *x == desc.identity() || !in_difference_set(desc, prev, x));
            let floor = BigRational::new(BigInt::from(h), BigInt::from(h + 1));
            DiscreteLevelCertificate {
                level: n,
                k: sel[n - 1],
                s: steps[n - 1].0.clone(),
                h,
                kind: kinds_out[n - 1],
                c_size: c.len(),
                ratio_ok: ratios[n - 1] >= floor,
                ratio: ratios[n - 1].clone(),
                independent,
                factor: factors[n - 1].clone(),
            }
        })
        .collect();
    Ok(DiscreteConstruction { tower, subsequence: sel, classification: cert, levels, steps })
}

/// Largest padding ball that will be materialized.
const MAX_PAD: u128 = 4_000_000;

/// `base ∪ B_r` for the smallest `r` with `#(base ∪ B_r) ≥ target`; `Ok(None)`
/// when the group is exhausted first.
fn pad_to(
    desc: &GroupDescriptor,
    kinds: &[CoordKind],
    base: ElementSet,
    target: &BigRational,
    level: usize,
) -> Result<Option<ElementSet>, ConstructionError> {
    let big = |x: u128| BigRational::from_integer(BigInt::from(x));
    if big(base.len() as u128) >= *target {
        return Ok(Some(base));
    }
    // decide from counts when possible; enumerate only in the ambiguous band
    let reaches = |r: u64| -> Result<bool, ConstructionError> {
        let b = CoordBox::ball(desc, r).count();
        if big(b) >= *target {
            return Ok(true);
        }
        if big(b + base.len() as u128) < *target {
            return Ok(false);
        }
        Ok(big(with_ball(desc, kinds, &base, r, level)?.len() as u128) >= *target)
    };
    let (mut lo, mut hi) = (0u64, 1u64);
    loop {
        if reaches(hi)? {
            break;
        }
        if CoordBox::ball(desc, hi).count() == CoordBox::ball(desc, 2 * hi).count() {
            return Ok(None);
        }
        lo = hi;
        hi *= 2;
    }
    // smallest r in (lo, hi] that reaches
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if reaches(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let r = if lo == 0 && reaches(0)? { 0 } else { hi };
    with_ball(desc, kinds, &base, r, level).map(Some)
}

fn with_ball(
    desc: &GroupDescriptor,
    kinds: &[CoordKind],
    base: &ElementSet,
    r: u64,
    level: usize,
) -> Result<ElementSet, ConstructionError> {
    let ball = CoordBox::ball(desc, r);
    if ball.count() > MAX_PAD {
        return Err(ConstructionError::TooLarge { level, what: format!("a padding ball of {} elements", ball.count()) });
    }
    Ok(base.union(&ElementSet::new(ball.enumerate(kinds))))
}

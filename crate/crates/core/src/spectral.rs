//! Finite-dimensional unitary representations of finitely generated Abelian
//! groups: multiplicity sets, direct sums, tensor products, symmetric powers
//! and the truncated Fock exponential.
//!
//! Exact representations are simultaneously diagonal with root-of-unity
//! eigenvalues `e^{2πiφ}`, `φ ∈ ℚ/ℤ`; their spectra are compared exactly. Dense
//! representations go through a joint eigendecomposition and tolerance clustering.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use num_rational::Rational64;
use num_traits::{One, Zero};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diamond;
use crate::rational::r64_vec_str;

pub type MultiplicitySet = BTreeSet<u64>;

/// Default clustering tolerance for floating eigenvalues.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Residual above which a computed joint eigenvector is considered unresolved.
const RESIDUAL_LIMIT: f64 = 1e-7;

/// Largest tensor space `d^n` materialized by the dense symmetric power.
const MAX_TENSOR_DIM: usize = 4096;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("generator {generator} is not unitary (deviation {deviation:e})")]
    NotUnitary { generator: usize, deviation: f64 },
    #[error("generators {a} and {b} do not commute (deviation {deviation:e})")]
    NotCommuting { a: usize, b: usize, deviation: f64 },
    #[error("representations of different groups ({left} vs {right} generators)")]
    GeneratorMismatch { left: usize, right: usize },
    #[error("malformed representation: {0}")]
    Shape(String),
    #[error("joint eigendecomposition did not separate the spectrum")]
    Unresolved,
}

/// A unitary representation given by the images of the group generators.
#[derive(Clone, Debug, PartialEq)]
pub enum FiniteRep {
    /// Basis vector `j` is a joint eigenvector with phases `phases[j][k]` for generator `k`.
    Diagonal { generators: usize, phases: Vec<Vec<Rational64>> },
    Dense { matrices: Vec<DMatrix<Complex64>> },
}

/// `φ mod 1` in `[0, 1)`.
pub fn reduce_phase(p: Rational64) -> Rational64 {
    p - p.floor()
}

fn root_of_unity(p: Rational64) -> Complex64 {
    let angle = 2.0 * std::f64::consts::PI * (*p.numer() as f64) / (*p.denom() as f64);
    Complex64::from_polar(1.0, angle)
}

impl FiniteRep {
    pub fn diagonal(generators: usize, phases: Vec<Vec<Rational64>>) -> Result<Self, SpectralError> {
        if phases.iter().any(|p| p.len() != generators) {
            return Err(SpectralError::Shape(format!("every basis vector needs {generators} phases")));
        }
        let phases = phases.into_iter().map(|row| row.into_iter().map(reduce_phase).collect()).collect();
        Ok(FiniteRep::Diagonal { generators, phases })
    }

    /// `λ I_dim` for a one-generator group, `λ = e^{2πiφ}`.
    pub fn scalar(phase: Rational64, dim: usize) -> Self {
        FiniteRep::Diagonal { generators: 1, phases: vec![vec![reduce_phase(phase)]; dim] }
    }

    /// The trivial one-dimensional representation.
    pub fn trivial(generators: usize) -> Self {
        FiniteRep::Diagonal { generators, phases: vec![vec![Rational64::zero(); generators]] }
    }

    /// Checks unitarity and pairwise commutation within `tol`.
    pub fn from_matrices(matrices: Vec<DMatrix<Complex64>>, tol: f64) -> Result<Self, SpectralError> {
        let d = matrices.first().map_or(0, |m| m.nrows());
        for (k, m) in matrices.iter().enumerate() {
            if m.nrows() != d || m.ncols() != d {
                return Err(SpectralError::Shape(format!("generator {k} is not {d}×{d}")));
            }
            let dev = (m.adjoint() * m - DMatrix::<Complex64>::identity(d, d)).norm();
            if dev > tol.max(1e-12) * (d.max(1) as f64) * 1e3 {
                return Err(SpectralError::NotUnitary { generator: k, deviation: dev });
            }
        }
        for a in 0..matrices.len() {
            for b in a + 1..matrices.len() {
                let dev = (&matrices[a] * &matrices[b] - &matrices[b] * &matrices[a]).norm();
                if dev > tol.max(1e-12) * (d.max(1) as f64) * 1e3 {
                    return Err(SpectralError::NotCommuting { a, b, deviation: dev });
                }
            }
        }
        Ok(FiniteRep::Dense { matrices })
    }

    pub fn generators(&self) -> usize {
        match self {
            FiniteRep::Diagonal { generators, .. } => *generators,
            FiniteRep::Dense { matrices } => matrices.len(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            FiniteRep::Diagonal { phases, .. } => phases.len(),
            FiniteRep::Dense { matrices } => matrices.first().map_or(0, |m| m.nrows()),
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, FiniteRep::Diagonal { .. })
    }

    pub fn to_dense(&self) -> Vec<DMatrix<Complex64>> {
        match self {
            FiniteRep::Dense { matrices } => matrices.clone(),
            FiniteRep::Diagonal { generators, phases } => (0..*generators)
                .map(|k| {
                    DMatrix::from_diagonal(&DVector::from_iterator(
                        phases.len(),
                        phases.iter().map(|p| root_of_unity(p[k])),
                    ))
                })
                .collect(),
        }
    }

    /// Joint spectrum with multiplicities.
    pub fn spectrum(&self, tol: f64) -> Result<Spectrum, SpectralError> {
        match self {
            FiniteRep::Diagonal { phases, .. } => {
                let mut map = BTreeMap::new();
                for p in phases {
                    *map.entry(p.clone()).or_insert(0u64) += 1;
                }
                Ok(Spectrum::Exact(map))
            }
            FiniteRep::Dense { matrices } => Ok(Spectrum::Numeric(joint_spectrum(matrices, tol)?)),
        }
    }

    /// Set of dimensions of the nonzero isotypic components.
    pub fn multiplicity_set(&self, tol: f64) -> Result<MultiplicitySet, SpectralError> {
        Ok(self.spectrum(tol)?.multiplicities())
    }

    fn same_group(&self, other: &FiniteRep) -> Result<(), SpectralError> {
        if self.generators() != other.generators() {
            return Err(SpectralError::GeneratorMismatch { left: self.generators(), right: other.generators() });
        }
        Ok(())
    }

    /// `(U ⊗ V)(g) = U(g) ⊗ V(g)`, Kronecker ordering.
    pub fn tensor(&self, other: &FiniteRep) -> Result<FiniteRep, SpectralError> {
        self.same_group(other)?;
        match (self, other) {
            (FiniteRep::Diagonal { generators, phases: a }, FiniteRep::Diagonal { phases: b, .. }) => {
                let phases = a
                    .iter()
                    .flat_map(|x| b.iter().map(move |y| x.iter().zip(y).map(|(p, q)| reduce_phase(p + q)).collect()))
                    .collect();
                Ok(FiniteRep::Diagonal { generators: *generators, phases })
            }
            _ => {
                let (a, b) = (self.to_dense(), other.to_dense());
                Ok(FiniteRep::Dense { matrices: a.iter().zip(&b).map(|(x, y)| x.kronecker(y)).collect() })
            }
        }
    }

    pub fn direct_sum(&self, other: &FiniteRep) -> Result<FiniteRep, SpectralError> {
        self.same_group(other)?;
        match (self, other) {
            (FiniteRep::Diagonal { generators, phases: a }, FiniteRep::Diagonal { phases: b, .. }) => {
                Ok(FiniteRep::Diagonal { generators: *generators, phases: a.iter().chain(b).cloned().collect() })
            }
            _ => {
                let (a, b) = (self.to_dense(), other.to_dense());
                let (da, db) = (self.dim(), other.dim());
                let matrices = a
                    .iter()
                    .zip(&b)
                    .map(|(x, y)| {
                        let mut m = DMatrix::zeros(da + db, da + db);
                        m.view_mut((0, 0), (da, da)).copy_from(x);
                        m.view_mut((da, da), (db, db)).copy_from(y);
                        m
                    })
                    .collect();
                Ok(FiniteRep::Dense { matrices })
            }
        }
    }

    /// `W U W*` for a unitary `W`.
    pub fn conjugate(&self, w: &DMatrix<Complex64>) -> Result<FiniteRep, SpectralError> {
        if w.nrows() != self.dim() || w.ncols() != self.dim() {
            return Err(SpectralError::Shape("conjugating matrix has the wrong size".into()));
        }
        let wa = w.adjoint();
        Ok(FiniteRep::Dense { matrices: self.to_dense().iter().map(|u| w * u * &wa).collect() })
    }

    /// `U^{⊙n}` on the symmetric subspace of `H^{⊗n}`; `n = 0` is the trivial rep.
    pub fn sym_power(&self, n: usize) -> Result<FiniteRep, SpectralError> {
        if n == 0 {
            return Ok(FiniteRep::trivial(self.generators()));
        }
        let d = self.dim();
        let multisets = multisets(d, n);
        match self {
            FiniteRep::Diagonal { generators, phases } => {
                let out = multisets
                    .iter()
                    .map(|ms| {
                        (0..*generators)
                            .map(|k| reduce_phase(ms.iter().map(|&i| phases[i][k]).sum()))
                            .collect()
                    })
                    .collect();
                Ok(FiniteRep::Diagonal { generators: *generators, phases: out })
            }
            FiniteRep::Dense { matrices } => {
                let big = d
                    .checked_pow(n as u32)
                    .filter(|b| *b <= MAX_TENSOR_DIM)
                    .ok_or_else(|| SpectralError::Shape(format!("({d})^{n} exceeds the tensor size limit")))?;
                // isometry from the symmetric subspace into H^{⊗n}
                let mut v = DMatrix::<Complex64>::zeros(big, multisets.len());
                for (col, ms) in multisets.iter().enumerate() {
                    let mut idx = ms.clone();
                    let mut terms = 0usize;
                    loop {
                        let flat = idx.iter().fold(0usize, |acc, &i| acc * d + i);
                        v[(flat, col)] = Complex64::one();
                        terms += 1;
                        if !next_permutation(&mut idx) {
                            break;
                        }
                    }
                    let norm = (terms as f64).sqrt();
                    v.column_mut(col).iter_mut().for_each(|x| *x /= norm);
                }
                let va = v.adjoint();
                let out = matrices
                    .iter()
                    .map(|u| {
                        let mut k = u.clone();
                        for _ in 1..n {
                            k = k.kronecker(u);
                        }
                        &va * k * &v
                    })
                    .collect();
                Ok(FiniteRep::Dense { matrices: out })
            }
        }
    }

    /// `⊕_{n=0}^{N} U^{⊙n}`.
    pub fn exp_truncated(&self, n_max: usize) -> Result<FiniteRep, SpectralError> {
        let mut acc = FiniteRep::trivial(self.generators());
        for n in 1..=n_max {
            acc = acc.direct_sum(&self.sym_power(n)?)?;
        }
        Ok(acc)
    }
}

/// Nondecreasing index tuples of length `n` over `0..d`.
fn multisets(d: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(n);
    fn rec(d: usize, n: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for i in start..d {
            cur.push(i);
            rec(d, n, i, cur, out);
            cur.pop();
        }
    }
    rec(d, n, 0, &mut cur, &mut out);
    out
}

/// Lexicographic next permutation; false once the last one is reached.
fn next_permutation(v: &mut [usize]) -> bool {
    let Some(i) = (1..v.len()).rev().find(|&i| v[i - 1] < v[i]) else {
        return false;
    };
    let j = (i..v.len()).rev().find(|&j| v[j] > v[i - 1]).unwrap();
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Joint spectrum of a representation.
#[derive(Clone, Debug, PartialEq)]
pub enum Spectrum {
    Exact(BTreeMap<Vec<Rational64>, u64>),
    Numeric(Vec<(Vec<Complex64>, u64)>),
}

impl Spectrum {
    pub fn multiplicities(&self) -> MultiplicitySet {
        match self {
            Spectrum::Exact(m) => m.values().copied().collect(),
            Spectrum::Numeric(v) => v.iter().map(|(_, m)| *m).collect(),
        }
    }

    /// Distinct joint characters as complex vectors.
    pub fn characters(&self) -> Vec<Vec<Complex64>> {
        match self {
            Spectrum::Exact(m) => m.keys().map(|p| p.iter().map(|x| root_of_unity(*x)).collect()).collect(),
            Spectrum::Numeric(v) => v.iter().map(|(c, _)| c.clone()).collect(),
        }
    }

    /// Eigenvalues with multiplicity, for a single generator.
    pub fn eigenvalues(&self, generator: usize) -> Vec<Complex64> {
        let mut out = Vec::new();
        match self {
            Spectrum::Exact(m) => {
                for (p, k) in m {
                    out.extend(std::iter::repeat_n(root_of_unity(p[generator]), *k as usize));
                }
            }
            Spectrum::Numeric(v) => {
                for (c, k) in v {
                    out.extend(std::iter::repeat_n(c[generator], *k as usize));
                }
            }
        }
        out
    }
}

fn close(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).norm() <= tol)
}

/// Joint eigenspaces of commuting unitaries via a random Hermitian combination.
fn joint_spectrum(mats: &[DMatrix<Complex64>], tol: f64) -> Result<Vec<(Vec<Complex64>, u64)>, SpectralError> {
    let d = mats.first().map_or(0, |m| m.nrows());
    if d == 0 {
        return Ok(Vec::new());
    }
    let i = Complex64::new(0.0, 1.0);
    for attempt in 0..8u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0x6a_6f69_6e74 + attempt);
        let mut h = DMatrix::<Complex64>::zeros(d, d);
        for u in mats {
            let (a, b): (f64, f64) = (rng.gen_range(0.5..1.5), rng.gen_range(0.5..1.5));
            let ua = u.adjoint();
            h += (u + &ua) * Complex64::from(a * 0.5) + (u - &ua) * (-i * b * 0.5);
        }
        let eig = SymmetricEigen::new(h);
        let mut clusters: Vec<(Vec<Complex64>, u64)> = Vec::new();
        let mut resolved = true;
        for col in 0..d {
            let v = eig.eigenvectors.column(col);
            let chars: Vec<Complex64> = mats.iter().map(|u| v.dotc(&(u * v))).collect();
            if mats.iter().zip(&chars).any(|(u, c)| (u * v - v * *c).norm() > RESIDUAL_LIMIT) {
                resolved = false;
                break;
            }
            match clusters.iter_mut().find(|(c, _)| close(c, &chars, tol.max(1e-12))) {
                Some(cl) => cl.1 += 1,
                None => clusters.push((chars, 1)),
            }
        }
        if resolved {
            return Ok(clusters);
        }
    }
    Err(SpectralError::Unresolved)
}

fn spectra(u: &FiniteRep, v: &FiniteRep, tol: f64) -> Result<(Spectrum, Spectrum), SpectralError> {
    u.same_group(v)?;
    Ok((u.spectrum(tol)?, v.spectrum(tol)?))
}

/// `spec(U) ∩ spec(V) = ∅`.
pub fn spectrally_disjoint(u: &FiniteRep, v: &FiniteRep, tol: f64) -> Result<bool, SpectralError> {
    Ok(match spectra(u, v, tol)? {
        (Spectrum::Exact(a), Spectrum::Exact(b)) => a.keys().all(|k| !b.contains_key(k)),
        (a, b) => {
            let cb = b.characters();
            a.characters().iter().all(|x| cb.iter().all(|y| !close(x, y, tol)))
        }
    })
}

/// `(χ, ψ) ↦ χψ` is injective on `spec(U) × spec(V)`.
pub fn strongly_disjoint(u: &FiniteRep, v: &FiniteRep, tol: f64) -> Result<bool, SpectralError> {
    Ok(match spectra(u, v, tol)? {
        (Spectrum::Exact(a), Spectrum::Exact(b)) => {
            let mut seen = BTreeSet::new();
            a.keys().all(|x| {
                b.keys().all(|y| seen.insert(x.iter().zip(y).map(|(p, q)| reduce_phase(p + q)).collect::<Vec<_>>()))
            })
        }
        (a, b) => {
            let mut seen: Vec<Vec<Complex64>> = Vec::new();
            for x in a.characters() {
                for y in b.characters() {
                    let prod: Vec<Complex64> = x.iter().zip(&y).map(|(p, q)| p * q).collect();
                    if seen.iter().any(|s| close(s, &prod, tol)) {
                        return Ok(false);
                    }
                    seen.push(prod);
                }
            }
            true
        }
    })
}

/// `{ab : a ∈ A, b ∈ B}`.
pub fn product_set(a: &MultiplicitySet, b: &MultiplicitySet) -> MultiplicitySet {
    a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TensorCheck {
    pub strongly_disjoint: bool,
    pub multiplicity: MultiplicitySet,
    pub predicted: MultiplicitySet,
    /// `None` when the hypothesis fails: no claim is made then.
    pub holds: Option<bool>,
}

/// Computes `M(U⊗V)` and compares it with `M(U)·M(V)` under strong disjointness.
pub fn tensor_multiplicity_check(u: &FiniteRep, v: &FiniteRep, tol: f64) -> Result<TensorCheck, SpectralError> {
    let hyp = strongly_disjoint(u, v, tol)?;
    let multiplicity = u.tensor(v)?.multiplicity_set(tol)?;
    let predicted = product_set(&u.multiplicity_set(tol)?, &v.multiplicity_set(tol)?);
    let holds = hyp.then(|| multiplicity == predicted);
    Ok(TensorCheck { strongly_disjoint: hyp, multiplicity, predicted, holds })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProductKoopman {
    /// `(1⊗U_T) ⊕ (U_S⊗U_T) ⊕ (U_S⊗1)`.
    pub rep: FiniteRep,
    pub blocks_disjoint: bool,
    pub strongly_disjoint: bool,
    pub multiplicity: MultiplicitySet,
    pub predicted: MultiplicitySet,
    pub holds: Option<bool>,
}

impl ProductKoopman {
    pub fn hypothesis(&self) -> bool {
        self.blocks_disjoint && self.strongly_disjoint
    }
}

/// Koopman representation of `S × T` on `L²₀`, given those of `S` and `T` on `L²₀`.
pub fn product_koopman(s: &FiniteRep, t: &FiniteRep, tol: f64) -> Result<ProductKoopman, SpectralError> {
    s.same_group(t)?;
    let st = s.tensor(t)?;
    let blocks = [t, &st, s];
    let mut blocks_disjoint = true;
    for a in 0..3 {
        for b in a + 1..3 {
            blocks_disjoint &= spectrally_disjoint(blocks[a], blocks[b], tol)?;
        }
    }
    let strong = strongly_disjoint(s, t, tol)?;
    let rep = t.direct_sum(&st)?.direct_sum(s)?;
    let multiplicity = rep.multiplicity_set(tol)?;
    let predicted = diamond::diamond(&s.multiplicity_set(tol)?, &t.multiplicity_set(tol)?);
    let holds = (blocks_disjoint && strong).then(|| multiplicity == predicted);
    Ok(ProductKoopman { rep, blocks_disjoint, strongly_disjoint: strong, multiplicity, predicted, holds })
}

/// Haar-random unitary (QR of a complex Gaussian matrix with phase correction).
pub fn random_unitary<R: Rng>(d: usize, rng: &mut R) -> DMatrix<Complex64> {
    let z = DMatrix::<Complex64>::from_fn(d, d, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let qr = z.qr();
    let (q, r) = (qr.q(), qr.r());
    let mut q = q;
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { Complex64::one() };
        q.column_mut(j).iter_mut().for_each(|x| *x *= phase);
    }
    q
}

/// Prime used for generic phases `k/P`.
pub const GENERIC_PRIME: i64 = 1_000_003;

pub fn random_phase<R: Rng>(rng: &mut R) -> Rational64 {
    Rational64::new(rng.gen_range(0..GENERIC_PRIME), GENERIC_PRIME)
}

/// Diagonal representation with one distinct random character per entry of
/// `dims`, repeated `dims[j]` times.
pub fn random_isotypic<R: Rng>(rng: &mut R, generators: usize, dims: &[usize]) -> FiniteRep {
    let mut chars: BTreeSet<Vec<Rational64>> = BTreeSet::new();
    let mut phases = Vec::new();
    for &d in dims {
        let c = loop {
            let c: Vec<Rational64> = (0..generators).map(|_| random_phase(rng)).collect();
            if chars.insert(c.clone()) {
                break c;
            }
        };
        phases.extend(std::iter::repeat_n(c, d));
    }
    FiniteRep::Diagonal { generators, phases }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PhaseRow(#[serde(with = "r64_vec_str")] pub Vec<Rational64>);

/// JSON form: exact phases (as `"num/den"` fractions of a full turn) or dense
/// matrices of `[re, im]` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RepDoc {
    Diagonal { generators: usize, phases: Vec<PhaseRow> },
    Dense { matrices: Vec<Vec<Vec<[f64; 2]>>> },
}

impl RepDoc {
    pub fn from_rep(r: &FiniteRep) -> Self {
        match r {
            FiniteRep::Diagonal { generators, phases } => RepDoc::Diagonal {
                generators: *generators,
                phases: phases.iter().map(|p| PhaseRow(p.clone())).collect(),
            },
            FiniteRep::Dense { matrices } => RepDoc::Dense {
                matrices: matrices
                    .iter()
                    .map(|m| (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect())
                    .collect(),
            },
        }
    }

    pub fn to_rep(&self, tol: f64) -> Result<FiniteRep, SpectralError> {
        match self {
            RepDoc::Diagonal { generators, phases } => {
                FiniteRep::diagonal(*generators, phases.iter().map(|p| p.0.clone()).collect())
            }
            RepDoc::Dense { matrices } => {
                let mats = matrices
                    .iter()
                    .map(|rows| {
                        let d = rows.len();
                        if rows.iter().any(|r| r.len() != d) {
                            return Err(SpectralError::Shape("matrix is not square".into()));
                        }
                        Ok(DMatrix::from_fn(d, d, |i, j| Complex64::new(rows[i][j][0], rows[i][j][1])))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                FiniteRep::from_matrices(mats, tol)
            }
        }
    }
}

/// `Σ_{n≤N} C(d+n−1, n)`.
pub fn fock_dimension(d: usize, n_max: usize) -> u64 {
    (0..=n_max).map(|n| binomial((d + n).saturating_sub(1) as u64, n as u64)).sum()
}

fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational64 {
        Rational64::new(n, d)
    }

    fn set(v: &[u64]) -> MultiplicitySet {
        v.iter().copied().collect()
    }

    fn diag1(ph: &[Rational64]) -> FiniteRep {
        FiniteRep::diagonal(1, ph.iter().map(|p| vec![*p]).collect()).unwrap()
    }

    #[test]
    fn multiplicity_examples() {
        let (l, m) = (r(1, 3), r(1, 5));
        assert_eq!(diag1(&[l, l, m]).multiplicity_set(DEFAULT_TOL).unwrap(), set(&[1, 2]));
        assert_eq!(FiniteRep::scalar(l, 4).multiplicity_set(DEFAULT_TOL).unwrap(), set(&[4]));
        let sum = diag1(&[l, l]).direct_sum(&diag1(&[m])).unwrap();
        assert_eq!(sum.multiplicity_set(DEFAULT_TOL).unwrap(), set(&[1, 2]));
        let t = FiniteRep::scalar(l, 2).tensor(&FiniteRep::scalar(m, 3)).unwrap();
        assert_eq!(t.dim(), 6);
        assert_eq!(t.multiplicity_set(DEFAULT_TOL).unwrap(), set(&[6]));
    }

    #[test]
    fn dense_path_agrees_with_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let rep = random_isotypic(&mut rng, 2, &[1, 2, 3]);
        let w = random_unitary(6, &mut rng);
        let dense = rep.conjugate(&w).unwrap();
        assert_eq!(dense.multiplicity_set(DEFAULT_TOL).unwrap(), set(&[1, 2, 3]));
        let again = FiniteRep::from_matrices(dense.to_dense(), DEFAULT_TOL).unwrap();
        assert_eq!(again, dense);
    }

    #[test]
    fn disjointness_examples() {
        let one = diag1(&[r(0, 1)]);
        let minus = diag1(&[r(1, 2)]);
        assert!(spectrally_disjoint(&one, &minus, DEFAULT_TOL).unwrap());
        let l = r(2, 7);
        assert!(!spectrally_disjoint(&FiniteRep::scalar(l, 2), &FiniteRep::scalar(l, 3), DEFAULT_TOL).unwrap());
        let pm = diag1(&[r(0, 1), r(1, 2)]);
        assert!(!strongly_disjoint(&pm, &pm, DEFAULT_TOL).unwrap());
        let u = diag1(&[r(0, 1), r(1, 4)]);
        let v = diag1(&[r(123_457, GENERIC_PRIME)]);
        assert!(strongly_disjoint(&u, &v, DEFAULT_TOL).unwrap());
        // dense path on the same data
        let ud = u.conjugate(&DMatrix::identity(2, 2)).unwrap();
        assert!(strongly_disjoint(&ud, &v, DEFAULT_TOL).unwrap());
        assert!(!strongly_disjoint(&pm.conjugate(&DMatrix::identity(2, 2)).unwrap(), &pm, DEFAULT_TOL).unwrap());
    }

    #[test]
    fn tensor_and_product_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_isotypic(&mut rng, 1, &[2]);
        let v = random_isotypic(&mut rng, 1, &[3]);
        let c = tensor_multiplicity_check(&u, &v, DEFAULT_TOL).unwrap();
        assert_eq!(c.holds, Some(true));
        assert_eq!(c.multiplicity, set(&[6]));
        let u12 = random_isotypic(&mut rng, 1, &[1, 2]);
        assert_eq!(tensor_multiplicity_check(&u12, &v, DEFAULT_TOL).unwrap().multiplicity, set(&[3, 6]));

        let p = product_koopman(&u, &v, DEFAULT_TOL).unwrap();
        assert!(p.hypothesis());
        assert_eq!(p.multiplicity, set(&[2, 3, 6]));
        let w = random_isotypic(&mut rng, 1, &[5]);
        let p3 = product_koopman(&p.rep, &w, DEFAULT_TOL).unwrap();
        assert!(p3.hypothesis());
        assert_eq!(p3.multiplicity, set(&[2, 3, 5, 6, 10, 15, 30]));

        let a = random_isotypic(&mut rng, 1, &[1]);
        let b = random_isotypic(&mut rng, 1, &[1]);
        assert_eq!(product_koopman(&a, &b, DEFAULT_TOL).unwrap().multiplicity, set(&[1]));
    }

    #[test]
    fn symmetric_powers() {
        let (l, m) = (r(1, 7), r(2, 11));
        let u = diag1(&[l, m]);
        let s2 = u.sym_power(2).unwrap();
        assert_eq!(s2.dim(), 3);
        let FiniteRep::Diagonal { phases, .. } = &s2 else { panic!() };
        let got: BTreeSet<_> = phases.iter().map(|p| p[0]).collect();
        assert_eq!(got, [l + l, l + m, m + m].into_iter().map(reduce_phase).collect());
        assert_eq!(u.sym_power(0).unwrap().dim(), 1);
        assert_eq!(u.exp_truncated(2).unwrap().dim(), 6);
        assert_eq!(fock_dimension(2, 2), 6);

        // dense symmetric power has the same spectrum
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let w = random_unitary(2, &mut rng);
        let dense = u.conjugate(&w).unwrap().sym_power(2).unwrap();
        let mut ev: Vec<f64> = dense.spectrum(DEFAULT_TOL).unwrap().eigenvalues(0).iter().map(|z| z.arg()).collect();
        let mut want: Vec<f64> = s2.spectrum(DEFAULT_TOL).unwrap().eigenvalues(0).iter().map(|z| z.arg()).collect();
        ev.sort_by(f64::total_cmp);
        want.sort_by(f64::total_cmp);
        assert!(ev.iter().zip(&want).all(|(a, b)| (a - b).abs() < 1e-9));
    }

    #[test]
    fn non_commuting_is_rejected() {
        let x = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0].map(Complex64::from));
        let z = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0].map(Complex64::from));
        assert!(matches!(FiniteRep::from_matrices(vec![x, z], DEFAULT_TOL), Err(SpectralError::NotCommuting { .. })));
    }

    #[test]
    fn doc_round_trip() {
        let u = diag1(&[r(1, 3), r(2, 5)]);
        let json = serde_json::to_string(&RepDoc::from_rep(&u)).unwrap();
        let back: RepDoc = serde_json::from_str(&json).unwrap();
        assert_eq!(back.to_rep(DEFAULT_TOL).unwrap(), u);
    }
}

//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Every expected value is recomputed here from first principles (explicit
//! enumeration, phase bookkeeping, direct set arithmetic) rather than taken
//! from the library. Runtime limits cover the library work only; the
//! brute-force oracles run outside the timed sections.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::time::{Duration, Instant};

use cf_workbench::constructions::{aux_tower_j, rigid_tower_discrete, rigid_tower_rm, RigidPlan};
use cf_workbench::diamond::{diamond, factor, generate};
use cf_workbench::group::{GroupDescriptor, GroupElement};
use cf_workbench::koopman::{koopman_matrix, rigidity_diagnostic};
use cf_workbench::poisson::{verify_independence, verify_poisson_law, verify_rigidity_suspension, Sampler};
use cf_workbench::rational::fmt_q;
use cf_workbench::region::ElementSet;
use cf_workbench::spectral::{
    fock_dimension, product_koopman, random_phase, random_unitary, spectrally_disjoint, strongly_disjoint, FiniteRep,
};
use cf_workbench::tower::{element_set, CylinderSet, Tower};
use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::{BigRational, Rational64};
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Res<T> = Result<T, Box<dyn std::error::Error>>;

struct Outcome {
    pass: bool,
    detail: String,
    elapsed: Duration,
}

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn qi(n: usize) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn unit_vectors(n: usize) -> Vec<GroupElement> {
    (0..n)
        .map(|k| {
            let mut v = vec![0; n];
            v[k] = 1;
            GroupElement::new(v)
        })
        .collect()
}

fn e0(n: usize) -> GroupElement {
    let mut v = vec![0; n];
    v[0] = 1;
    GroupElement::new(v)
}

fn powers_of_three() -> Vec<GroupElement> {
    (1..30).map(|n| GroupElement::new(vec![3i64.pow(n)])).collect()
}

fn mixed_orders() -> GroupDescriptor {
    GroupDescriptor::direct_sum((1..=6).map(|k| GroupDescriptor::cyclic(1 << k)).collect())
}

/// `[A]_m` refined to level `n` by explicit products `a·c_{m+1}⋯c_n`.
fn refine_oracle(t: &Tower, base: &[GroupElement], from: usize, to: usize) -> Vec<GroupElement> {
    let g = t.group();
    let mut cur: Vec<GroupElement> = base.to_vec();
    for k in from + 1..=to {
        let mut next = Vec::with_capacity(cur.len() * t.c(k).len());
        for a in &cur {
            for c in t.c(k).iter() {
                next.push(g.op_unchecked(a, c));
            }
        }
        cur = next;
    }
    cur
}

/// `#(gA △ A)` with `gA` taken in the whole group.
fn symdiff_count(t: &Tower, g: &GroupElement, atoms: &[GroupElement]) -> usize {
    let a: HashSet<&GroupElement> = atoms.iter().collect();
    let ga: HashSet<GroupElement> = atoms.iter().map(|x| t.group().op_unchecked(g, x)).collect();
    let inside = ga.iter().filter(|y| a.contains(y)).count();
    (ga.len() - inside) + (a.len() - inside)
}

/// Translates `F·c`, `c ∈ C`, are pairwise disjoint; returns the union when they are.
fn disjoint_translates(desc: &GroupDescriptor, f: &[GroupElement], cs: &ElementSet) -> Option<HashSet<GroupElement>> {
    let mut seen = HashSet::with_capacity(f.len() * cs.len());
    for c in cs.iter() {
        for x in f {
            if !seen.insert(desc.op_unchecked(x, c)) {
                return None;
            }
        }
    }
    Some(seen)
}

// ---------------------------------------------------------------------------

fn criterion_1() -> Res<Outcome> {
    let cases = [
        ("ℤ, p=2", GroupDescriptor::integers(), 2),
        ("ℤ, p=3", GroupDescriptor::integers(), 3),
        ("⊕ℤ(2), p=2", GroupDescriptor::cyclic_sum(2, 4), 2),
        ("⊕ℤ(2), p=3", GroupDescriptor::cyclic_sum(2, 4), 3),
    ];
    let mut elapsed = Duration::ZERO;
    let mut failures = Vec::new();
    for (name, j, p) in cases {
        let start = Instant::now();
        let t = aux_tower_j(&j, p, 4)?;
        let report = t.validate(&[])?;
        elapsed += start.elapsed();
        if !report.passed() {
            failures.push(format!("{name}: library CF checks failed"));
        }
        if report.measure.factors.iter().any(|f| !f.is_one()) {
            failures.push(format!("{name}: a library factor differs from 1"));
        }
        // oracle: F_{n-1}C_n tiles F_n exactly, by explicit enumeration
        let desc = t.group().clone();
        let kinds = desc.coord_kinds();
        for n in 1..=t.depth() {
            let prev = t.f(n - 1).to_set(&desc).into_vec();
            let cn = t.c(n);
            let f_n = t.f(n).count() as usize;
            if prev.len() * cn.len() != f_n {
                failures.push(format!("{name}: level {n} factor |F_n|/(|F_n-1||C_n|) = {f_n}/{}", prev.len() * cn.len()));
                continue;
            }
            match disjoint_translates(&desc, &prev, cn) {
                None => failures.push(format!("{name}: level {n} translates overlap")),
                Some(union) => {
                    if !union.iter().all(|x| t.f(n).contains_with(&kinds, x)) {
                        failures.push(format!("{name}: level {n} F_n-1 C_n ⊄ F_n"));
                    }
                }
            }
        }
    }
    let limit = Duration::from_secs(1);
    let pass = failures.is_empty() && elapsed < limit;
    let detail = if failures.is_empty() {
        "4 auxiliary towers at depth 4 tile exactly, every factor 1/1".to_string()
    } else {
        failures.join("; ")
    };
    Ok(Outcome { pass, detail: format!("{detail} [limit 1 s]"), elapsed })
}

fn criterion_2() -> Res<Outcome> {
    let r2 = GroupDescriptor::lattice(2, Rational64::new(1, 2));
    let firsts = [2i64, 10, 90, 1530, 50490, 3_281_850, 400_000_000];
    let seq: Vec<GroupElement> =
        firsts.iter().enumerate().map(|(i, g)| GroupElement::new(vec![*g, 1 + i as i64])).collect();
    // the input satisfies g_{n+1}/g_n > 1/α_n + 1 with α_n = 2⁻ⁿ
    let mut failures = Vec::new();
    for (n, w) in firsts.windows(2).enumerate() {
        let inv_alpha = 1i64 << (n + 1);
        if w[1] <= (inv_alpha + 1) * w[0] {
            failures.push(format!("input ratio at {n} too small"));
        }
    }

    let start = Instant::now();
    let built = rigid_tower_rm(&r2, &seq, &RigidPlan::default(), 5)?;
    let t = &built.tower;
    let mut diag = Vec::new();
    for n in 1..=t.depth() {
        let g = built.rigidity_element(&seq, n);
        let c = t.cylinder(n - 1, ElementSet::singleton(t.group().identity()))?;
        let row = rigidity_diagnostic(t, &[g], std::slice::from_ref(&c), n)?.remove(0);
        diag.push((built.rigidity_element(&seq, n), c, row.value));
    }
    let elapsed = start.elapsed();

    let mut worst = Vec::new();
    for (i, l) in built.levels.iter().enumerate() {
        let n = i + 1;
        let alpha = q(1, 1 << n);
        let bound = (BigRational::one() + &alpha) * (BigRational::one() + &alpha);
        // factor from the level sizes
        let factor = BigRational::new(
            BigInt::from(t.f(n).count()),
            BigInt::from(t.f(n - 1).count()) * BigInt::from(t.c(n).len()),
        );
        if factor != l.factor || factor >= bound {
            failures.push(format!("level {n}: factor {} vs bound {}", fmt_q(&factor), fmt_q(&bound)));
        }
        // ratio by direct counting over C_n
        let (g, cyl, value) = &diag[i];
        let cs: HashSet<Vec<i64>> = t.c(n).iter().map(|c| c.0.clone()).collect();
        let hits = cs.iter().filter(|c| cs.contains(&vec![c[0] + g.0[0], c[1] + g.0[1]])).count();
        let ratio = BigRational::new(BigInt::from(hits), BigInt::from(cs.len()));
        let h = l.h as i64;
        if ratio != q(2 * h, 2 * h + 1) {
            failures.push(format!("level {n}: ratio {} ≠ 2h/(2h+1) with h = {h}", fmt_q(&ratio)));
        }
        // diagnostic ≤ 2/(2h+1), and it matches the explicit count
        let atoms = refine_oracle(t, &[t.group().identity()], n - 1, n);
        let count = symdiff_count(t, g, &atoms);
        let mu_a = t.cylinder_measure(cyl)?;
        if value.clone() * qi(atoms.len()) != mu_a * qi(count) {
            failures.push(format!("level {n}: diagnostic {} disagrees with the count", fmt_q(value)));
        }
        if *value > q(2, 2 * h + 1) {
            failures.push(format!("level {n}: diagnostic {} > 2/(2h+1)", fmt_q(value)));
        }
        worst.push(fmt_q(value));
    }
    let limit = Duration::from_secs(10);
    let pass = failures.is_empty() && elapsed < limit;
    let detail = if failures.is_empty() {
        format!("depth 5 over ℝ², factors < (1+2⁻ⁿ)², exact ratios, diagnostics [{}]", worst.join(", "))
    } else {
        failures.join("; ")
    };
    Ok(Outcome { pass, detail: format!("{detail} [limit 10 s]"), elapsed })
}

/// Non-increasing, strictly decreasing while positive, and the last value below the first.
fn decreases(values: &[BigRational]) -> bool {
    values.windows(2).all(|w| w[1] <= w[0] && (w[0].is_zero() || w[1] < w[0]))
        && values.last() < values.first()
}

fn criterion_3() -> Res<Outcome> {
    let cases: Vec<(&str, GroupDescriptor, Vec<GroupElement>, GroupElement)> = vec![
        ("ℤ with 3ⁿ", GroupDescriptor::integers(), powers_of_three(), GroupElement::new(vec![1])),
        ("⊕ℤ(2ᵏ)", mixed_orders(), unit_vectors(6), e0(6)),
        ("ℤ(3)^⊕", GroupDescriptor::cyclic_sum(3, 12), unit_vectors(12), e0(12)),
    ];
    let mut elapsed = Duration::ZERO;
    let mut failures = Vec::new();
    let mut summary = Vec::new();
    for (name, desc, seq, d) in cases {
        for d in [desc.identity(), d] {
            let nonzero = d != desc.identity();
            let start = Instant::now();
            let built = rigid_tower_discrete(&seq, &desc, &d, &RigidPlan::default(), 4, 10_000)?;
            let t = &built.tower;
            let mut values = Vec::new();
            if nonzero {
                let a = t.full_cylinder(0)?;
                for n in 1..=4 {
                    values.push(rigidity_diagnostic(t, &[built.steps[n - 1].clone()], std::slice::from_ref(&a), n)?.remove(0).value);
                }
            }
            elapsed += start.elapsed();
            if t.depth() != 4 {
                failures.push(format!("{name}: depth {}", t.depth()));
            }
            for (i, l) in built.levels.iter().enumerate() {
                let n = i + 1;
                let s = &built.steps[i];
                let cn = t.c(n);
                let hits = cn.iter().filter(|c| cn.contains(&desc.op_unchecked(s, c))).count();
                let ratio = BigRational::new(BigInt::from(hits), BigInt::from(cn.len()));
                let h = l.h as i64;
                if ratio != l.ratio || ratio < q(h, h + 1) {
                    failures.push(format!("{name}: level {n} ratio {} < h/(h+1), h = {h}", fmt_q(&ratio)));
                }
                let prev = t.f(n - 1).to_set(&desc).into_vec();
                if disjoint_translates(&desc, &prev, cn).is_none() {
                    failures.push(format!("{name}: level {n} C_n not independent of F_n-1"));
                }
            }
            if nonzero {
                let f0 = t.f(0).to_set(&desc).into_vec();
                for (i, v) in values.iter().enumerate() {
                    let n = i + 1;
                    let atoms = refine_oracle(t, &f0, 0, n);
                    let count = symdiff_count(t, &built.steps[i], &atoms);
                    let mu = t.cylinder_measure(&t.full_cylinder(0)?)?;
                    if v.clone() * qi(atoms.len()) != mu * qi(count) {
                        failures.push(format!("{name}: level {n} diagnostic disagrees with the count"));
                    }
                }
                if !decreases(&values) {
                    failures.push(format!("{name}: diagnostic does not decrease"));
                }
                summary.push(format!("{name} [{}]", values.iter().map(fmt_q).collect::<Vec<_>>().join(", ")));
            }
        }
    }
    let limit = Duration::from_secs(10);
    let pass = failures.is_empty() && elapsed < limit;
    let detail = if failures.is_empty() { format!("diagnostics {}", summary.join("; ")) } else { failures.join("; ") };
    Ok(Outcome { pass, detail: format!("{detail} [limit 10 s]"), elapsed })
}

fn criterion_4() -> Res<Outcome> {
    let mut towers = vec![
        aux_tower_j(&GroupDescriptor::integers(), 2, 3)?,
        aux_tower_j(&GroupDescriptor::cyclic_sum(2, 4), 2, 4)?,
        aux_tower_j(&GroupDescriptor::cyclic_sum(3, 3), 2, 3)?,
    ];
    let plan = RigidPlan::default();
    towers.push(rigid_tower_discrete(&powers_of_three(), &GroupDescriptor::integers(), &GroupElement::new(vec![1]), &plan, 4, 10_000)?.tower);
    towers.push(rigid_tower_discrete(&unit_vectors(12), &GroupDescriptor::cyclic_sum(3, 12), &e0(12), &plan, 3, 10_000)?.tower);
    towers.push(rigid_tower_discrete(&unit_vectors(6), &mixed_orders(), &e0(6), &plan, 3, 10_000)?.tower);

    // (tower, level) pairs with at most 10⁴ atoms
    let mut slots = Vec::new();
    let mut atom_sets: HashMap<(usize, usize), Vec<GroupElement>> = HashMap::new();
    for (ti, t) in towers.iter().enumerate() {
        for n in 0..=t.depth() {
            if t.f(n).count() <= 10_000 {
                slots.push((ti, n));
                atom_sets.insert((ti, n), t.f(n).to_set(t.group()).into_vec());
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut elapsed = Duration::ZERO;
    let mut failures = Vec::new();
    let cases = 240;
    for case in 0..cases {
        let &(ti, n) = slots.choose(&mut rng).unwrap();
        let t = &towers[ti];
        let desc = t.group();
        let atoms = &atom_sets[&(ti, n)];
        // g = x·y⁻¹ for random atoms, so it usually overlaps F_n
        let x = atoms.choose(&mut rng).unwrap();
        let y = atoms.choose(&mut rng).unwrap();
        let g = desc.op_unchecked(x, &desc.inv_unchecked(y));
        let m = rng.gen_range(0..=n);
        let base_pool = &atom_sets[&(ti, m)];
        let k = rng.gen_range(1..=base_pool.len().min(12));
        let base: Vec<GroupElement> = base_pool.choose_multiple(&mut rng, k).cloned().collect();
        let cyl: CylinderSet = t.cylinder(m, ElementSet::new(base.clone()))?;

        let start = Instant::now();
        let sd = t.symdiff_measure(&g, &cyl, n)?;
        let km = koopman_matrix(t, &g, n)?;
        let mu_a = t.cylinder_measure(&cyl)?;
        elapsed += start.elapsed();

        let refined = refine_oracle(t, &base, m, n);
        let count = symdiff_count(t, &g, &refined);
        if sd.clone() * qi(refined.len()) != mu_a * qi(count) {
            failures.push(format!("case {case}: symdiff {} vs {count}/{} atoms", fmt_q(&sd), refined.len()));
        }
        let index: HashMap<&GroupElement, usize> = km.atoms.iter().enumerate().map(|(i, a)| (a, i)).collect();
        let listed: HashSet<&GroupElement> = atoms.iter().collect();
        if km.atoms.len() != atoms.len() || !km.atoms.iter().all(|a| listed.contains(a)) {
            failures.push(format!("case {case}: atom list differs"));
            continue;
        }
        for (j, a) in km.atoms.iter().enumerate() {
            let expected = index.get(&desc.op_unchecked(&g, a)).copied();
            if km.image[j] != expected {
                failures.push(format!("case {case}: column {j} maps to {:?}, expected {expected:?}", km.image[j]));
                break;
            }
        }
    }
    let limit = Duration::from_secs(30);
    let pass = failures.is_empty() && elapsed < limit;
    let detail = if failures.is_empty() {
        format!("{cases} random (tower, level, g, cylinder) cases over {} levels agree with enumeration", slots.len())
    } else {
        failures.into_iter().take(3).collect::<Vec<_>>().join("; ")
    };
    Ok(Outcome { pass, detail: format!("{detail} [limit 30 s]"), elapsed })
}

// ---------------------------------------------------------------------------
// phase oracle

type Char = Vec<Rational64>;

fn red(p: Rational64) -> Rational64 {
    p - p.floor()
}

fn char_counts(rows: &[Char]) -> BTreeMap<Char, u64> {
    let mut m = BTreeMap::new();
    for r in rows {
        *m.entry(r.iter().map(|p| red(*p)).collect()).or_insert(0) += 1;
    }
    m
}

fn mult_set(rows: &[Char]) -> BTreeSet<u64> {
    char_counts(rows).values().copied().collect()
}

fn tensor_rows(a: &[Char], b: &[Char]) -> Vec<Char> {
    a.iter().flat_map(|x| b.iter().map(move |y| x.iter().zip(y).map(|(p, q)| red(p + q)).collect())).collect()
}

fn keys_disjoint(a: &[Char], b: &[Char]) -> bool {
    let ka = char_counts(a);
    char_counts(b).keys().all(|k| !ka.contains_key(k))
}

fn diamond_oracle(e: &BTreeSet<u64>, f: &BTreeSet<u64>) -> BTreeSet<u64> {
    let mut out: BTreeSet<u64> = e | f;
    for a in e {
        for b in f {
            out.insert(a * b);
        }
    }
    out
}

fn random_rows(rng: &mut ChaCha8Rng, gens: usize, shared: &[Char]) -> Vec<Char> {
    let blocks = rng.gen_range(1..=3);
    let mut rows = Vec::new();
    for _ in 0..blocks {
        let c: Char = if !shared.is_empty() && rng.gen_bool(0.25) {
            shared.choose(rng).unwrap().clone()
        } else {
            (0..gens).map(|_| random_phase(rng)).collect()
        };
        let dim = rng.gen_range(1..=3);
        rows.extend(std::iter::repeat_n(c, dim));
    }
    rows
}

fn criterion_5() -> Res<Outcome> {
    let tol = 1e-9;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cases = 600;
    let (mut claims_a, mut claims_b, mut claims_c) = (0, 0, 0);
    let mut failures = Vec::new();
    let mut elapsed = Duration::ZERO;
    for case in 0..cases {
        let gens = rng.gen_range(1..=2);
        let s_rows = random_rows(&mut rng, gens, &[]);
        let t_rows = random_rows(&mut rng, gens, &s_rows);
        let s = FiniteRep::diagonal(gens, s_rows.clone())?;
        let t = FiniteRep::diagonal(gens, t_rows.clone())?;

        let start = Instant::now();
        let m_sum = s.direct_sum(&t)?.multiplicity_set(tol)?;
        let m_tensor = s.tensor(&t)?.multiplicity_set(tol)?;
        let lib_disjoint = spectrally_disjoint(&s, &t, tol)?;
        let lib_strong = strongly_disjoint(&s, &t, tol)?;
        let pk = product_koopman(&s, &t, tol)?;
        elapsed += start.elapsed();

        let (ms, mt) = (mult_set(&s_rows), mult_set(&t_rows));
        let st_rows = tensor_rows(&s_rows, &t_rows);
        let disjoint = keys_disjoint(&s_rows, &t_rows);
        let pair_keys = tensor_rows(&char_counts(&s_rows).keys().cloned().collect::<Vec<_>>(), &char_counts(&t_rows).keys().cloned().collect::<Vec<_>>());
        let strong = pair_keys.iter().collect::<BTreeSet<_>>().len() == pair_keys.len();
        if lib_disjoint != disjoint || lib_strong != strong {
            failures.push(format!("case {case}: disjointness flags"));
        }
        if disjoint {
            claims_a += 1;
            if m_sum != &ms | &mt {
                failures.push(format!("case {case}: (a) {m_sum:?}"));
            }
        }
        if strong {
            claims_b += 1;
            let predicted: BTreeSet<u64> = ms.iter().flat_map(|a| mt.iter().map(move |b| a * b)).collect();
            if m_tensor != predicted {
                failures.push(format!("case {case}: (b) {m_tensor:?} vs {predicted:?}"));
            }
        }
        let blocks = keys_disjoint(&t_rows, &st_rows) && keys_disjoint(&st_rows, &s_rows) && keys_disjoint(&s_rows, &t_rows);
        if pk.blocks_disjoint != blocks {
            failures.push(format!("case {case}: block disjointness flag"));
        }
        if blocks {
            claims_c += 1;
            let predicted = diamond_oracle(&ms, &mt);
            if pk.multiplicity != predicted {
                failures.push(format!("case {case}: (c) {:?} vs {predicted:?}", pk.multiplicity));
            }
        }
    }

    // {2}⋄{3} and {2}⋄{3}⋄{5} realized by isotypic components of those dimensions
    let iso = |rng: &mut ChaCha8Rng, dim: usize| FiniteRep::diagonal(1, vec![vec![random_phase(rng)]; dim]);
    let start = Instant::now();
    let (s2, t3, r5) = (iso(&mut rng, 2)?, iso(&mut rng, 3)?, iso(&mut rng, 5)?);
    let st = product_koopman(&s2, &t3, tol)?;
    let str_ = product_koopman(&st.rep, &r5, tol)?;
    elapsed += start.elapsed();
    let want_pq: BTreeSet<u64> = [2, 3, 6].into();
    let want_pqr: BTreeSet<u64> = [2, 3, 5, 6, 10, 15, 30].into();
    if !st.blocks_disjoint || st.multiplicity != want_pq {
        failures.push(format!("{{2}}⋄{{3}} gave {:?}", st.multiplicity));
    }
    if !str_.blocks_disjoint || str_.multiplicity != want_pqr {
        failures.push(format!("{{2}}⋄{{3}}⋄{{5}} gave {:?}", str_.multiplicity));
    }
    if claims_a < 100 || claims_b < 100 || claims_c < 100 {
        failures.push(format!("too few hypothesis-true cases: {claims_a}/{claims_b}/{claims_c}"));
    }

    let limit = Duration::from_secs(60);
    let pass = failures.is_empty() && elapsed < limit;
    let detail = if failures.is_empty() {
        format!(
            "{cases} random reps, claims checked (a) {claims_a} (b) {claims_b} (c) {claims_c}; {{2}}⋄{{3}} = {:?}, {{2}}⋄{{3}}⋄{{5}} = {:?}",
            st.multiplicity, str_.multiplicity
        )
    } else {
        failures.into_iter().take(3).collect::<Vec<_>>().join("; ")
    };
    Ok(Outcome { pass, detail: format!("{detail} [limit 60 s]"), elapsed })
}

/// Block disjointness alone does not force (c) once phase sums collide.
fn note_5c() -> Res<String> {
    let r = |n, d| vec![Rational64::new(n, d)];
    let s = FiniteRep::diagonal(1, vec![r(13, 100), r(23, 100)])?;
    let t = FiniteRep::diagonal(1, vec![r(1, 2), r(2, 5)])?;
    let pk = product_koopman(&s, &t, 1e-9)?;
    Ok(format!(
        "note: S = {{13/100, 23/100}}, T = {{1/2, 2/5}}: blocks disjoint = {}, strongly disjoint = {}, M = {:?} vs ⋄ = {:?}",
        pk.blocks_disjoint, pk.strongly_disjoint, pk.multiplicity, pk.predicted
    ))
}

// ---------------------------------------------------------------------------

/// Sorted index tuples, by enumerating all of `0..d` to the `n` and deduplicating.
fn sym_basis(d: usize, n: usize) -> Vec<Vec<usize>> {
    let mut set = BTreeSet::new();
    for mut idx in 0..d.pow(n as u32) {
        let mut t = Vec::with_capacity(n);
        for _ in 0..n {
            t.push(idx % d);
            idx /= d;
        }
        t.sort_unstable();
        set.insert(t);
    }
    set.into_iter().collect()
}

/// `tr(P_sym U^{⊗n})` with `P_sym` the average over all permutations of the tensor factors.
fn sym_trace(u: &DMatrix<Complex64>, n: usize) -> Complex64 {
    let d = u.nrows();
    let mut k = u.clone();
    for _ in 1..n {
        k = k.kronecker(u);
    }
    let big = d.pow(n as u32);
    let perms = permutations(n);
    let mut acc = Complex64::zero();
    for perm in &perms {
        for flat in 0..big {
            let mut digits = vec![0usize; n];
            let mut x = flat;
            for slot in (0..n).rev() {
                digits[slot] = x % d;
                x /= d;
            }
            let permuted = perm.iter().fold(0usize, |acc, &i| acc * d + digits[i]);
            acc += k[(flat, permuted)];
        }
    }
    acc / perms.len() as f64
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

fn criterion_6() -> Res<Outcome> {
    let tol = 1e-8;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut failures = Vec::new();
    let mut elapsed = Duration::ZERO;
    let mut checked = 0;
    for d in 1..=4 {
        for n_max in 0..=3 {
            let expected: usize = (0..=n_max).map(|n| sym_basis(d, n).len()).sum();
            if fock_dimension(d, n_max) != expected as u64 {
                failures.push(format!("fock_dimension({d},{n_max})"));
            }
        }
        for _ in 0..3 {
            // repeated phases make the multiplicities nontrivial
            let pool: Vec<Rational64> = (0..2).map(|_| random_phase(&mut rng)).collect();
            let phases: Vec<Char> = (0..d).map(|_| vec![*pool.choose(&mut rng).unwrap()]).collect();
            let u = FiniteRep::diagonal(1, phases.clone())?;
            let w = random_unitary(d, &mut rng);
            let start = Instant::now();
            let dense = u.conjugate(&w)?;
            let fock = u.exp_truncated(3)?;
            let mut powers = Vec::new();
            for n in 1..=3 {
                powers.push((u.sym_power(n)?, dense.sym_power(n)?));
            }
            elapsed += start.elapsed();
            if fock.dim() as u64 != fock_dimension(d, 3) {
                failures.push(format!("d={d}: Fock dimension {}", fock.dim()));
            }
            let dense_matrix = &dense.to_dense()[0];
            for (i, (exact, numeric)) in powers.iter().enumerate() {
                let n = i + 1;
                checked += 1;
                let oracle_rows: Vec<Char> = sym_basis(d, n)
                    .iter()
                    .map(|ms| vec![red(ms.iter().map(|&j| phases[j][0]).sum())])
                    .collect();
                let FiniteRep::Diagonal { phases: got, .. } = exact else {
                    failures.push("exact sym power became dense".into());
                    continue;
                };
                if char_counts(got) != char_counts(&oracle_rows) {
                    failures.push(format!("d={d} n={n}: exact eigenvalues differ"));
                }
                // dense path: spectrum via traces of powers, and multiplicities
                let m = &numeric.to_dense()[0];
                let mut mk = m.clone();
                let mut uk = dense_matrix.clone();
                for _ in 1..=3 {
                    let lhs = mk.trace();
                    let rhs = sym_trace(&uk, n);
                    if (lhs - rhs).norm() > 1e-7 {
                        failures.push(format!("d={d} n={n}: trace {lhs} vs {rhs}"));
                    }
                    mk = &mk * m;
                    uk = &uk * dense_matrix;
                }
                if numeric.multiplicity_set(tol)? != mult_set(&oracle_rows) {
                    failures.push(format!("d={d} n={n}: dense multiplicities differ"));
                }
            }
        }
    }
    let limit = Duration::from_secs(5);
    let pass = failures.is_empty() && elapsed < limit;
    let detail = if failures.is_empty() {
        format!("Fock dimensions for d ≤ 4, N ≤ 3 and {checked} symmetric powers (exact and conjugated dense) agree")
    } else {
        failures.into_iter().take(3).collect::<Vec<_>>().join("; ")
    };
    Ok(Outcome { pass, detail: format!("{detail} [limit 5 s]"), elapsed })
}

fn poisson_pmf(mu: f64, k: usize) -> f64 {
    (1..=k).fold((-mu).exp(), |p, j| p * mu / j as f64)
}

fn criterion_7() -> Res<Outcome> {
    let z = GroupDescriptor::integers();
    let trials = 100_000;
    let start = Instant::now();
    let built = rigid_tower_discrete(&powers_of_three(), &z, &GroupElement::new(vec![1]), &RigidPlan::default(), 4, 10_000)?;
    let t = &built.tower;
    let sampler = Sampler::new(t, 1, 4, 1.0)?;
    let a = t.full_cylinder(0)?;
    let b = t.cylinder(1, element_set(&z, &[vec![-1], vec![1]])?)?;
    let law = verify_poisson_law(&sampler, &a, trials, Some(0.01), 20240611)?;
    let ind = verify_independence(&sampler, &a, &b, trials, 0.02, 20240611)?;
    let mut elems = built.steps.clone();
    elems.push(GroupElement::new(vec![1000]));
    let rig = verify_rigidity_suspension(&sampler, &elems, &[a], trials, 20240611)?;
    let elapsed = start.elapsed();

    let mut failures = Vec::new();
    // TV against an independently computed Poisson(1) law
    let total: u64 = law.histogram.iter().sum();
    let mut tv = 0.0;
    let mut covered = 0.0;
    for (k, h) in law.histogram.iter().enumerate() {
        let p = poisson_pmf(1.0, k);
        covered += p;
        tv += (*h as f64 / total as f64 - p).abs();
    }
    tv = 0.5 * (tv + (1.0 - covered));
    if (tv - law.tv_distance).abs() > 1e-9 || tv >= 0.01 {
        failures.push(format!("TV {tv:.5} (library {:.5})", law.tv_distance));
    }
    let e_inv = (-1.0f64).exp();
    if (law.p_zero - e_inv).abs() > 0.005 {
        failures.push(format!("P(N_A=0) = {:.4}", law.p_zero));
    }
    if ind.covariance.abs() >= 0.02 {
        failures.push(format!("cov = {:.4}", ind.covariance));
    }
    let est: Vec<f64> = rig.iter().map(|r| r.estimate).collect();
    let (steps, control) = est.split_at(est.len() - 1);
    if !steps.windows(2).all(|w| w[1] < w[0]) {
        failures.push(format!("rigidity estimates {steps:?} do not decrease"));
    }
    if control[0] <= 0.2 {
        failures.push(format!("control estimate {:.3}", control[0]));
    }
    let limit = Duration::from_secs(120);
    let pass = failures.is_empty() && elapsed < limit;
    let detail = if failures.is_empty() {
        format!(
            "{trials} trials: TV {tv:.4}, P0 {:.4}, cov {:.4}, rigidity [{}], control {:.3}",
            law.p_zero,
            ind.covariance,
            steps.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(", "),
            control[0]
        )
    } else {
        failures.join("; ")
    };
    Ok(Outcome { pass, detail: format!("{detail} [limit 120 s]"), elapsed })
}

fn criterion_8() -> Res<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut failures = Vec::new();
    let start = Instant::now();
    let random_set = |rng: &mut ChaCha8Rng| -> BTreeSet<u64> {
        let k = rng.gen_range(1..=4);
        (0..k).map(|_| rng.gen_range(1..=30)).collect()
    };
    for i in 0..10_000 {
        let (a, b, c) = (random_set(&mut rng), random_set(&mut rng), random_set(&mut rng));
        let ab = diamond(&a, &b);
        if ab != diamond(&b, &a) || ab != diamond_oracle(&a, &b) {
            failures.push(format!("set {i}: commutativity"));
        }
        if diamond(&ab, &c) != diamond(&a, &diamond(&b, &c)) {
            failures.push(format!("set {i}: associativity"));
        }
    }
    let f236 = factor(&[2, 3, 6].into());
    if f236 != vec![vec![2, 3]] {
        failures.push(format!("factor({{2,3,6}}) = {f236:?}"));
    }
    let mut round_trips = 0;
    let mut cache: HashMap<BTreeSet<u64>, Vec<Vec<u64>>> = HashMap::new();
    let mut ms: Vec<Vec<u64>> = Vec::new();
    for k in 1..=4 {
        let mut cur = vec![2u64; k];
        loop {
            ms.push(cur.clone());
            // next nondecreasing tuple over 2..=30
            let Some(pos) = (0..k).rev().find(|&i| cur[i] < 30) else { break };
            let v = cur[pos] + 1;
            for x in cur[pos..].iter_mut() {
                *x = v;
            }
        }
    }
    for ps in &ms {
        let e = generate(ps, u64::MAX)?.elements;
        let oracle = ps.iter().fold(BTreeSet::new(), |acc, p| diamond_oracle(&acc, &[*p].into()));
        if e != oracle {
            failures.push(format!("generate({ps:?})"));
        }
        let fs = cache.entry(e.clone()).or_insert_with(|| factor(&e));
        if !fs.contains(ps) {
            failures.push(format!("factor misses {ps:?}"));
        }
        round_trips += 1;
    }
    for (e, fs) in &cache {
        for f in fs {
            let back = f.iter().fold(BTreeSet::new(), |acc, p| diamond_oracle(&acc, &[*p].into()));
            if &back != e {
                failures.push(format!("factor({e:?}) returned {f:?}"));
            }
        }
    }
    let elapsed = start.elapsed();
    let limit = Duration::from_secs(10);
    let pass = failures.is_empty() && elapsed < limit;
    let detail = if failures.is_empty() {
        format!("10000 random triples, factor({{2,3,6}}) = [[2, 3]], {round_trips} round-trips over {} distinct sets", cache.len())
    } else {
        failures.into_iter().take(3).collect::<Vec<_>>().join("; ")
    };
    Ok(Outcome { pass, detail: format!("{detail} [limit 10 s]"), elapsed })
}

fn main() {
    let criteria: [(usize, fn() -> Res<Outcome>); 8] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
    ];
    let only: Option<usize> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let mut failed = 0;
    for (n, f) in criteria {
        if only.is_some_and(|o| o != n) {
            continue;
        }
        match f() {
            Ok(o) => {
                let verdict = if o.pass { "PASS" } else { "FAIL" };
                println!("criterion {n}: {verdict} ({:.2} s) {}", o.elapsed.as_secs_f64(), o.detail);
                failed += usize::from(!o.pass);
            }
            Err(e) => {
                println!("criterion {n}: FAIL error: {e}");
                failed += 1;
            }
        }
        if n == 5 {
            match note_5c() {
                Ok(s) => println!("{s}"),
                Err(e) => println!("note: {e}"),
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

//! Poisson suspension over a truncated infinite-type tower.
//!
//! The window is the cylinder `[F_w]_w`; points are atoms of level `n ≥ w`,
//! i.e. elements `f·c_{w+1}⋯c_n` with `f ∈ F_w`, `c_k ∈ C_k`. A configuration
//! has `Poisson(scale·μ(window))` points drawn uniformly among these atoms.
//! Trial `i` of seed `s` uses the ChaCha8 stream `i` of key `s`.

use num_rational::BigRational;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

use crate::group::GroupElement;
use crate::rational::{q_str, q_to_f64};
use crate::region::ElementSet;
use crate::tower::{CylinderSet, MeasureType, Tower, TowerError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PoissonError {
    #[error("finite-type tower: a Poisson suspension needs an infinite σ-finite measure")]
    FiniteType,
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error(transparent)]
    Tower(#[from] TowerError),
}

/// Largest window materialized for sampling.
const MAX_WINDOW: u128 = 4_000_000;

/// Default constant `c` in the TV tolerance `c/√trials`.
pub const TV_CONSTANT: f64 = 3.0;

/// Significance level of the chi-square independence test.
pub const CHI2_ALPHA: f64 = 1e-3;

pub fn default_tv_tolerance(trials: u64) -> f64 {
    TV_CONSTANT / (trials as f64).sqrt()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PointConfiguration {
    /// Atoms of the work level; repeated atoms are repeated points.
    pub points: Vec<GroupElement>,
    pub seed: u64,
    pub trial: u64,
    pub window_level: usize,
    pub work_level: usize,
}

impl PointConfiguration {
    /// `N_A` for a set of work-level atoms.
    pub fn count(&self, atoms: &ElementSet) -> u64 {
        self.points.iter().filter(|p| atoms.contains(p)).count() as u64
    }
}

/// Precomputed window data for repeated sampling.
#[derive(Clone, Debug)]
pub struct Sampler<'a> {
    tower: &'a Tower,
    window_level: usize,
    work_level: usize,
    f_w: Vec<GroupElement>,
    window_measure: BigRational,
    lambda: f64,
}

impl<'a> Sampler<'a> {
    pub fn new(tower: &'a Tower, window_level: usize, work_level: usize, scale: f64) -> Result<Self, PoissonError> {
        if tower.measure_report().verdict == MeasureType::FiniteType {
            return Err(PoissonError::FiniteType);
        }
        if window_level > work_level || work_level > tower.depth() {
            return Err(PoissonError::Precondition(format!(
                "need window level ≤ work level ≤ {} (got {window_level}, {work_level})",
                tower.depth()
            )));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(PoissonError::Precondition("intensity scale must be positive".into()));
        }
        let region = tower.f(window_level);
        if region.count() > MAX_WINDOW {
            return Err(PoissonError::Precondition(format!("window has {} atoms; too many", region.count())));
        }
        let window = tower.full_cylinder(window_level)?;
        let window_measure = tower.cylinder_measure(&window)?;
        let lambda = scale * q_to_f64(&window_measure);
        Ok(Sampler {
            tower,
            window_level,
            work_level,
            f_w: region.to_set(tower.group()).into_vec(),
            window_measure,
            lambda,
        })
    }

    pub fn tower(&self) -> &Tower {
        self.tower
    }

    pub fn work_level(&self) -> usize {
        self.work_level
    }

    pub fn window_measure(&self) -> &BigRational {
        &self.window_measure
    }

    /// Expected number of points in the window.
    pub fn intensity(&self) -> f64 {
        self.lambda
    }

    /// Work-level atoms of a cylinder, checked to lie in the window.
    pub fn atoms_of(&self, c: &CylinderSet) -> Result<ElementSet, PoissonError> {
        if c.level > self.work_level {
            return Err(PoissonError::Precondition("cylinder level is above the work level".into()));
        }
        // a lower-level cylinder refines into F_window
        let lifted;
        let c = if c.level < self.window_level {
            lifted = self.tower.refine(c, self.window_level)?;
            &lifted
        } else {
            c
        };
        let inside = c.base_set(self.tower.group()).iter().all(|x| {
            let mut base = x.clone();
            // undo the level decomposition: x ∈ F_w C_{w+1} ⋯ C_level iff it is a refined window atom
            for n in (self.window_level + 1..=c.level).rev() {
                match self.tower.c(n).iter().find(|cn| {
                    let y = self.tower.group().op_unchecked(&base, &self.tower.group().inv_unchecked(cn));
                    self.tower.f(n - 1).contains(self.tower.group(), &y)
                }) {
                    Some(cn) => base = self.tower.group().op_unchecked(&base, &self.tower.group().inv_unchecked(cn)),
                    None => return false,
                }
            }
            true
        });
        if !inside {
            return Err(PoissonError::Precondition("cylinder is not contained in the window".into()));
        }
        Ok(self.tower.refine(c, self.work_level)?.base_set(self.tower.group()))
    }

    /// The `trial`-th configuration of `seed`.
    pub fn sample(&self, seed: u64, trial: u64) -> PointConfiguration {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial);
        let k = if self.lambda > 0.0 {
            Poisson::new(self.lambda).expect("positive intensity").sample(&mut rng) as u64
        } else {
            0
        };
        let group = self.tower.group();
        let points = (0..k)
            .map(|_| {
                let mut x = self.f_w[rng.gen_range(0..self.f_w.len())].clone();
                for n in self.window_level + 1..=self.work_level {
                    let c = self.tower.c(n);
                    x = group.op_unchecked(&x, &c.as_slice()[rng.gen_range(0..c.len())]);
                }
                x
            })
            .collect();
        PointConfiguration { points, seed, trial, window_level: self.window_level, work_level: self.work_level }
    }
}

pub fn sample_configuration(
    t: &Tower,
    window_level: usize,
    work_level: usize,
    intensity_scale: f64,
    seed: u64,
) -> Result<PointConfiguration, PoissonError> {
    Ok(Sampler::new(t, window_level, work_level, intensity_scale)?.sample(seed, 0))
}

/// `T̃_g ω`: every point moves by `g`; points whose translate leaves `F_n`
/// are removed and counted as defect.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActedConfiguration {
    pub config: PointConfiguration,
    pub defect: usize,
}

pub fn suspension_act(t: &Tower, g: &GroupElement, cfg: &PointConfiguration) -> Result<ActedConfiguration, PoissonError> {
    t.group().check(g).map_err(TowerError::from)?;
    let kinds = t.group().coord_kinds();
    let region = t.f(cfg.work_level);
    let mut points = Vec::with_capacity(cfg.points.len());
    let mut defect = 0;
    for x in &cfg.points {
        let gx = t.group().op_unchecked(g, x);
        if region.contains_with(&kinds, &gx) {
            points.push(gx);
        } else {
            defect += 1;
        }
    }
    Ok(ActedConfiguration { config: PointConfiguration { points, ..cfg.clone() }, defect })
}

fn poisson_pmf(mu: f64, j: usize) -> f64 {
    let mut p = (-mu).exp();
    for i in 1..=j {
        p *= mu / i as f64;
    }
    p
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PoissonLawReport {
    #[serde(with = "q_str")]
    pub mu: BigRational,
    pub trials: u64,
    pub seed: u64,
    pub histogram: Vec<u64>,
    pub tv_distance: f64,
    pub tolerance: f64,
    pub p_zero: f64,
    pub mean: f64,
    pub variance: f64,
    /// `|mean − μ| ≤ 4√(μ/trials)`.
    pub mean_ok: bool,
    pub pass: bool,
}

/// Compares the empirical law of `N_A` with `Poisson(scale·μ(A))` in total variation.
pub fn verify_poisson_law(
    sampler: &Sampler<'_>,
    a: &CylinderSet,
    trials: u64,
    tolerance: Option<f64>,
    seed: u64,
) -> Result<PoissonLawReport, PoissonError> {
    if trials == 0 {
        return Err(PoissonError::Precondition("at least one trial is needed".into()));
    }
    let atoms = sampler.atoms_of(a)?;
    let mu_q = sampler.tower.cylinder_measure(a)?;
    let mu = q_to_f64(&mu_q) * sampler.lambda / q_to_f64(&sampler.window_measure);
    let mut hist: Vec<u64> = Vec::new();
    for trial in 0..trials {
        let n = sampler.sample(seed, trial).count(&atoms) as usize;
        if hist.len() <= n {
            hist.resize(n + 1, 0);
        }
        hist[n] += 1;
    }
    let total = trials as f64;
    let mut tv = 0.0;
    let mut covered = 0.0;
    for (j, h) in hist.iter().enumerate() {
        let p = poisson_pmf(mu, j);
        covered += p;
        tv += (*h as f64 / total - p).abs();
    }
    tv = 0.5 * (tv + (1.0 - covered).max(0.0));
    let mean = hist.iter().enumerate().map(|(j, h)| j as f64 * *h as f64).sum::<f64>() / total;
    let variance = hist.iter().enumerate().map(|(j, h)| (j as f64 - mean).powi(2) * *h as f64).sum::<f64>() / total;
    let tolerance = tolerance.unwrap_or_else(|| default_tv_tolerance(trials));
    let mean_ok = (mean - mu).abs() <= 4.0 * (mu / total).sqrt();
    Ok(PoissonLawReport {
        mu: mu_q,
        trials,
        seed,
        p_zero: hist.first().copied().unwrap_or(0) as f64 / total,
        histogram: hist,
        tv_distance: tv,
        tolerance,
        mean,
        variance,
        mean_ok,
        pass: tv <= tolerance,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IndependenceReport {
    pub trials: u64,
    pub seed: u64,
    pub covariance: f64,
    pub tolerance: f64,
    pub chi_square: f64,
    pub degrees_of_freedom: u64,
    pub p_value: f64,
    pub pass: bool,
}

/// Covariance and a chi-square test on the joint histogram of `(N_A, N_B)` for disjoint `A`, `B`.
pub fn verify_independence(
    sampler: &Sampler<'_>,
    a: &CylinderSet,
    b: &CylinderSet,
    trials: u64,
    tolerance: f64,
    seed: u64,
) -> Result<IndependenceReport, PoissonError> {
    let sa = sampler.atoms_of(a)?;
    let sb = sampler.atoms_of(b)?;
    if !sa.is_disjoint(&sb) {
        return Err(PoissonError::Precondition("A and B are not disjoint".into()));
    }
    if trials < 2 {
        return Err(PoissonError::Precondition("at least two trials are needed".into()));
    }
    let pairs: Vec<(u64, u64)> = (0..trials)
        .map(|t| {
            let cfg = sampler.sample(seed, t);
            (cfg.count(&sa), cfg.count(&sb))
        })
        .collect();
    let n = trials as f64;
    let ma = pairs.iter().map(|p| p.0 as f64).sum::<f64>() / n;
    let mb = pairs.iter().map(|p| p.1 as f64).sum::<f64>() / n;
    let cov = pairs.iter().map(|p| (p.0 as f64 - ma) * (p.1 as f64 - mb)).sum::<f64>() / (n - 1.0);

    // categories 0..k with the last one absorbing the tail; k keeps ≥ 50 samples in the tail bin
    let cut = |vals: Vec<u64>| -> u64 {
        let max = vals.iter().copied().max().unwrap_or(0);
        (0..=max).rev().find(|&k| vals.iter().filter(|v| **v >= k).count() >= 50).unwrap_or(0)
    };
    let ka = cut(pairs.iter().map(|p| p.0).collect());
    let kb = cut(pairs.iter().map(|p| p.1).collect());
    let (ra, rb) = (ka as usize + 1, kb as usize + 1);
    let mut table = vec![vec![0f64; rb]; ra];
    for (x, y) in &pairs {
        table[(*x).min(ka) as usize][(*y).min(kb) as usize] += 1.0;
    }
    let rows: Vec<f64> = table.iter().map(|r| r.iter().sum()).collect();
    let cols: Vec<f64> = (0..rb).map(|j| table.iter().map(|r| r[j]).sum()).collect();
    let mut chi2 = 0.0;
    for i in 0..ra {
        for j in 0..rb {
            let e = rows[i] * cols[j] / n;
            if e > 0.0 {
                chi2 += (table[i][j] - e).powi(2) / e;
            }
        }
    }
    let dof = ((ra - 1) * (rb - 1)) as u64;
    let p_value = if dof == 0 {
        1.0
    } else {
        1.0 - ChiSquared::new(dof as f64).expect("positive dof").cdf(chi2)
    };
    Ok(IndependenceReport {
        trials,
        seed,
        covariance: cov,
        tolerance,
        chi_square: chi2,
        degrees_of_freedom: dof,
        p_value,
        pass: cov.abs() <= tolerance && p_value >= CHI2_ALPHA,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuspensionRigidityRow {
    pub index: usize,
    pub element: Vec<i64>,
    /// Empirical `P(N_A(ω) ≠ N_A(T̃_g ω))`, maximized over the test sets.
    pub estimate: f64,
    /// `1 − exp(−scale·μ(T_g A △ A))`, maximized over the test sets.
    pub bound: f64,
    pub defect_fraction: f64,
}

/// Monte-Carlo rigidity of the suspension. Points whose translate leaves the
/// truncated space count as having left `A`.
pub fn verify_rigidity_suspension(
    sampler: &Sampler<'_>,
    seq: &[GroupElement],
    cylinders: &[CylinderSet],
    trials: u64,
    seed: u64,
) -> Result<Vec<SuspensionRigidityRow>, PoissonError> {
    let t = sampler.tower;
    let scale = sampler.lambda / q_to_f64(&sampler.window_measure);
    let atoms: Vec<ElementSet> = cylinders.iter().map(|c| sampler.atoms_of(c)).collect::<Result<_, _>>()?;
    let mut rows = Vec::with_capacity(seq.len());
    for (index, g) in seq.iter().enumerate() {
        t.group().check(g).map_err(TowerError::from)?;
        let mut changed = vec![0u64; atoms.len()];
        let (mut points, mut defect) = (0usize, 0usize);
        for trial in 0..trials {
            let cfg = sampler.sample(seed, trial);
            let moved = suspension_act(t, g, &cfg)?;
            points += cfg.points.len();
            defect += moved.defect;
            for (i, a) in atoms.iter().enumerate() {
                if cfg.count(a) != moved.config.count(a) {
                    changed[i] += 1;
                }
            }
        }
        let mut bound: f64 = 0.0;
        for c in cylinders {
            let m = q_to_f64(&t.symdiff_measure(g, c, sampler.work_level)?);
            bound = bound.max(1.0 - (-scale * m).exp());
        }
        let estimate = changed.iter().copied().max().unwrap_or(0) as f64 / trials.max(1) as f64;
        rows.push(SuspensionRigidityRow {
            index,
            element: g.0.clone(),
            estimate,
            bound,
            defect_fraction: if points == 0 { 0.0 } else { defect as f64 / points as f64 },
        });
    }
    Ok(rows)
}

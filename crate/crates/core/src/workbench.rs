//! Config-driven runs: a strict JSON config describes a tower and a set of
//! blocks; each command turns one block into a [`Report`] of tables, results
//! and pass/fail assertions. Diagnostics are reported but never asserted.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::constructions::{
    aux_tower_j, gamma_tower, rigid_tower_discrete, rigid_tower_rm, AlphaPlan, ConstructionError,
    DiscreteConstruction, HeightPlan, RigidPlan, RmConstruction, WidthRule,
};
use crate::diamond;
use crate::group::{GroupDescriptor, GroupElement};
use crate::koopman::{mixing_diagnostic, rigidity_table, DiagnosticRow, Probe};
use crate::poisson::{self, Sampler};
use crate::rational::{fmt_q, r64_str};
use crate::region::{CoordBox, ElementSet, Region};
use crate::spectral::{self, FiniteRep, MultiplicitySet, RepDoc};
use crate::tower::{CylinderSet, MeasureType, RegionDoc, Tower, TowerDoc};

pub const SCHEMA_VERSION: u32 = 1;

/// Towers up to this many top-level atoms are embedded in validate reports.
const MAX_TOWER_DOC: u128 = 10_000;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_ASSERTION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Error)]
pub enum WorkbenchError {
    #[error("invalid config:\n{0}")]
    Config(ConfigErrors),
    #[error("{0}")]
    Runtime(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl WorkbenchError {
    pub fn exit_code(&self) -> i32 {
        match self {
            WorkbenchError::Config(_) => EXIT_CONFIG,
            _ => EXIT_RUNTIME,
        }
    }

    fn config(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        WorkbenchError::Config(ConfigErrors(vec![SchemaError { pointer: pointer.into(), message: message.into() }]))
    }
}

impl From<ConstructionError> for WorkbenchError {
    fn from(e: ConstructionError) -> Self {
        match e {
            ConstructionError::Plan(_)
            | ConstructionError::Orientation(_)
            | ConstructionError::NotGood(_)
            | ConstructionError::UnsupportedJ(_)
            | ConstructionError::Group(_) => WorkbenchError::config("/tower", e.to_string()),
            e => WorkbenchError::Runtime(e.to_string()),
        }
    }
}

fn runtime(e: impl fmt::Display) -> WorkbenchError {
    WorkbenchError::Runtime(e.to_string())
}

fn poisson_err(e: poisson::PoissonError) -> WorkbenchError {
    match e {
        poisson::PoissonError::Tower(e) => runtime(e),
        e => WorkbenchError::config("/poisson", e.to_string()),
    }
}

/// One schema violation, located by a JSON pointer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SchemaError {
    pub pointer: String,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<SchemaError>);

impl std::error::Error for ConfigErrors {}

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.0 {
            let at = if e.pointer.is_empty() { "/" } else { &e.pointer };
            writeln!(f, "  at {at}: {}", e.message)?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// config schema

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkbenchConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tower: Option<TowerSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validate: Option<ValidateBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rigidity: Option<RigidityBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectral: Option<SpectralBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poisson: Option<PoissonBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replab: Option<ReplabBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diamond: Option<DiamondBlock>,
}

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TowerSpec {
    /// Levels given verbatim.
    Explicit {
        group: GroupDescriptor,
        f: Vec<RegionDoc>,
        c: Vec<Vec<Value>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        measure_hint: Option<MeasureType>,
    },
    /// The auxiliary tower over `Jᵖ ⋊ ℤ(p)`.
    Aux { j: GroupDescriptor, p: i64, depth: usize },
    /// `base × aux`, read over `G × Jᵖ ⋊ ℤ(p)`; the aux depth follows the base.
    Gamma { base: Box<TowerSpec>, j: GroupDescriptor, p: i64 },
    RigidRm {
        group: GroupDescriptor,
        sequence: SequenceSpec,
        #[serde(default = "default_alphas")]
        alphas: AlphaPlan,
        #[serde(default = "default_heights")]
        heights: HeightPlan,
        #[serde(default)]
        width_rule: WidthRule,
        depth: usize,
    },
    RigidDiscrete {
        group: GroupDescriptor,
        sequence: SequenceSpec,
        /// Defaults to the identity.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        d: Option<Value>,
        #[serde(default = "default_heights")]
        heights: HeightPlan,
        #[serde(default = "default_growth", with = "r64_str")]
        growth: Rational64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        f0: Option<Vec<Value>>,
        depth: usize,
        #[serde(default = "default_order_bound")]
        order_bound: u64,
    },
}

fn default_alphas() -> AlphaPlan {
    RigidPlan::default().alphas
}
fn default_heights() -> HeightPlan {
    RigidPlan::default().heights
}
fn default_growth() -> Rational64 {
    RigidPlan::default().growth
}
fn default_order_bound() -> u64 {
    10_000
}

/// A finite sequence of group elements.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SequenceSpec {
    Explicit { values: Vec<Value> },
    /// `base^from, …, base^to` in the first coordinate, zero elsewhere.
    Powers { base: i64, from: u32, to: u32 },
    /// `e_0, …, e_{count-1}`.
    UnitVectors { count: usize },
}

impl SequenceSpec {
    pub fn resolve(&self, group: &GroupDescriptor, pointer: &str) -> Result<Vec<GroupElement>, WorkbenchError> {
        let w = group.width();
        let raw: Vec<Value> = match self {
            SequenceSpec::Explicit { values } => values.clone(),
            SequenceSpec::Powers { base, from, to } => (*from..=*to)
                .map(|k| {
                    let x = base
                        .checked_pow(k)
                        .ok_or_else(|| WorkbenchError::config(pointer, format!("{base}^{k} overflows")))?;
                    let mut v = vec![Value::from(0); w];
                    *v.first_mut().ok_or_else(|| WorkbenchError::config(pointer, "trivial group"))? = Value::from(x);
                    Ok(Value::Array(v))
                })
                .collect::<Result<_, WorkbenchError>>()?,
            SequenceSpec::UnitVectors { count } => {
                if *count > w {
                    return Err(WorkbenchError::config(pointer, format!("only {w} coordinates")));
                }
                (0..*count)
                    .map(|k| Value::Array((0..w).map(|i| Value::from(i64::from(i == k))).collect()))
                    .collect()
            }
        };
        raw.iter()
            .enumerate()
            .map(|(i, v)| group.decode(v).map_err(|e| WorkbenchError::config(format!("{pointer}/{i}"), e.to_string())))
            .collect()
    }
}

/// `[A]_level`; `base` defaults to all of `F_level`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CylinderDoc {
    pub level: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<RegionDoc>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateBlock {
    #[serde(default)]
    pub folner_probes: Vec<Value>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RigidityBlock {
    /// Empty: the construction's own rigidity elements.
    #[serde(default)]
    pub probes: Vec<ProbeDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mixing: Option<MixingDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeDoc {
    pub element: Value,
    pub work_level: usize,
    pub cylinders: Vec<CylinderDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixingDoc {
    pub sequence: SequenceSpec,
    pub pairs: Vec<(CylinderDoc, CylinderDoc)>,
    pub level: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralBlock {
    #[serde(default = "default_tol")]
    pub tolerance: f64,
    #[serde(default)]
    pub reps: BTreeMap<String, RepDoc>,
    pub checks: Vec<SpectralCheck>,
}

fn default_tol() -> f64 {
    spectral::DEFAULT_TOL
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SpectralCheck {
    Multiplicity {
        rep: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        expect: Option<MultiplicitySet>,
    },
    DirectSum {
        left: String,
        right: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        expect: Option<MultiplicitySet>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        save_as: Option<String>,
    },
    Tensor {
        left: String,
        right: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        expect: Option<MultiplicitySet>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        save_as: Option<String>,
    },
    ProductKoopman {
        s: String,
        t: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        expect: Option<MultiplicitySet>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        save_as: Option<String>,
    },
    Fock { rep: String, n: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoissonBlock {
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: u64,
    pub window_level: usize,
    pub work_level: usize,
    #[serde(default = "one_f64")]
    pub scale: f64,
    pub a: CylinderDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<CylinderDoc>,
    /// Total-variation tolerance; defaults to `3/√trials`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default = "default_cov_tol")]
    pub covariance_tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rigidity: Option<SuspensionRigidityDoc>,
}

fn default_trials() -> u64 {
    10_000
}
fn one_f64() -> f64 {
    1.0
}
fn default_cov_tol() -> f64 {
    0.02
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuspensionRigidityDoc {
    /// Defaults to the construction's rigidity elements.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sequence: Option<SequenceSpec>,
    pub cylinders: Vec<CylinderDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control: Option<Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplabBlock {
    pub seed: u64,
    #[serde(default = "default_replab_trials")]
    pub trials: u64,
    #[serde(default = "one_usize")]
    pub generators: usize,
    #[serde(default = "three")]
    pub max_blocks: usize,
    #[serde(default = "three")]
    pub max_dim: usize,
}

fn default_replab_trials() -> u64 {
    500
}
fn one_usize() -> usize {
    1
}
fn three() -> usize {
    3
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiamondBlock {
    #[serde(default)]
    pub gen: Vec<GenDoc>,
    #[serde(default)]
    pub factor: Vec<FactorDoc>,
    #[serde(default)]
    pub check: Vec<CheckDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenDoc {
    pub ps: Vec<u64>,
    pub cap: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<BTreeSet<u64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorDoc {
    pub set: BTreeSet<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<Vec<Vec<u64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckDoc {
    pub set: BTreeSet<u64>,
    /// Defaults to `max(set)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<u64>,
}

/// Command-line overrides.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub depth: Option<usize>,
    pub trials: Option<u64>,
}

/// Parses and checks a config; every error carries a JSON pointer.
pub fn parse_config(text: &str) -> Result<WorkbenchConfig, ConfigErrors> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: WorkbenchConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let pointer = pointer_of(e.path());
        ConfigErrors(vec![SchemaError { pointer, message: e.into_inner().to_string() }])
    })?;
    let errors = cfg.check();
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigErrors(errors))
    }
}

fn pointer_of(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => out.push_str(&format!("/{}", key.replace('~', "~0").replace('/', "~1"))),
            Segment::Enum { variant } => out.push_str(&format!("/{variant}")),
            Segment::Unknown => out.push_str("/?"),
        }
    }
    out
}

impl WorkbenchConfig {
    /// Semantic checks the schema cannot express.
    pub fn check(&self) -> Vec<SchemaError> {
        let mut errs = Vec::new();
        let mut err = |p: &str, m: String| errs.push(SchemaError { pointer: p.into(), message: m });
        if self.schema_version != SCHEMA_VERSION {
            err("/schema_version", format!("unsupported schema version {} (expected {SCHEMA_VERSION})", self.schema_version));
        }
        if let Some(t) = &self.tower {
            check_tower(t, "/tower", &mut err);
        }
        if let Some(p) = &self.poisson {
            if p.trials == 0 {
                err("/poisson/trials", "must be positive".into());
            }
            if !(p.scale > 0.0 && p.scale.is_finite()) {
                err("/poisson/scale", "must be positive".into());
            }
            if p.window_level > p.work_level {
                err("/poisson/work_level", "must be at least window_level".into());
            }
        }
        if let Some(r) = &self.replab {
            if r.trials == 0 || r.generators == 0 || r.max_blocks == 0 || r.max_dim == 0 {
                err("/replab", "trials, generators, max_blocks and max_dim must be positive".into());
            }
        }
        if let Some(s) = &self.spectral {
            if !(s.tolerance > 0.0) {
                err("/spectral/tolerance", "must be positive".into());
            }
        }
        if let Some(d) = &self.diamond {
            for (i, g) in d.gen.iter().enumerate() {
                if g.ps.is_empty() || g.ps.contains(&0) {
                    err(&format!("/diamond/gen/{i}/ps"), "needs positive integers".into());
                }
            }
        }
        errs
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), WorkbenchError> {
        if let Some(seed) = o.seed {
            if let Some(p) = &mut self.poisson {
                p.seed = seed;
            }
            if let Some(r) = &mut self.replab {
                r.seed = seed;
            }
        }
        if let Some(trials) = o.trials {
            if trials == 0 {
                return Err(WorkbenchError::config("--trials", "must be positive"));
            }
            if let Some(p) = &mut self.poisson {
                p.trials = trials;
            }
            if let Some(r) = &mut self.replab {
                r.trials = trials;
            }
        }
        if let (Some(depth), Some(t)) = (o.depth, &mut self.tower) {
            set_depth(t, depth)?;
        }
        Ok(())
    }

    /// Fills defaults that depend on other fields.
    pub fn resolve(&mut self) {
        if let Some(p) = &mut self.poisson {
            p.tolerance.get_or_insert(poisson::default_tv_tolerance(p.trials));
        }
    }
}

fn check_tower(t: &TowerSpec, at: &str, err: &mut impl FnMut(&str, String)) {
    let group = match t {
        TowerSpec::Explicit { group, .. } | TowerSpec::RigidRm { group, .. } | TowerSpec::RigidDiscrete { group, .. } => {
            Some(group)
        }
        TowerSpec::Aux { j, p, .. } | TowerSpec::Gamma { j, p, .. } => {
            if *p < 2 {
                err(&format!("{at}/p"), "must be at least 2".into());
            }
            if let Err(e) = j.validate() {
                err(&format!("{at}/j"), e.to_string());
            }
            None
        }
    };
    if let Some(g) = group {
        if let Err(e) = g.validate() {
            err(&format!("{at}/group"), e.to_string());
        }
    }
    if let TowerSpec::Gamma { base, .. } = t {
        check_tower(base, &format!("{at}/base"), err);
    }
}

fn set_depth(t: &mut TowerSpec, depth: usize) -> Result<(), WorkbenchError> {
    match t {
        TowerSpec::Aux { depth: d, .. } | TowerSpec::RigidRm { depth: d, .. } | TowerSpec::RigidDiscrete { depth: d, .. } => {
            *d = depth
        }
        TowerSpec::Gamma { base, .. } => set_depth(base, depth)?,
        TowerSpec::Explicit { .. } => return Err(WorkbenchError::config("/tower", "--depth does not apply to explicit towers")),
    }
    Ok(())
}

pub fn load_config(path: &Path, overrides: &Overrides) -> Result<WorkbenchConfig, WorkbenchError> {
    let text = fs::read_to_string(path).map_err(|source| WorkbenchError::Io { path: path.to_path_buf(), source })?;
    let mut cfg = parse_config(&text).map_err(WorkbenchError::Config)?;
    cfg.apply(overrides)?;
    cfg.resolve();
    Ok(cfg)
}

// ---------------------------------------------------------------------------
// towers

#[derive(Clone, Debug)]
pub enum Construction {
    Plain,
    Aux,
    Rm { built: RmConstruction, sequence: Vec<GroupElement> },
    Discrete(DiscreteConstruction),
}

#[derive(Clone, Debug)]
pub struct BuiltTower {
    pub tower: Tower,
    pub construction: Construction,
}

pub fn build_tower(spec: &TowerSpec) -> Result<BuiltTower, WorkbenchError> {
    let at = "/tower";
    Ok(match spec {
        TowerSpec::Explicit { group, f, c, measure_hint } => {
            let doc = TowerDoc { f: f.clone(), c: c.clone(), measure_hint: *measure_hint };
            let tower = Tower::from_doc(group.clone(), &doc).map_err(|e| WorkbenchError::config(at, e.to_string()))?;
            BuiltTower { tower, construction: Construction::Plain }
        }
        TowerSpec::Aux { j, p, depth } => BuiltTower { tower: aux_tower_j(j, *p, *depth)?, construction: Construction::Aux },
        TowerSpec::Gamma { base, j, p } => {
            let base = build_tower(base)?;
            let aux = aux_tower_j(j, *p, base.tower.depth())?;
            BuiltTower { tower: gamma_tower(&base.tower, &aux)?, construction: Construction::Plain }
        }
        TowerSpec::RigidRm { group, sequence, alphas, heights, width_rule, depth } => {
            let seq = sequence.resolve(group, "/tower/sequence")?;
            let plan = RigidPlan {
                alphas: alphas.clone(),
                heights: heights.clone(),
                width_rule: *width_rule,
                ..RigidPlan::default()
            };
            let built = rigid_tower_rm(group, &seq, &plan, *depth)?;
            BuiltTower { tower: built.tower.clone(), construction: Construction::Rm { built, sequence: seq } }
        }
        TowerSpec::RigidDiscrete { group, sequence, d, heights, growth, f0, depth, order_bound } => {
            let seq = sequence.resolve(group, "/tower/sequence")?;
            let d = match d {
                Some(v) => group.decode(v).map_err(|e| WorkbenchError::config("/tower/d", e.to_string()))?,
                None => group.identity(),
            };
            let f0 = f0
                .as_ref()
                .map(|vs| {
                    vs.iter()
                        .map(|v| group.decode(v))
                        .collect::<Result<ElementSet, _>>()
                        .map_err(|e| WorkbenchError::config("/tower/f0", e.to_string()))
                })
                .transpose()?;
            let plan = RigidPlan { heights: heights.clone(), growth: *growth, f0, ..RigidPlan::default() };
            let built = rigid_tower_discrete(&seq, group, &d, &plan, *depth, *order_bound)?;
            BuiltTower { tower: built.tower.clone(), construction: Construction::Discrete(built) }
        }
    })
}

fn cylinder(t: &Tower, doc: &CylinderDoc, at: &str) -> Result<CylinderSet, WorkbenchError> {
    let bad = |e: String| WorkbenchError::config(at, e);
    if doc.level > t.depth() {
        return Err(bad(format!("level {} is beyond the depth {}", doc.level, t.depth())));
    }
    match &doc.base {
        None => t.full_cylinder(doc.level).map_err(|e| bad(e.to_string())),
        Some(RegionDoc::Box(ranges)) => {
            let set = Region::Box(CoordBox::new(ranges.clone())).to_set(t.group());
            t.cylinder(doc.level, set).map_err(|e| bad(e.to_string()))
        }
        Some(RegionDoc::Explicit(vs)) => {
            let set = vs
                .iter()
                .map(|v| t.group().decode(v))
                .collect::<Result<ElementSet, _>>()
                .map_err(|e| bad(e.to_string()))?;
            t.cylinder(doc.level, set).map_err(|e| bad(e.to_string()))
        }
    }
}

/// A rigidity probe with the exact bound the construction certifies for it.
#[derive(Clone, Debug)]
pub struct CertifiedProbe {
    pub level: usize,
    pub probe: Probe,
    pub bound: BigRational,
}

fn first_atom(t: &Tower, n: usize) -> GroupElement {
    match t.f(n) {
        Region::Box(b) => b.point_at(&t.group().coord_kinds(), &vec![0; b.ranges.len()]),
        Region::Explicit(s) => s.as_slice()[0].clone(),
    }
}

/// Per level `n`, the rigidity element of the construction and its bound
/// `2(1 − ratio_n)·μ(A)`: singleton cylinders of `F_{n-1}` for the `ℝᵐ` tower,
/// `[F_0]_0` for the discrete one; evaluated at level `n`.
pub fn certified_probes(b: &BuiltTower) -> Result<Vec<CertifiedProbe>, WorkbenchError> {
    let t = &b.tower;
    let two = BigRational::from_integer(BigInt::from(2));
    match &b.construction {
        Construction::Rm { built, sequence } => (1..=t.depth())
            .map(|n| {
                let id = t.group().identity();
                let corner = first_atom(t, n - 1);
                let cylinders = [id, corner]
                    .into_iter()
                    .collect::<BTreeSet<_>>()
                    .into_iter()
                    .map(|x| t.cylinder(n - 1, ElementSet::singleton(x)))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(runtime)?;
                let bound = &two * (BigRational::one() - &built.levels[n - 1].ratio) * t.atom_measure(n - 1);
                Ok(CertifiedProbe {
                    level: n,
                    probe: Probe { element: built.rigidity_element(sequence, n), work_level: n, cylinders },
                    bound,
                })
            })
            .collect(),
        Construction::Discrete(built) => {
            let a = t.full_cylinder(0).map_err(runtime)?;
            let mu = t.cylinder_measure(&a).map_err(runtime)?;
            Ok((1..=t.depth())
                .map(|n| CertifiedProbe {
                    level: n,
                    probe: Probe { element: built.steps[n - 1].clone(), work_level: n, cylinders: vec![a.clone()] },
                    bound: &two * (BigRational::one() - &built.levels[n - 1].ratio) * &mu,
                })
                .collect())
        }
        _ => Ok(Vec::new()),
    }
}

/// The elements a construction is rigid along, one per level.
pub fn rigidity_elements(b: &BuiltTower) -> Vec<GroupElement> {
    match &b.construction {
        Construction::Rm { built, sequence } => (1..=b.tower.depth()).map(|n| built.rigidity_element(sequence, n)).collect(),
        Construction::Discrete(built) => built.steps.clone(),
        _ => Vec::new(),
    }
}

// ---------------------------------------------------------------------------
// reports

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Assertion {
    pub name: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl Assertion {
    fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Assertion { name: name.into(), pass, detail: detail.into() }
    }
}

/// A CSV-shaped table.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: &str, header: &[&str]) -> Self {
        Table { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    /// The resolved config the report was produced from.
    pub config: Value,
    pub passed: bool,
    pub assertions: Vec<Assertion>,
    pub results: Value,
    #[serde(skip)]
    pub tables: Vec<Table>,
}

impl Report {
    fn new(command: &str, config: &Value, assertions: Vec<Assertion>, results: Value, tables: Vec<Table>) -> Self {
        Report {
            schema_version: SCHEMA_VERSION,
            command: command.into(),
            config: config.clone(),
            passed: assertions.iter().all(|a| a.pass),
            assertions,
            results,
            tables,
        }
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed {
            EXIT_PASS
        } else {
            EXIT_ASSERTION
        }
    }

    /// A short human-readable summary.
    pub fn summary(&self) -> String {
        let mut out = format!("{}: {}\n", self.command, if self.passed { "PASS" } else { "FAIL" });
        for a in &self.assertions {
            out.push_str(&format!("  [{}] {}", if a.pass { "ok" } else { "FAIL" }, a.name));
            if !a.detail.is_empty() {
                out.push_str(&format!(" ({})", a.detail));
            }
            out.push('\n');
        }
        out
    }
}

/// Writes `<command>.json` and `<command>_<table>.csv` files into `dir`.
pub fn write_report(report: &Report, dir: &Path, json: bool, csv: bool) -> Result<Vec<PathBuf>, WorkbenchError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| WorkbenchError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let mut written = Vec::new();
    if json {
        let path = dir.join(format!("{}.json", report.command));
        let text = serde_json::to_string_pretty(report).map_err(runtime)?;
        fs::write(&path, text + "\n").map_err(io(&path))?;
        written.push(path);
    }
    if csv {
        for t in &report.tables {
            let path = dir.join(format!("{}_{}.csv", report.command, t.name));
            let mut w = csv::Writer::from_path(&path).map_err(|e| WorkbenchError::Io {
                path: path.clone(),
                source: std::io::Error::other(e.to_string()),
            })?;
            let csv_err = |e: csv::Error| WorkbenchError::Io { path: path.clone(), source: std::io::Error::other(e.to_string()) };
            w.write_record(&t.header).map_err(csv_err)?;
            for r in &t.rows {
                w.write_record(r).map_err(csv_err)?;
            }
            w.flush().map_err(io(&path))?;
            written.push(path);
        }
    }
    Ok(written)
}

fn fmt_elem(e: &[i64]) -> String {
    let parts: Vec<String> = e.iter().map(i64::to_string).collect();
    format!("({})", parts.join(","))
}

fn fmt_set(s: &BTreeSet<u64>) -> String {
    let parts: Vec<String> = s.iter().map(u64::to_string).collect();
    format!("{{{}}}", parts.join(","))
}

// ---------------------------------------------------------------------------
// commands

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Validate,
    Rigidity,
    Spectral,
    Poisson,
    Replab,
    Diamond,
    All,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Rigidity => "rigidity",
            Command::Spectral => "spectral",
            Command::Poisson => "poisson",
            Command::Replab => "replab",
            Command::Diamond => "diamond",
            Command::All => "all",
        }
    }
}

/// Runs `command` on a resolved config. `all` runs every block present.
pub fn run(cfg: &WorkbenchConfig, command: Command) -> Result<Vec<Report>, WorkbenchError> {
    let resolved = serde_json::to_value(cfg).map_err(runtime)?;
    let tower = cfg.tower.as_ref().map(build_tower).transpose()?;
    let need_tower = |name: &str| {
        tower.as_ref().ok_or_else(|| WorkbenchError::config("/tower", format!("`{name}` needs a tower")))
    };
    let missing = |block: &str| WorkbenchError::config(format!("/{block}"), format!("`{block}` block is missing"));
    let mut out = Vec::new();
    let wants = |c: Command| command == c || command == Command::All;
    if wants(Command::Validate) && (command == Command::Validate || tower.is_some()) {
        let block = cfg.validate.clone().unwrap_or_default();
        out.push(run_validate(need_tower("validate")?, &block, &resolved)?);
    }
    if wants(Command::Rigidity) && (command == Command::Rigidity || cfg.rigidity.is_some()) {
        let block = cfg.rigidity.clone().unwrap_or_default();
        out.push(run_rigidity(need_tower("rigidity")?, &block, &resolved)?);
    }
    if wants(Command::Spectral) && (command == Command::Spectral || cfg.spectral.is_some()) {
        out.push(run_spectral(cfg.spectral.as_ref().ok_or_else(|| missing("spectral"))?, &resolved)?);
    }
    if wants(Command::Poisson) && (command == Command::Poisson || cfg.poisson.is_some()) {
        let block = cfg.poisson.as_ref().ok_or_else(|| missing("poisson"))?;
        out.push(run_poisson(need_tower("poisson")?, block, &resolved)?);
    }
    if wants(Command::Replab) && (command == Command::Replab || cfg.replab.is_some()) {
        out.push(run_replab(cfg.replab.as_ref().ok_or_else(|| missing("replab"))?, &resolved)?);
    }
    if wants(Command::Diamond) && (command == Command::Diamond || cfg.diamond.is_some()) {
        out.push(run_diamond(cfg.diamond.as_ref().ok_or_else(|| missing("diamond"))?, &resolved)?);
    }
    Ok(out)
}

pub fn run_validate(b: &BuiltTower, block: &ValidateBlock, config: &Value) -> Result<Report, WorkbenchError> {
    let t = &b.tower;
    let probes = block
        .folner_probes
        .iter()
        .enumerate()
        .map(|(i, v)| t.group().decode(v).map_err(|e| WorkbenchError::config(format!("/validate/folner_probes/{i}"), e.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    let rep = t.validate(&probes).map_err(runtime)?;
    let failing: Vec<String> = rep
        .levels
        .iter()
        .filter(|l| !(l.cf2 && l.cf3 && l.cf4))
        .map(|l| l.level.to_string())
        .collect();
    let mut assertions = vec![Assertion::new(
        "CF2, CF3, CF4 at every level",
        failing.is_empty(),
        if failing.is_empty() { String::new() } else { format!("failing levels {}", failing.join(",")) },
    )];
    let mut levels = Table::new("levels", &["level", "c_size", "cf2", "cf3", "cf4", "factor"]);
    for (l, f) in rep.levels.iter().zip(&rep.measure.factors) {
        levels.push(vec![
            l.level.to_string(),
            l.c_size.to_string(),
            l.cf2.to_string(),
            l.cf3.to_string(),
            l.cf4.to_string(),
            fmt_q(f),
        ]);
    }
    let mut folner = Table::new("folner", &["level", "probe", "ratio"]);
    for r in &rep.folner {
        folner.push(vec![r.level.to_string(), r.probe.to_string(), fmt_q(&r.ratio)]);
    }
    let mut tables = vec![levels, folner];
    let mut results = json!({ "validation": rep });
    if t.f(t.depth()).count() <= MAX_TOWER_DOC {
        results["tower"] = json!(t.to_doc());
    }
    match &b.construction {
        Construction::Aux => {
            let ones = rep.measure.factors.iter().all(|f| f.is_one());
            assertions.push(Assertion::new("every CFfin factor equals 1", ones, ""));
        }
        Construction::Rm { built, .. } => {
            let mut cert = Table::new(
                "certificates",
                &["level", "k", "h", "c_size", "alpha", "factor", "factor_bound", "factor_ok", "ratio", "ratio_ok"],
            );
            for l in &built.levels {
                cert.push(vec![
                    l.level.to_string(),
                    l.k.to_string(),
                    l.h.to_string(),
                    l.c_size.to_string(),
                    crate::rational::fmt_r64(&l.alpha),
                    fmt_q(&l.factor),
                    fmt_q(&l.factor_bound),
                    l.factor_ok.to_string(),
                    fmt_q(&l.ratio),
                    l.ratio_ok.to_string(),
                ]);
            }
            assertions.push(Assertion::new(
                "factor < (1+α_n)^m at every level",
                built.levels.iter().all(|l| l.factor_ok),
                "",
            ));
            assertions.push(Assertion::new(
                "rigidity ratio = 2h/(2h+1) at every level",
                built.levels.iter().all(|l| l.ratio_ok),
                "",
            ));
            results["certificates"] = json!(built.levels);
            results["subsequence"] = json!(built.subsequence);
            tables.push(cert);
        }
        Construction::Discrete(built) => {
            let mut cert =
                Table::new("certificates", &["level", "k", "s", "h", "kind", "c_size", "ratio", "ratio_ok", "independent", "factor"]);
            for l in &built.levels {
                cert.push(vec![
                    l.level.to_string(),
                    l.k.to_string(),
                    fmt_elem(&l.s),
                    l.h.to_string(),
                    serde_json::to_value(l.kind).map_err(runtime)?.as_str().unwrap_or_default().to_string(),
                    l.c_size.to_string(),
                    fmt_q(&l.ratio),
                    l.ratio_ok.to_string(),
                    l.independent.to_string(),
                    fmt_q(&l.factor),
                ]);
            }
            assertions.push(Assertion::new(
                "rigidity ratio ≥ h/(h+1) at every level",
                built.levels.iter().all(|l| l.ratio_ok),
                "",
            ));
            assertions.push(Assertion::new(
                "C_n independent of F_(n-1) at every level",
                built.levels.iter().all(|l| l.independent),
                "",
            ));
            let label = if built.classification.prefix_certified { "prefix-certified" } else { "uncertified" };
            results["classification"] = json!(built.classification);
            results["classification_label"] = json!(label);
            results["certificates"] = json!(built.levels);
            results["subsequence"] = json!(built.subsequence);
            tables.push(cert);
        }
        Construction::Plain => {}
    }
    Ok(Report::new("validate", config, assertions, results, tables))
}

fn diagnostic_table(name: &str, rows: &[DiagnosticRow]) -> Table {
    let mut t = Table::new(name, &["index", "element", "work_level", "value"]);
    for r in rows {
        t.push(vec![r.index.to_string(), fmt_elem(&r.element), r.work_level.to_string(), fmt_q(&r.value)]);
    }
    t
}

fn non_increasing<T: PartialOrd>(v: &[T]) -> bool {
    v.windows(2).all(|w| w[1] <= w[0])
}

pub fn run_rigidity(b: &BuiltTower, block: &RigidityBlock, config: &Value) -> Result<Report, WorkbenchError> {
    let t = &b.tower;
    let mut assertions = Vec::new();
    let mut tables = Vec::new();
    let mut results = json!({});
    if block.probes.is_empty() {
        let probes = certified_probes(b)?;
        if probes.is_empty() && block.mixing.is_none() {
            return Err(WorkbenchError::config("/rigidity/probes", "this tower has no certified probes; list some"));
        }
        if !probes.is_empty() {
            let rows = rigidity_table(t, &probes.iter().map(|p| p.probe.clone()).collect::<Vec<_>>()).map_err(runtime)?;
            let mut table = Table::new("certified", &["level", "element", "work_level", "value", "bound", "within_bound"]);
            let mut over = Vec::new();
            for (p, r) in probes.iter().zip(&rows) {
                let ok = r.value <= p.bound;
                if !ok {
                    over.push(p.level.to_string());
                }
                table.push(vec![
                    p.level.to_string(),
                    fmt_elem(&r.element),
                    r.work_level.to_string(),
                    fmt_q(&r.value),
                    fmt_q(&p.bound),
                    ok.to_string(),
                ]);
            }
            assertions.push(Assertion::new(
                "diagnostic within the certified bound at every level",
                over.is_empty(),
                if over.is_empty() { String::new() } else { format!("levels {}", over.join(",")) },
            ));
            let values: Vec<&BigRational> = rows.iter().map(|r| &r.value).collect();
            results["certified"] = json!(rows);
            results["bounds"] = json!(probes.iter().map(|p| fmt_q(&p.bound)).collect::<Vec<_>>());
            results["non_increasing"] = json!(non_increasing(&values));
            tables.push(table);
        }
    } else {
        let probes = block
            .probes
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let at = format!("/rigidity/probes/{i}");
                let element = t.group().decode(&p.element).map_err(|e| WorkbenchError::config(format!("{at}/element"), e.to_string()))?;
                let cylinders = p
                    .cylinders
                    .iter()
                    .enumerate()
                    .map(|(j, c)| cylinder(t, c, &format!("{at}/cylinders/{j}")))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Probe { element, work_level: p.work_level, cylinders })
            })
            .collect::<Result<Vec<_>, WorkbenchError>>()?;
        let rows = rigidity_table(t, &probes).map_err(runtime)?;
        let values: Vec<&BigRational> = rows.iter().map(|r| &r.value).collect();
        results["rigidity"] = json!(rows);
        results["non_increasing"] = json!(non_increasing(&values));
        tables.push(diagnostic_table("rigidity", &rows));
    }
    if let Some(m) = &block.mixing {
        let seq = m.sequence.resolve(t.group(), "/rigidity/mixing/sequence")?;
        let pairs = m
            .pairs
            .iter()
            .enumerate()
            .map(|(i, (a, c))| {
                let at = format!("/rigidity/mixing/pairs/{i}");
                Ok((cylinder(t, a, &format!("{at}/0"))?, cylinder(t, c, &format!("{at}/1"))?))
            })
            .collect::<Result<Vec<_>, WorkbenchError>>()?;
        let rows = mixing_diagnostic(t, &seq, &pairs, m.level).map_err(runtime)?;
        results["mixing"] = json!(rows);
        tables.push(diagnostic_table("mixing", &rows));
    }
    Ok(Report::new("rigidity", config, assertions, results, tables))
}

pub fn run_spectral(block: &SpectralBlock, config: &Value) -> Result<Report, WorkbenchError> {
    let tol = block.tolerance;
    let mut reps: BTreeMap<String, FiniteRep> = BTreeMap::new();
    for (name, doc) in &block.reps {
        let rep = doc.to_rep(tol).map_err(|e| WorkbenchError::config(format!("/spectral/reps/{name}"), e.to_string()))?;
        reps.insert(name.clone(), rep);
    }
    let mut assertions = Vec::new();
    let mut table = Table::new("checks", &["index", "kind", "inputs", "hypothesis", "multiplicity", "predicted", "pass"]);
    let mut results = Vec::new();
    for (i, check) in block.checks.iter().enumerate() {
        let at = format!("/spectral/checks/{i}");
        let get = |reps: &BTreeMap<String, FiniteRep>, name: &str| {
            reps.get(name).cloned().ok_or_else(|| WorkbenchError::config(&at, format!("unknown representation `{name}`")))
        };
        // (kind, inputs, hypothesis, computed, predicted, claim holds, expectation, saved rep)
        let (kind, inputs, hyp, m, predicted, holds, expect, saved): (
            &str,
            String,
            Option<bool>,
            MultiplicitySet,
            Option<MultiplicitySet>,
            Option<bool>,
            Option<MultiplicitySet>,
            Option<(String, FiniteRep)>,
        ) = match check {
            SpectralCheck::Multiplicity { rep, expect } => {
                let r = get(&reps, rep)?;
                let m = r.multiplicity_set(tol).map_err(runtime)?;
                ("multiplicity", rep.clone(), None, m, None, None, expect.clone(), None)
            }
            SpectralCheck::DirectSum { left, right, expect, save_as } => {
                let (u, v) = (get(&reps, left)?, get(&reps, right)?);
                let sum = u.direct_sum(&v).map_err(runtime)?;
                let hyp = spectral::spectrally_disjoint(&u, &v, tol).map_err(runtime)?;
                let m = sum.multiplicity_set(tol).map_err(runtime)?;
                let pred: MultiplicitySet =
                    u.multiplicity_set(tol).map_err(runtime)?.union(&v.multiplicity_set(tol).map_err(runtime)?).copied().collect();
                let holds = hyp.then(|| m == pred);
                let saved = save_as.clone().map(|n| (n, sum));
                ("direct-sum", format!("{left},{right}"), Some(hyp), m, Some(pred), holds, expect.clone(), saved)
            }
            SpectralCheck::Tensor { left, right, expect, save_as } => {
                let (u, v) = (get(&reps, left)?, get(&reps, right)?);
                let c = spectral::tensor_multiplicity_check(&u, &v, tol).map_err(runtime)?;
                let saved = match save_as {
                    Some(n) => Some((n.clone(), u.tensor(&v).map_err(runtime)?)),
                    None => None,
                };
                ("tensor", format!("{left},{right}"), Some(c.strongly_disjoint), c.multiplicity, Some(c.predicted), c.holds, expect.clone(), saved)
            }
            SpectralCheck::ProductKoopman { s, t, expect, save_as } => {
                let (u, v) = (get(&reps, s)?, get(&reps, t)?);
                let p = spectral::product_koopman(&u, &v, tol).map_err(runtime)?;
                let hyp = p.hypothesis();
                let saved = save_as.clone().map(|n| (n, p.rep.clone()));
                ("product-koopman", format!("{s},{t}"), Some(hyp), p.multiplicity, Some(p.predicted), p.holds, expect.clone(), saved)
            }
            SpectralCheck::Fock { rep, n } => {
                let r = get(&reps, rep)?;
                let e = r.exp_truncated(*n).map_err(runtime)?;
                let want = spectral::fock_dimension(r.dim(), *n);
                let ok = e.dim() as u64 == want;
                assertions.push(Assertion::new(
                    format!("check {i}: dim exp_{n}({rep}) = {want}"),
                    ok,
                    if ok { String::new() } else { format!("got {}", e.dim()) },
                ));
                let m = e.multiplicity_set(tol).map_err(runtime)?;
                table.push(vec![i.to_string(), "fock".into(), format!("{rep},{n}"), String::new(), fmt_set(&m), String::new(), ok.to_string()]);
                results.push(json!({ "index": i, "kind": "fock", "dimension": e.dim(), "expected_dimension": want, "multiplicity": m }));
                continue;
            }
        };
        let mut pass = true;
        if let Some(h) = holds {
            assertions.push(Assertion::new(format!("check {i}: {kind} multiplicity law"), h, ""));
            pass &= h;
        }
        if let Some(e) = &expect {
            let ok = *e == m;
            assertions.push(Assertion::new(
                format!("check {i}: {kind} = {}", fmt_set(e)),
                ok,
                if ok { String::new() } else { format!("got {}", fmt_set(&m)) },
            ));
            pass &= ok;
        }
        table.push(vec![
            i.to_string(),
            kind.into(),
            inputs,
            hyp.map(|h| h.to_string()).unwrap_or_default(),
            fmt_set(&m),
            predicted.as_ref().map(fmt_set).unwrap_or_default(),
            pass.to_string(),
        ]);
        results.push(json!({ "index": i, "kind": kind, "hypothesis": hyp, "multiplicity": m, "predicted": predicted, "holds": holds }));
        if let Some((name, rep)) = saved {
            reps.insert(name, rep);
        }
    }
    Ok(Report::new("spectral", config, assertions, json!({ "checks": results }), vec![table]))
}

pub fn run_poisson(b: &BuiltTower, block: &PoissonBlock, config: &Value) -> Result<Report, WorkbenchError> {
    let t = &b.tower;
    let sampler = Sampler::new(t, block.window_level, block.work_level, block.scale).map_err(poisson_err)?;
    let a = cylinder(t, &block.a, "/poisson/a")?;
    let law = poisson::verify_poisson_law(&sampler, &a, block.trials, block.tolerance, block.seed).map_err(poisson_err)?;
    let mut assertions = vec![Assertion::new(
        "N_A is Poisson(μ(A)) in total variation",
        law.pass,
        format!("tv {:.5} vs tolerance {:.5}", law.tv_distance, law.tolerance),
    )];
    let mut hist = Table::new("histogram", &["j", "count", "empirical", "poisson"]);
    let mu = crate::rational::q_to_f64(&law.mu) * block.scale;
    let mut pmf = (-mu).exp();
    for (j, c) in law.histogram.iter().enumerate() {
        if j > 0 {
            pmf *= mu / j as f64;
        }
        hist.push(vec![j.to_string(), c.to_string(), format!("{:.6}", *c as f64 / law.trials as f64), format!("{pmf:.6}")]);
    }
    let mut results = json!({ "law": law });
    let mut tables = vec![hist];
    if let Some(bdoc) = &block.b {
        let bc = cylinder(t, bdoc, "/poisson/b")?;
        let ind = poisson::verify_independence(&sampler, &a, &bc, block.trials, block.covariance_tolerance, block.seed)
            .map_err(poisson_err)?;
        assertions.push(Assertion::new(
            "N_A and N_B independent",
            ind.pass,
            format!("cov {:.5}, chi-square p {:.4}", ind.covariance, ind.p_value),
        ));
        results["independence"] = json!(ind);
    }
    if let Some(r) = &block.rigidity {
        let mut seq = match &r.sequence {
            Some(s) => s.resolve(t.group(), "/poisson/rigidity/sequence")?,
            None => rigidity_elements(b),
        };
        if seq.is_empty() {
            return Err(WorkbenchError::config("/poisson/rigidity/sequence", "no sequence and no construction elements"));
        }
        let certified = seq.len();
        if let Some(c) = &r.control {
            seq.push(t.group().decode(c).map_err(|e| WorkbenchError::config("/poisson/rigidity/control", e.to_string()))?);
        }
        let cyls = r
            .cylinders
            .iter()
            .enumerate()
            .map(|(i, c)| cylinder(t, c, &format!("/poisson/rigidity/cylinders/{i}")))
            .collect::<Result<Vec<_>, _>>()?;
        let rows = poisson::verify_rigidity_suspension(&sampler, &seq, &cyls, block.trials, block.seed).map_err(poisson_err)?;
        let mut table = Table::new("rigidity", &["index", "element", "role", "estimate", "bound", "defect_fraction"]);
        for row in &rows {
            let role = if row.index < certified { "sequence" } else { "control" };
            table.push(vec![
                row.index.to_string(),
                fmt_elem(&row.element),
                role.into(),
                format!("{:.6}", row.estimate),
                format!("{:.6}", row.bound),
                format!("{:.6}", row.defect_fraction),
            ]);
        }
        let est: Vec<f64> = rows[..certified].iter().map(|r| r.estimate).collect();
        results["rigidity"] = json!(rows);
        results["rigidity_non_increasing"] = json!(non_increasing(&est));
        tables.push(table);
    }
    Ok(Report::new("poisson", config, assertions, results, tables))
}

/// Outcome counts for one law of the randomized multiplicity lab.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct LawTally {
    pub cases: u64,
    pub applicable: u64,
    pub failures: u64,
}

impl LawTally {
    fn record(&mut self, holds: Option<bool>) {
        self.cases += 1;
        if let Some(h) = holds {
            self.applicable += 1;
            self.failures += u64::from(!h);
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ReplabTally {
    pub direct_sum: LawTally,
    pub tensor: LawTally,
    pub product: LawTally,
}

fn random_rep(rng: &mut ChaCha8Rng, block: &ReplabBlock) -> FiniteRep {
    let k = rng.gen_range(1..=block.max_blocks);
    let dims: Vec<usize> = (0..k).map(|_| rng.gen_range(1..=block.max_dim)).collect();
    spectral::random_isotypic(rng, block.generators, &dims)
}

/// Copies one character of `u` into `v`, so their spectra meet.
fn share_character(u: &FiniteRep, v: &FiniteRep) -> FiniteRep {
    match (u, v) {
        (FiniteRep::Diagonal { phases: pu, .. }, FiniteRep::Diagonal { generators, phases: pv }) => {
            let mut phases = pv.clone();
            phases[0] = pu[0].clone();
            FiniteRep::Diagonal { generators: *generators, phases }
        }
        _ => v.clone(),
    }
}

/// One randomized case of the multiplicity calculus; stream `trial` of `seed`.
pub fn replab_case(block: &ReplabBlock, trial: u64, tally: &mut ReplabTally) -> Result<(), WorkbenchError> {
    let tol = spectral::DEFAULT_TOL;
    let mut rng = ChaCha8Rng::seed_from_u64(block.seed);
    rng.set_stream(trial);
    let u = random_rep(&mut rng, block);
    let mut v = random_rep(&mut rng, block);
    if rng.gen_bool(0.25) {
        v = share_character(&u, &v);
    }
    let mu = u.multiplicity_set(tol).map_err(runtime)?;
    let mv = v.multiplicity_set(tol).map_err(runtime)?;
    let disjoint = spectral::spectrally_disjoint(&u, &v, tol).map_err(runtime)?;
    let sum = u.direct_sum(&v).map_err(runtime)?.multiplicity_set(tol).map_err(runtime)?;
    tally.direct_sum.record(disjoint.then(|| sum == mu.union(&mv).copied().collect()));
    tally.tensor.record(spectral::tensor_multiplicity_check(&u, &v, tol).map_err(runtime)?.holds);
    tally.product.record(spectral::product_koopman(&u, &v, tol).map_err(runtime)?.holds);
    Ok(())
}

pub fn run_replab(block: &ReplabBlock, config: &Value) -> Result<Report, WorkbenchError> {
    let mut tally = ReplabTally::default();
    for trial in 0..block.trials {
        replab_case(block, trial, &mut tally)?;
    }
    let mut assertions = Vec::new();
    let mut table = Table::new("laws", &["law", "cases", "applicable", "failures"]);
    for (name, law) in [("direct-sum", &tally.direct_sum), ("tensor", &tally.tensor), ("product-koopman", &tally.product)] {
        assertions.push(Assertion::new(
            format!("{name}: no failures"),
            law.failures == 0,
            format!("{} of {} applicable", law.applicable, law.cases),
        ));
        table.push(vec![name.into(), law.cases.to_string(), law.applicable.to_string(), law.failures.to_string()]);
    }
    // homogeneous blocks of multiplicity 2, 3, 5
    let mut rng = ChaCha8Rng::seed_from_u64(block.seed);
    rng.set_stream(u64::MAX);
    let hom: Vec<FiniteRep> = [2, 3, 5].iter().map(|&p| spectral::random_isotypic(&mut rng, block.generators, &[p])).collect();
    let tol = spectral::DEFAULT_TOL;
    let st = spectral::product_koopman(&hom[0], &hom[1], tol).map_err(runtime)?;
    let str_ = spectral::product_koopman(&st.rep, &hom[2], tol).map_err(runtime)?;
    let pq: MultiplicitySet = [2, 3, 6].into();
    let pqr: MultiplicitySet = [2, 3, 5, 6, 10, 15, 30].into();
    assertions.push(Assertion::new("{2}⋄{3} = {2,3,6}", st.hypothesis() && st.multiplicity == pq, fmt_set(&st.multiplicity)));
    assertions.push(Assertion::new(
        "{2}⋄{3}⋄{5} = {2,3,5,6,10,15,30}",
        str_.hypothesis() && str_.multiplicity == pqr,
        fmt_set(&str_.multiplicity),
    ));
    let results = json!({ "tally": tally, "pq": st.multiplicity, "pqr": str_.multiplicity });
    Ok(Report::new("replab", config, assertions, results, vec![table]))
}

pub fn run_diamond(block: &DiamondBlock, config: &Value) -> Result<Report, WorkbenchError> {
    let mut assertions = Vec::new();
    let mut table = Table::new("results", &["op", "input", "output"]);
    let mut gens = Vec::new();
    for (i, g) in block.gen.iter().enumerate() {
        let out = diamond::generate(&g.ps, g.cap).map_err(|e| WorkbenchError::config(format!("/diamond/gen/{i}"), e.to_string()))?;
        if let Some(e) = &g.expect {
            assertions.push(Assertion::new(format!("gen {i} = {}", fmt_set(e)), *e == out.elements, out.to_string()));
        }
        table.push(vec!["gen".into(), format!("ps={:?} cap={}", g.ps, g.cap), out.to_string()]);
        gens.push(json!({ "ps": g.ps, "cap": g.cap, "set": out.elements, "capped": out.is_capped() }));
    }
    let mut factors = Vec::new();
    for (i, f) in block.factor.iter().enumerate() {
        let fs = diamond::factor(&f.set);
        let round_trip = fs.iter().all(|ps| diamond::generate(ps, *f.set.last().unwrap_or(&1)).map(|m| m.elements == f.set).unwrap_or(false));
        assertions.push(Assertion::new(format!("factor {i}: every factorization regenerates the set"), round_trip, ""));
        if let Some(e) = &f.expect {
            assertions.push(Assertion::new(format!("factor {i} = {e:?}"), *e == fs, format!("{fs:?}")));
        }
        table.push(vec!["factor".into(), fmt_set(&f.set), format!("{fs:?}")]);
        factors.push(json!({ "set": f.set, "factorizations": fs }));
    }
    let mut checks = Vec::new();
    for (i, c) in block.check.iter().enumerate() {
        let bound = c.bound.unwrap_or_else(|| c.set.last().copied().unwrap_or(1));
        let closed = diamond::is_mult_subsemigroup(&c.set, bound);
        assertions.push(Assertion::new(format!("check {i}: {} closed up to {bound}", fmt_set(&c.set)), closed, ""));
        table.push(vec!["check".into(), format!("{} bound={bound}", fmt_set(&c.set)), closed.to_string()]);
        checks.push(json!({ "set": c.set, "bound": bound, "closed": closed }));
    }
    let results = json!({ "gen": gens, "factor": factors, "check": checks });
    Ok(Report::new("diamond", config, assertions, results, vec![table]))
}

//! Run configuration: a TOML file with one section per stage.
//!
//! ```toml
//! [domain]
//! extents = [1.0]
//! resolution = [255]
//!
//! [params]
//! a = 0.01            # or a_lambda = aΛ̂
//! b = 1.0
//! lambda_ratio = 0.3  # λ = lambda_ratio · bλ̂₁; or lambda = ...
//! p = 3.0
//!
//! [sim]
//! dt = 1e-3
//! horizon = 10.0
//!
//! [seed]
//! recipe = "p3_blowup_h1"
//!
//! [analyses]
//! enabled = ["blowup", "vacuum"]
//!
//! [run]
//! rng_seed = 0
//! output_dir = "out/h1"
//! ```

use std::path::{Path, PathBuf};

use kirchhoff_core::dynamics::{InvarianceCase, Scheme, SimConfig};
use kirchhoff_core::{DomainSpec, RecipeKind};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, LabResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    pub extents: Vec<f64>,
    pub resolution: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub a: Option<f64>,
    /// `a` as a multiple of `1/Λ̂`.
    pub a_lambda: Option<f64>,
    pub b: f64,
    pub lambda: Option<f64>,
    /// `λ` as a multiple of `bλ̂₁`.
    pub lambda_ratio: Option<f64>,
    pub p: f64,
}

fn default_dt() -> f64 {
    1e-3
}

fn default_horizon() -> f64 {
    10.0
}

fn default_scheme() -> String {
    Scheme::ImplicitMidpoint.name().to_string()
}

fn default_record_every() -> usize {
    10
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_scheme")]
    pub scheme: String,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    pub blowup_gradnorm_factor: Option<f64>,
    pub energy_drift_tol: Option<f64>,
}

impl Default for SimSection {
    fn default() -> Self {
        SimSection {
            dt: default_dt(),
            horizon: default_horizon(),
            scheme: default_scheme(),
            record_every: default_record_every(),
            blowup_gradnorm_factor: None,
            energy_drift_tol: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedSection {
    pub recipe: Option<String>,
    /// JSON file with `u0` and `u1` node values.
    pub file: Option<PathBuf>,
    pub margin: Option<f64>,
    pub perturbation: Option<f64>,
    pub k: Option<f64>,
    pub m: Option<f64>,
}

fn default_tol() -> f64 {
    1e-10
}

fn default_n_rays() -> usize {
    64
}

fn default_depth_seed() -> u64 {
    7
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsSection {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_n_rays")]
    pub n_rays: usize,
    #[serde(default = "default_depth_seed")]
    pub depth_seed: u64,
}

impl Default for ConstantsSection {
    fn default() -> Self {
        ConstantsSection { tol: default_tol(), n_rays: default_n_rays(), depth_seed: default_depth_seed() }
    }
}

fn default_eps() -> f64 {
    1e-8
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysesSection {
    #[serde(default)]
    pub enabled: Vec<String>,
    /// Forces an invariance case instead of inferring it from the data.
    pub invariance_case: Option<String>,
    #[serde(default = "default_eps")]
    pub nehari_eps: f64,
}

impl Default for AnalysesSection {
    fn default() -> Self {
        AnalysesSection { enabled: Vec::new(), invariance_case: None, nehari_eps: default_eps() }
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default)]
    pub rng_seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection { rng_seed: 0, output_dir: default_output_dir() }
    }
}

/// The file as written.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub domain: DomainSection,
    pub params: ParamsSection,
    #[serde(default)]
    pub sim: SimSection,
    #[serde(default)]
    pub seed: SeedSection,
    #[serde(default)]
    pub constants: ConstantsSection,
    #[serde(default)]
    pub analyses: AnalysesSection,
    #[serde(default)]
    pub run: RunSection,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Analysis {
    Invariance,
    Blowup,
    Vacuum,
}

impl Analysis {
    pub fn name(&self) -> &'static str {
        match self {
            Analysis::Invariance => "invariance",
            Analysis::Blowup => "blowup",
            Analysis::Vacuum => "vacuum",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "invariance" => Some(Analysis::Invariance),
            "blowup" => Some(Analysis::Blowup),
            "vacuum" => Some(Analysis::Vacuum),
            _ => None,
        }
    }
}

/// Where the initial data come from.
#[derive(Clone, Debug, PartialEq)]
pub enum SeedSource {
    Recipe {
        kind: RecipeKind,
        margin: Option<f64>,
        perturbation: Option<f64>,
        scale: Option<(f64, f64)>,
    },
    File(PathBuf),
}

/// `a` and `λ` as given; relative forms need λ̂₁ and Λ̂.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Coefficient {
    Absolute(f64),
    Relative(f64),
}

impl Coefficient {
    pub fn resolve(&self, unit: f64) -> f64 {
        match *self {
            Coefficient::Absolute(v) => v,
            Coefficient::Relative(r) => r * unit,
        }
    }
}

/// Validated configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub raw: RawConfig,
    pub domain: DomainSpec<f64>,
    pub a: Coefficient,
    pub b: f64,
    pub lambda: Coefficient,
    pub p: f64,
    pub sim: SimConfig<f64>,
    pub seed: SeedSource,
    pub analyses: Vec<Analysis>,
    pub invariance_case: Option<InvarianceCase>,
    pub nehari_eps: f64,
    pub constants: ConstantsSection,
    pub rng_seed: u64,
    pub output_dir: PathBuf,
}

fn pick(name: &str, abs: Option<f64>, rel_name: &str, rel: Option<f64>) -> LabResult<Coefficient> {
    match (abs, rel) {
        (Some(v), None) => Ok(Coefficient::Absolute(v)),
        (None, Some(r)) => Ok(Coefficient::Relative(r)),
        (None, None) => Err(LabError::Config(format!("params: one of `{name}` or `{rel_name}` is required"))),
        (Some(_), Some(_)) => Err(LabError::Config(format!("params: `{name}` and `{rel_name}` are exclusive"))),
    }
}

impl RunConfig {
    pub fn from_raw(raw: RawConfig, base_dir: Option<&Path>) -> LabResult<Self> {
        let domain = DomainSpec::new(raw.domain.extents.clone(), raw.domain.resolution.clone());
        domain.validate().map_err(|e| LabError::Config(e.to_string()))?;
        let pr = &raw.params;
        let a = pick("a", pr.a, "a_lambda", pr.a_lambda)?;
        let lambda = pick("lambda", pr.lambda, "lambda_ratio", pr.lambda_ratio)?;
        if !(pr.b > 0.0) || !(pr.p > 1.0) {
            return Err(LabError::Config(format!("params: need b > 0 and p > 1, got b = {}, p = {}", pr.b, pr.p)));
        }
        let s = &raw.sim;
        let scheme = Scheme::parse(&s.scheme)
            .ok_or_else(|| LabError::Config(format!("sim: unknown scheme `{}`", s.scheme)))?;
        let mut sim = SimConfig::new(s.dt, s.horizon).with_scheme(scheme).with_record_every(s.record_every);
        if let Some(f) = s.blowup_gradnorm_factor {
            sim.blowup_gradnorm_factor = f;
        }
        if let Some(t) = s.energy_drift_tol {
            sim.energy_drift_tol = t;
        }
        sim.validate().map_err(|e| LabError::Config(e.to_string()))?;

        let sd = &raw.seed;
        let seed = match (&sd.recipe, &sd.file) {
            (Some(name), None) => {
                let kind = RecipeKind::parse(name).ok_or_else(|| {
                    let known: Vec<_> = RecipeKind::ALL.iter().map(|k| k.name()).collect();
                    LabError::Config(format!("seed: unknown recipe `{name}` (known: {})", known.join(", ")))
                })?;
                let scale = match (sd.k, sd.m) {
                    (Some(k), Some(m)) => Some((k, m)),
                    (None, None) => None,
                    _ => return Err(LabError::Config("seed: `k` and `m` go together".into())),
                };
                if kind == RecipeKind::Scaled && scale.is_none() {
                    return Err(LabError::Config("seed: recipe `scaled` needs `k` and `m`".into()));
                }
                SeedSource::Recipe { kind, margin: sd.margin, perturbation: sd.perturbation, scale }
            }
            (None, Some(f)) => {
                let f = match base_dir {
                    Some(d) if f.is_relative() => d.join(f),
                    _ => f.clone(),
                };
                SeedSource::File(f)
            }
            _ => return Err(LabError::Config("seed: exactly one of `recipe` or `file` is required".into())),
        };

        let mut analyses = Vec::new();
        for name in &raw.analyses.enabled {
            let a = Analysis::parse(name)
                .ok_or_else(|| LabError::Config(format!("analyses: unknown analysis `{name}`")))?;
            if !analyses.contains(&a) {
                analyses.push(a);
            }
        }
        analyses.sort();
        let invariance_case = match &raw.analyses.invariance_case {
            Some(c) => Some(
                InvarianceCase::parse(c)
                    .ok_or_else(|| LabError::Config(format!("analyses: unknown invariance case `{c}`")))?,
            ),
            None => None,
        };

        Ok(RunConfig {
            domain,
            a,
            b: pr.b,
            lambda,
            p: pr.p,
            sim,
            seed,
            analyses,
            invariance_case,
            nehari_eps: raw.analyses.nehari_eps,
            constants: raw.constants.clone(),
            rng_seed: raw.run.rng_seed,
            output_dir: raw.run.output_dir.clone(),
            raw,
        })
    }

    pub fn parse(text: &str, base_dir: Option<&Path>) -> LabResult<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| LabError::Config(e.to_string()))?;
        Self::from_raw(raw, base_dir)
    }

    pub fn load(path: &Path) -> LabResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text, path.parent())
    }

    pub fn wants(&self, a: Analysis) -> bool {
        self.analyses.contains(&a)
    }

    pub fn with_output_dir(mut self, dir: PathBuf) -> Self {
        self.raw.run.output_dir = dir.clone();
        self.output_dir = dir;
        self
    }

    /// Applies a dotted `section.key = value` override to the raw file and revalidates.
    pub fn with_override(&self, key: &str, value: &toml::Value, base_dir: Option<&Path>) -> LabResult<Self> {
        let mut table = toml::Value::try_from(&self.raw).map_err(|e| LabError::Config(e.to_string()))?;
        set_dotted(&mut table, key, value.clone())?;
        let raw: RawConfig = table.try_into().map_err(|e: toml::de::Error| LabError::Config(e.to_string()))?;
        Self::from_raw(raw, base_dir)
    }
}

/// Relative forms are exclusive with absolute ones, so an override of one clears the other.
const EXCLUSIVE: [(&str, &str); 4] = [
    ("params.a", "params.a_lambda"),
    ("params.a_lambda", "params.a"),
    ("params.lambda", "params.lambda_ratio"),
    ("params.lambda_ratio", "params.lambda"),
];

pub fn set_dotted(root: &mut toml::Value, key: &str, value: toml::Value) -> LabResult<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.len() < 2 || parts.iter().any(|p| p.is_empty()) {
        return Err(LabError::Config(format!("override key `{key}` must look like section.key")));
    }
    for (k, other) in EXCLUSIVE {
        if k == key {
            let (sec, name) = other.split_once('.').unwrap();
            if let Some(t) = root.get_mut(sec).and_then(|s| s.as_table_mut()) {
                t.remove(name);
            }
        }
    }
    let mut cur = root;
    for p in &parts[..parts.len() - 1] {
        let t = cur
            .as_table_mut()
            .ok_or_else(|| LabError::Config(format!("override key `{key}`: `{p}` is not a section")))?;
        cur = t.entry(p.to_string()).or_insert_with(|| toml::Value::Table(Default::default()));
    }
    let t = cur
        .as_table_mut()
        .ok_or_else(|| LabError::Config(format!("override key `{key}` does not name a table entry")))?;
    t.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

/// Parses one axis token as a TOML value, falling back to a bare string.
pub fn parse_value(token: &str) -> toml::Value {
    let token = token.trim();
    match toml::from_str::<toml::Table>(&format!("v = {token}")) {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(token.to_string())),
        Err(_) => toml::Value::String(token.to_string()),
    }
}

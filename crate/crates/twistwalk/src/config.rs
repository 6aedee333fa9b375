//! TOML run configurations and potential files.
//!
//! A potential file (or the top level of a run configuration) lists Fourier
//! terms
//!
//! ```toml
//! [[term]]
//! which = "v"      # u, v or w
//! omega = 1        # which of the two maps, +1 or -1
//! k = 1            # harmonic, >= 0
//! re = [0.5]       # real part of the coefficient, polynomial in r
//! im = []          # imaginary part
//! ```
//!
//! each contributing `c_k(r) e^{2 pi i k theta} + conj` (just `c_0(r)` for
//! `k = 0`), so `re = [0.5]` at `k = 1` is `cos 2 pi theta` and `im = [-0.5]`
//! is `sin 2 pi theta`. Terms with the same `(which, omega, k)` add up.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use twistwalk_core::arithmetic::StripParams;
use twistwalk_core::dynamics::MapSystem;
use twistwalk_core::mc::{EnsembleSpec, Initial};
use twistwalk_core::poly::CPoly;
use twistwalk_core::potentials::{SystemPotentials, TrigPotential};

use crate::CliError;

pub const GOLDEN: f64 = 0.618_033_988_749_894_9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Which {
    U,
    V,
    W,
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub which: Which,
    pub omega: i8,
    pub k: usize,
    #[serde(default)]
    pub re: Vec<f64>,
    #[serde(default)]
    pub im: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// `u_1 = v_1 = cos`, `u_{-1} = v_{-1} = sin`, `w = 0`.
    CosSin,
    /// All potentials zero.
    Integrable,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialsFile {
    pub preset: Option<Preset>,
    #[serde(default)]
    pub term: Vec<Term>,
}

/// Builds the system from a preset plus extra terms (terms alone if no preset).
pub fn build_potentials(preset: Option<Preset>, terms: &[Term]) -> Result<SystemPotentials, String> {
    let base = match preset {
        Some(Preset::CosSin) => SystemPotentials::cos_sin(),
        Some(Preset::Integrable) | None => SystemPotentials::integrable(1),
    };
    if terms.is_empty() {
        return Ok(base);
    }
    let mut grouped: BTreeMap<(Which, i8), Vec<(usize, CPoly)>> = BTreeMap::new();
    for (i, t) in terms.iter().enumerate() {
        if t.omega != 1 && t.omega != -1 {
            return Err(format!("term {}: omega must be 1 or -1, got {}", i + 1, t.omega));
        }
        if t.re.iter().chain(&t.im).any(|x| !x.is_finite()) {
            return Err(format!("term {}: non-finite coefficient", i + 1));
        }
        if t.k == 0 && t.im.iter().any(|x| *x != 0.0) {
            return Err(format!("term {}: the k = 0 coefficient must be real", i + 1));
        }
        grouped.entry((t.which, t.omega)).or_default().push((t.k, CPoly::from_parts(&t.re, &t.im)));
    }
    let mut pick = |which: Which, omega: i8, base: &TrigPotential| -> Result<TrigPotential, String> {
        let Some(list) = grouped.remove(&(which, omega)) else {
            return Ok(base.clone());
        };
        let d = list.iter().map(|x| x.0).max().unwrap_or(0).max(base.degree());
        let mut p = base.padded(d);
        for (k, c) in list {
            let sum = &p.coeff(k as i64) + &c;
            p.set(k as i64, sum).map_err(|e| e.to_string())?;
        }
        Ok(p)
    };
    Ok(SystemPotentials::new(
        pick(Which::U, 1, &base.u_plus)?,
        pick(Which::U, -1, &base.u_minus)?,
        pick(Which::V, 1, &base.v_plus)?,
        pick(Which::V, -1, &base.v_minus)?,
        pick(Which::W, 1, &base.w_plus)?,
        pick(Which::W, -1, &base.w_minus)?,
    ))
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialConfig {
    pub r: f64,
    /// Uniform on `[0, 1)` when absent.
    pub theta: Option<f64>,
}

impl Default for InitialConfig {
    fn default() -> Self {
        Self { r: 0.25, theta: None }
    }
}

impl InitialConfig {
    pub fn initial(&self) -> Initial {
        match self.theta {
            Some(theta) => Initial::Fixed { theta, r: self.r },
            None => Initial::UniformTheta { r: self.r },
        }
    }
}

/// Overrides of the strip exponents.
#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct StripConfig {
    pub l: u32,
    pub d: usize,
    pub gamma: f64,
    pub tau: f64,
    pub kappa: f64,
    pub delta: f64,
}

impl Default for StripConfig {
    fn default() -> Self {
        let s = StripParams::standard();
        Self { l: s.l, d: s.d, gamma: s.gamma, tau: s.tau, kappa: s.kappa, delta: s.delta }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct RangeConfig {
    pub r_lo: f64,
    pub r_hi: f64,
}

impl Default for RangeConfig {
    fn default() -> Self {
        Self { r_lo: 0.0, r_hi: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct CltConfig {
    pub variance_rel: f64,
    pub mean_abs: f64,
    pub ks: f64,
    pub min_samples: usize,
    pub bins: usize,
}

impl Default for CltConfig {
    fn default() -> Self {
        Self { variance_rel: 0.07, mean_abs: 0.01, ks: 0.03, min_samples: 1000, bins: 60 }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriftConfig {
    pub r_lo: f64,
    pub r_hi: f64,
    pub points: usize,
}

impl Default for DriftConfig {
    fn default() -> Self {
        Self { r_lo: 0.0, r_hi: 1.0, points: 201 }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExitsConfig {
    /// Where to look for a TI and an IR strip.
    pub r_lo: f64,
    pub r_hi: f64,
    pub max_steps: usize,
}

impl Default for ExitsConfig {
    fn default() -> Self {
        Self { r_lo: 0.0, r_hi: 1.0, max_steps: 100_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct WalkConfig {
    pub origin: f64,
    pub r_lo: f64,
    pub r_hi: f64,
    /// `A` in units of `scale`.
    pub step: f64,
    /// Defaults to `epsilon`.
    pub scale: Option<f64>,
    /// Number of interior nodes, centred on the origin, whose transitions are sampled.
    pub nodes: usize,
    pub max_steps: usize,
    /// Embedded walks for the visit census.
    pub walks: usize,
    pub moves: usize,
}

impl Default for WalkConfig {
    fn default() -> Self {
        Self {
            origin: 0.25,
            r_lo: 0.15,
            r_hi: 0.35,
            step: 10.0,
            scale: None,
            nodes: 5,
            max_steps: 1_000_000,
            walks: 20,
            moves: 200,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct ErgodizeConfig {
    pub r_star: f64,
    pub theta_star: f64,
    /// `g = cos(2 pi k theta)`.
    pub k: usize,
    pub epsilons: Vec<f64>,
}

impl Default for ErgodizeConfig {
    fn default() -> Self {
        Self { r_star: GOLDEN, theta_star: 0.0, k: 1, epsilons: vec![1e-3, 1e-4, 1e-5] }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct MartingaleConfig {
    pub epsilons: Vec<f64>,
    pub s: f64,
    /// Names from the fixed family: const, r, r^2, r^3, bump.
    pub functions: Vec<String>,
}

impl Default for MartingaleConfig {
    fn default() -> Self {
        Self { epsilons: vec![0.04, 0.02, 0.01], s: 0.04, functions: vec!["r".into(), "r^2".into()] }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct BernoulliConfig {
    /// `v_k = cos(2 pi harmonic (theta + k alpha))`.
    pub alpha: f64,
    pub theta: f64,
    pub harmonic: usize,
    pub n: usize,
}

impl Default for BernoulliConfig {
    fn default() -> Self {
        Self { alpha: GOLDEN, theta: 0.0, harmonic: 1, n: 10_000 }
    }
}

/// The file format of `--config`. Every key is optional.
#[derive(Clone, Debug, Default, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Path of a potentials file, relative to the config file.
    pub potentials: Option<String>,
    pub preset: Option<Preset>,
    pub term: Vec<Term>,
    pub epsilon: Option<f64>,
    pub s: Option<f64>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub beta: Option<f64>,
    pub a: Option<f64>,
    pub smoothness: Option<u32>,
    pub out: Option<String>,
    pub threads: Option<usize>,
    pub initial: InitialConfig,
    pub strip: StripConfig,
    pub check: RangeConfig,
    pub clt: CltConfig,
    pub drift: DriftConfig,
    pub classify: RangeConfig,
    pub exits: ExitsConfig,
    pub walk: WalkConfig,
    pub ergodize: ErgodizeConfig,
    pub martingale: MartingaleConfig,
    pub bernoulli: BernoulliConfig,
}

/// Command-line values that win over the file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub epsilon: Option<f64>,
    pub s: Option<f64>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub beta: Option<f64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

/// A validated configuration.
#[derive(Clone, Debug)]
pub struct Settings {
    pub potentials: SystemPotentials,
    pub epsilon: f64,
    pub s: f64,
    pub samples: usize,
    pub seed: u64,
    pub beta: f64,
    pub a: f64,
    pub smoothness: u32,
    pub out: PathBuf,
    pub threads: usize,
    pub strip: StripParams,
    pub file: RunConfig,
}

impl Settings {
    pub fn system(&self) -> MapSystem {
        MapSystem::new(self.potentials.clone(), self.epsilon, self.a, self.smoothness).expect("validated on load")
    }

    pub fn system_at(&self, eps: f64) -> Result<MapSystem, CliError> {
        MapSystem::new(self.potentials.clone(), eps, self.a, self.smoothness)
            .map_err(|e| CliError::Usage(format!("epsilon = {eps}: {e}")))
    }

    pub fn ensemble(&self) -> EnsembleSpec {
        EnsembleSpec::new(self.file.initial.initial(), self.s, self.samples, self.seed)
    }

    /// Parameters echoed into every report.
    pub fn params(&self) -> serde_json::Value {
        serde_json::json!({
            "epsilon": self.epsilon,
            "s": self.s,
            "samples": self.samples,
            "seed": self.seed,
            "beta": self.beta,
            "a": self.a,
            "smoothness": self.smoothness,
            "strip": self.strip,
        })
    }
}

fn parse_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config { path: path.display().to_string(), message: e.to_string() })?;
    toml::from_str(&text).map_err(|e| CliError::Config { path: path.display().to_string(), message: e.to_string() })
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let mut cfg: RunConfig = parse_toml(path)?;
        // make the potentials path absolute so later loads do not depend on the cwd
        if let Some(p) = &cfg.potentials {
            let base = path.parent().unwrap_or(Path::new("."));
            cfg.potentials = Some(base.join(p).display().to_string());
        }
        Ok(cfg)
    }

    pub fn resolve(self, ov: &Overrides, origin: &str) -> Result<Settings, CliError> {
        let bad = |message: String| CliError::Config { path: origin.to_string(), message };
        let potentials = match &self.potentials {
            Some(p) => {
                if self.preset.is_some() || !self.term.is_empty() {
                    return Err(bad("give either `potentials` or inline `preset`/`term`, not both".into()));
                }
                let file: PotentialsFile = parse_toml(Path::new(p))?;
                build_potentials(file.preset, &file.term).map_err(|m| CliError::Config { path: p.clone(), message: m })?
            }
            None if self.preset.is_none() && self.term.is_empty() => SystemPotentials::cos_sin(),
            None => build_potentials(self.preset, &self.term).map_err(bad)?,
        };
        let epsilon = ov.epsilon.or(self.epsilon).unwrap_or(0.02);
        let s = ov.s.or(self.s).unwrap_or(1.0);
        let samples = ov.samples.or(self.samples).unwrap_or(10_000);
        let seed = ov.seed.or(self.seed).unwrap_or(1);
        let beta = ov.beta.or(self.beta).unwrap_or(0.05);
        let a = self.a.unwrap_or(0.55);
        let smoothness = self.smoothness.unwrap_or(7);
        let out = ov.out.clone().or(self.out.as_ref().map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("out"));
        let threads = ov.threads.or(self.threads).unwrap_or(0);
        MapSystem::new(potentials.clone(), epsilon, a, smoothness).map_err(|e| bad(e.to_string()))?;
        let st = &self.strip;
        let strip = StripParams::new(st.l, st.d, st.gamma, st.tau, st.kappa, st.delta, beta).map_err(|e| bad(e.to_string()))?;
        let settings = Settings { potentials, epsilon, s, samples, seed, beta, a, smoothness, out, threads, strip, file: self };
        settings.ensemble().steps(epsilon).map_err(|e| bad(e.to_string()))?;
        Ok(settings)
    }
}

/// Loads `path` (or the defaults) and applies the overrides.
pub fn load_settings(path: Option<&Path>, ov: &Overrides) -> Result<Settings, CliError> {
    match path {
        Some(p) => RunConfig::load(p)?.resolve(ov, &p.display().to_string()),
        None => RunConfig::default().resolve(ov, "<defaults>"),
    }
}

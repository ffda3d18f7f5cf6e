//! Experiment configuration, read from TOML.
//!
//! ```toml
//! schema_version = 1
//!
//! [instance]
//! n_total = 50
//! types = [
//!     { kind = "linear", ceiling = 0.06 },
//!     { kind = "power_law", alpha = 0.9, beta = 0.5, gamma = 0.5 },
//! ]
//!
//! [space]
//! scheme = "smooth"   # monotone | smooth | diminishing
//! epsilon = "auto"    # or a number in (0, 1)
//!
//! [run]
//! horizon = 4000
//! seeds = [1, 2, 3]
//!
//! [stochastic]
//! distribution = [0.5, 0.5]
//!
//! [adversarial]
//! kind = "block"
//! blocks = 2
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::discretization::{default_epsilon, Scheme, DEFAULT_CAP};
use crate::error::{PricingError, Result};
use crate::market::{MarketInstance, TypeDistribution, ValuationCurve};
use crate::offline::DEFAULT_RESOLUTION;
use crate::valuation::{linear_curve, power_law_curve, random_monotone_curve, PowerLawSpec};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub instance: InstanceSpec,
    #[serde(default)]
    pub space: SpaceSpec,
    pub run: RunSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stochastic: Option<StochasticSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adversarial: Option<AdversarySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    pub n_total: usize,
    pub types: Vec<TypeSpec>,
}

/// One buyer type's valuation curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TypeSpec {
    Linear { ceiling: f64 },
    PowerLaw { alpha: f64, beta: f64, gamma: f64 },
    Random { seed: u64, knots: usize },
    /// `values[n]` for `n = 0..=N`.
    Explicit { values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EpsilonSpec {
    Value(f64),
    /// Only `"auto"` is accepted: `T^(-1/2)`.
    Named(String),
}

impl Default for EpsilonSpec {
    fn default() -> Self {
        EpsilonSpec::Named("auto".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSpec {
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
    #[serde(default)]
    pub epsilon: EpsilonSpec,
    /// Overrides the measured smoothness constant.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smoothness: Option<f64>,
    /// Overrides the measured diminishing-returns constant.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diminishing: Option<f64>,
    /// Drop price levels above every type's full-data value.
    #[serde(default = "yes")]
    pub prune: bool,
    #[serde(default = "default_cap")]
    pub cap: u64,
}

impl Default for SpaceSpec {
    fn default() -> Self {
        Self {
            scheme: default_scheme(),
            epsilon: EpsilonSpec::default(),
            smoothness: None,
            diminishing: None,
            prune: true,
            cap: DEFAULT_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub horizon: u64,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Overrides the default FTPL perturbation parameter.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default)]
    pub record_wall_clock: bool,
    /// Report the gap between the space optimum and the brute-force oracle.
    #[serde(default)]
    pub oracle_gap: bool,
    #[serde(default = "default_resolution")]
    pub oracle_resolution: f64,
    /// Random comparator curves for the be-the-leader check.
    #[serde(default = "default_comparators")]
    pub comparators: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StochasticSpec {
    pub distribution: Vec<f64>,
}

/// Oblivious buyer-type sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AdversarySpec {
    Constant {
        #[serde(rename = "type")]
        type_index: usize,
    },
    /// Repeats `pattern`.
    Periodic { pattern: Vec<usize> },
    /// `blocks` equal-length blocks; block `b` uses `types[b % len]`, or
    /// type `b % m` when `types` is absent.
    Block {
        blocks: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        types: Option<Vec<usize>>,
    },
    /// Every `segment` rounds a fresh random distribution over types is
    /// drawn, and types are sampled from it.
    Random {
        segment: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    Stochastic,
    Adversarial,
}

impl Setting {
    pub fn name(self) -> &'static str {
        match self {
            Setting::Stochastic => "stochastic",
            Setting::Adversarial => "adversarial",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub setting: Setting,
    pub horizons: Vec<u64>,
    /// Defaults to `run.seeds`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_dir")]
    pub dir: String,
    #[serde(default = "yes")]
    pub traces: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            traces: true,
        }
    }
}

fn default_scheme() -> Scheme {
    Scheme::Monotone
}
fn yes() -> bool {
    true
}
fn default_cap() -> u64 {
    DEFAULT_CAP
}
fn default_seeds() -> Vec<u64> {
    vec![0]
}
fn default_resolution() -> f64 {
    DEFAULT_RESOLUTION
}
fn default_comparators() -> usize {
    100
}
fn default_dir() -> String {
    "out".into()
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| PricingError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Parses and validates. Errors name the offending line when it can be
    /// found in `text`.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| format!("line {}: ", text[..s.start].matches('\n').count() + 1))
                .unwrap_or_default();
            PricingError::Config(format!("{line}{}", e.message().trim()))
        })?;
        cfg.validate().map_err(|(section, key, msg)| {
            let at = locate(text, section, key)
                .map(|l| format!("line {l}: "))
                .unwrap_or_default();
            let path = if section.is_empty() {
                key.to_string()
            } else {
                format!("{section}.{key}")
            };
            PricingError::Config(format!("{at}{path}: {msg}"))
        })?;
        Ok(cfg)
    }

    /// Checks every field; on failure returns (section, key, message).
    pub fn validate(&self) -> std::result::Result<(), (&'static str, &'static str, String)> {
        if self.schema_version != SCHEMA_VERSION {
            return Err((
                "",
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            ));
        }
        let n_total = self.instance.n_total;
        if n_total == 0 {
            return Err(("instance", "n_total", "must be at least 1".into()));
        }
        if self.instance.types.is_empty() {
            return Err(("instance", "types", "at least one type is required".into()));
        }
        if let Err(e) = self.market_instance() {
            return Err(("instance", "types", e.to_string()));
        }
        let m = self.instance.types.len();

        if let EpsilonSpec::Named(s) = &self.space.epsilon {
            if s != "auto" {
                return Err(("space", "epsilon", format!("expected a number or \"auto\", got \"{s}\"")));
            }
        }
        if let EpsilonSpec::Value(e) = self.space.epsilon {
            if !(e > 0.0 && e < 1.0) {
                return Err(("space", "epsilon", format!("must lie in (0, 1), got {e}")));
            }
        }
        for (key, v) in [("smoothness", self.space.smoothness), ("diminishing", self.space.diminishing)] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return Err(("space", key, format!("must be positive, got {v}")));
                }
            }
        }
        if self.space.cap == 0 {
            return Err(("space", "cap", "must be at least 1".into()));
        }

        if self.run.seeds.is_empty() {
            return Err(("run", "seeds", "at least one seed is required".into()));
        }
        if let Some(t) = self.run.theta {
            if !(t.is_finite() && t > 0.0) {
                return Err(("run", "theta", format!("must be positive, got {t}")));
            }
        }
        let r = self.run.oracle_resolution;
        if !(r > 0.0 && r <= 1.0) {
            return Err(("run", "oracle_resolution", format!("must lie in (0, 1], got {r}")));
        }

        if let Some(s) = &self.stochastic {
            if s.distribution.len() != m {
                return Err((
                    "stochastic",
                    "distribution",
                    format!("has {} weights for {m} types", s.distribution.len()),
                ));
            }
            if let Err(e) = TypeDistribution::new(s.distribution.clone()) {
                return Err(("stochastic", "distribution", e.to_string()));
            }
        }
        if let Some(a) = &self.adversarial {
            let bad_type = |i: &usize| *i >= m;
            match a {
                AdversarySpec::Constant { type_index } if *type_index >= m => {
                    return Err(("adversarial", "type", format!("type {type_index} out of range for {m} types")));
                }
                AdversarySpec::Periodic { pattern } if pattern.is_empty() || pattern.iter().any(bad_type) => {
                    return Err(("adversarial", "pattern", format!("must be non-empty with types below {m}")));
                }
                AdversarySpec::Block { blocks: 0, .. } => {
                    return Err(("adversarial", "blocks", "must be at least 1".into()));
                }
                AdversarySpec::Block { types: Some(t), .. } if t.is_empty() || t.iter().any(bad_type) => {
                    return Err(("adversarial", "types", format!("must be non-empty with types below {m}")));
                }
                AdversarySpec::Random { segment: 0, .. } => {
                    return Err(("adversarial", "segment", "must be at least 1".into()));
                }
                _ => {}
            }
        }
        if let Some(s) = &self.sweep {
            if s.horizons.is_empty() {
                return Err(("sweep", "horizons", "at least one horizon is required".into()));
            }
            if matches!(&s.seeds, Some(v) if v.is_empty()) {
                return Err(("sweep", "seeds", "at least one seed is required".into()));
            }
            let present = match s.setting {
                Setting::Stochastic => self.stochastic.is_some(),
                Setting::Adversarial => self.adversarial.is_some(),
            };
            if !present {
                return Err((
                    "sweep",
                    "setting",
                    format!("needs a [{}] section", s.setting.name()),
                ));
            }
        }
        Ok(())
    }

    pub fn market_instance(&self) -> Result<MarketInstance> {
        let n_total = self.instance.n_total;
        let curves = self
            .instance
            .types
            .iter()
            .map(|t| t.curve(n_total))
            .collect::<Result<Vec<_>>>()?;
        let inst = MarketInstance::new(curves)?;
        Ok(inst.with_constants(self.space.smoothness, self.space.diminishing))
    }

    /// `epsilon` for a horizon. `"auto"` is `T^(-1/2)`, replaced by 0.5 when
    /// `T < 4` keeps it out of `(0, 1)` or coarser than 0.5.
    pub fn epsilon_for(&self, horizon: u64) -> f64 {
        match self.space.epsilon {
            EpsilonSpec::Value(e) => e,
            EpsilonSpec::Named(_) => {
                if horizon < 4 {
                    0.5
                } else {
                    default_epsilon(horizon)
                }
            }
        }
    }

    pub fn distribution(&self) -> Result<TypeDistribution> {
        let s = self
            .stochastic
            .as_ref()
            .ok_or_else(|| PricingError::Config("missing [stochastic] section".into()))?;
        TypeDistribution::new(s.distribution.clone())
    }

    pub fn adversary(&self) -> Result<&AdversarySpec> {
        self.adversarial
            .as_ref()
            .ok_or_else(|| PricingError::Config("missing [adversarial] section".into()))
    }
}

impl TypeSpec {
    pub fn curve(&self, n_total: usize) -> Result<ValuationCurve> {
        match self {
            TypeSpec::Linear { ceiling } => linear_curve(*ceiling, n_total),
            TypeSpec::PowerLaw { alpha, beta, gamma } => power_law_curve(
                &PowerLawSpec {
                    alpha: *alpha,
                    beta: *beta,
                    gamma: *gamma,
                },
                n_total,
            ),
            TypeSpec::Random { seed, knots } => random_monotone_curve(*seed, n_total, *knots),
            TypeSpec::Explicit { values } => {
                if values.len() != n_total + 1 {
                    return Err(PricingError::Mismatch {
                        what: "explicit values vs N + 1",
                        expected: n_total + 1,
                        actual: values.len(),
                    });
                }
                ValuationCurve::new(values.clone())
            }
        }
    }
}

/// 1-based line of `key` inside `[section]` (top level when `section` is
/// empty), falling back to the section header.
fn locate(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    let mut header = None;
    for (no, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('[') {
            current = line.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            if current == section {
                header = Some(no + 1);
            }
            continue;
        }
        if current == section {
            if let Some((k, _)) = line.split_once('=') {
                if k.trim() == key {
                    return Some(no + 1);
                }
            }
        }
    }
    header
}

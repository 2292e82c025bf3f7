use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::densities::{DensitySpec, LipschitzSpec};
use crate::error::{Error, Result};
use crate::estimator::{EstimatorConfig, OrliczTail};
use crate::kernels::{BoundaryMode, KernelKind};

/// Estimators selectable in a bench run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EstimatorId {
    Optimal,
    Plugin,
    DiscreteMm,
    DiscretePoly,
    Resub,
}

impl EstimatorId {
    pub const ALL: [EstimatorId; 5] =
        [EstimatorId::Optimal, EstimatorId::Plugin, EstimatorId::DiscreteMm, EstimatorId::DiscretePoly, EstimatorId::Resub];

    pub fn as_str(&self) -> &'static str {
        match self {
            EstimatorId::Optimal => "optimal",
            EstimatorId::Plugin => "plugin",
            EstimatorId::DiscreteMm => "discrete-mm",
            EstimatorId::DiscretePoly => "discrete-poly",
            EstimatorId::Resub => "resub",
        }
    }
}

impl fmt::Display for EstimatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EstimatorId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EstimatorId::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| Error::UnknownEstimator(s.to_string()))
    }
}

impl Serialize for EstimatorId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for EstimatorId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn default_replicates() -> usize {
    20
}
fn default_resolution() -> usize {
    4
}
fn default_c0() -> f64 {
    1.0
}
fn default_c2() -> f64 {
    0.05
}
fn default_epsilon() -> f64 {
    0.3
}
fn default_tail_q() -> f64 {
    2.0
}

/// JSON run description. `n_grid` entries are total sample sizes; the
/// optimal estimator splits them into three blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub densities: Vec<DensitySpec>,
    /// Smoothness class handed to every estimator.
    pub class: LipschitzSpec,
    pub estimators: Vec<EstimatorId>,
    pub n_grid: Vec<usize>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub kernel: KernelKind,
    #[serde(default)]
    pub boundary: BoundaryMode,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    #[serde(default = "default_c0")]
    pub c0: f64,
    #[serde(default)]
    pub c1: Option<f64>,
    #[serde(default = "default_c2")]
    pub c2: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Orlicz exponent used for densities with unbounded support.
    #[serde(default = "default_tail_q")]
    pub tail_q: f64,
    /// Fill the wall-time column. Off by default so reruns are
    /// byte-identical.
    #[serde(default)]
    pub record_timing: bool,
}

impl BenchConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: BenchConfig = serde_json::from_str(text).map_err(|e| Error::Config(format!("bench config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.densities.is_empty() || self.estimators.is_empty() || self.n_grid.is_empty() {
            return Err(Error::Config("densities, estimators and n_grid must be non-empty".into()));
        }
        if self.replicates == 0 {
            return Err(Error::Config("replicates must be positive".into()));
        }
        if let Some(&n) = self.n_grid.iter().find(|&&n| n < 48) {
            return Err(Error::Config(format!("n = {n} below the minimum of 48 total samples")));
        }
        for spec in &self.densities {
            crate::densities::make_density(spec)?;
            let d = match spec {
                DensitySpec::UniformCube { d }
                | DensitySpec::BetaProduct { d, .. }
                | DensitySpec::CosineBump { d, .. }
                | DensitySpec::Gaussian { d, .. } => *d,
                DensitySpec::BumpMixture(b) => b.d,
                DensitySpec::Scaled { .. } => crate::densities::make_density(spec)?.dim(),
            };
            if d != self.class.d {
                return Err(Error::Config(format!("density {} has d = {d}, class has d = {}", spec.id(), self.class.d)));
            }
        }
        self.estimator_config().validate()?;
        OrliczTail::new(self.tail_q)?;
        Ok(())
    }

    /// Configuration of the optimal estimator implied by the run settings.
    pub fn estimator_config(&self) -> EstimatorConfig {
        let mut cfg = EstimatorConfig::new(self.class);
        cfg.c0 = self.c0;
        cfg.c1 = self.c1;
        cfg.c2 = self.c2;
        cfg.epsilon = self.epsilon;
        cfg.kernel = self.kernel;
        cfg.boundary = self.boundary;
        cfg.resolution = self.resolution;
        cfg.seed = self.seed;
        cfg
    }
}

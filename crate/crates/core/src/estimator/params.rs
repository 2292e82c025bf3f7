use serde::{Deserialize, Serialize};

use crate::densities::LipschitzSpec;
use crate::error::{Error, Result};
use crate::kernels::{BoundaryMode, Kernel, KernelKind};

/// Which branch of the pointwise estimator handles `x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    NonSmooth,
    Smooth,
}

/// How the pointwise map is integrated over space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum IntegrationMode {
    /// Exact for the box kernel in one dimension, grid otherwise.
    #[default]
    Auto,
    /// Exact piecewise-constant integration (box kernel, d = 1 only).
    Exact,
    /// Composite midpoint rule at pitch `h / resolution`.
    Grid,
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
fn default_resolution() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorConfig {
    pub class: LipschitzSpec,
    #[serde(default = "default_c0")]
    pub c0: f64,
    /// Classification constant; `None` means `2‖K‖_∞`.
    #[serde(default)]
    pub c1: Option<f64>,
    #[serde(default = "default_c2")]
    pub c2: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub kernel: KernelKind,
    #[serde(default)]
    pub boundary: BoundaryMode,
    /// Grid points per bandwidth along each axis.
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    #[serde(default)]
    pub integration: IntegrationMode,
    #[serde(default)]
    pub seed: u64,
    /// Replaces the rate-optimal bandwidth.
    #[serde(default)]
    pub bandwidth_override: Option<f64>,
    /// Forces every point into one regime.
    #[serde(default)]
    pub regime_override: Option<Regime>,
    /// Drops the upper clip on the non-smooth branch.
    #[serde(default)]
    pub disable_clip: bool,
}

impl EstimatorConfig {
    pub fn new(class: LipschitzSpec) -> Self {
        Self {
            class,
            c0: default_c0(),
            c1: None,
            c2: default_c2(),
            epsilon: default_epsilon(),
            kernel: KernelKind::Box,
            boundary: BoundaryMode::ZeroExtension,
            resolution: default_resolution(),
            integration: IntegrationMode::Auto,
            seed: 0,
            bandwidth_override: None,
            regime_override: None,
            disable_clip: false,
        }
    }

    pub fn kernel(&self) -> Kernel {
        Kernel::new(self.kernel, self.class.d)
    }

    pub fn c1(&self) -> f64 {
        self.c1.unwrap_or(2.0 * self.kernel().sup_norm())
    }

    /// Checks `0 < 7 c₂ ln 2 < ε < s/(s+d)` and positivity of the rest.
    pub fn validate(&self) -> Result<()> {
        self.class.validate().map_err(|e| Error::Config(e.to_string()))?;
        let s = self.class.s;
        let d = self.class.d as f64;
        if !(self.c0 > 0.0) {
            return Err(Error::Config(format!("c0 = {} must be positive", self.c0)));
        }
        if !(self.c1() > 0.0) {
            return Err(Error::Config(format!("c1 = {} must be positive", self.c1())));
        }
        if !(self.c2 > 0.0) {
            return Err(Error::Config(format!("c2 = {} must be positive", self.c2)));
        }
        let lower = 7.0 * self.c2 * std::f64::consts::LN_2;
        let upper = s / (s + d);
        if !(lower < self.epsilon && self.epsilon < upper) {
            return Err(Error::Config(format!(
                "need 7·c2·ln2 = {lower:.4} < ε = {} < s/(s+d) = {upper:.4}",
                self.epsilon
            )));
        }
        if self.resolution == 0 {
            return Err(Error::Config("resolution must be at least 1".into()));
        }
        if let Some(h) = self.bandwidth_override {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::Config(format!("bandwidth override {h} must be positive")));
            }
        }
        Ok(())
    }
}

/// Everything derived from the configuration and the per-split size `n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Parameters {
    pub n: usize,
    pub h: f64,
    pub k: usize,
    /// Non-smooth iff `f̂_{h,1}(x) < tau_classify`.
    pub tau_classify: f64,
    /// `Ĥ_2` is zero below this.
    pub tau_h2: f64,
    /// Upper clip for `Ĥ_1`.
    pub clip: f64,
    /// Right end of the approximation interval, `2 tau_classify`.
    pub delta: f64,
    pub warnings: Vec<String>,
}

/// `h = c₀(L n ln n)^{-1/(s+d)}`, `k = ⌈c₂ ln n⌉` and the thresholds.
pub fn select_parameters(config: &EstimatorConfig, n: usize) -> Result<Parameters> {
    config.validate()?;
    if n < 16 {
        return Err(Error::InsufficientData(format!("per-split sample size {n} below 16")));
    }
    let nf = n as f64;
    let ln_n = nf.ln();
    let s = config.class.s;
    let d = config.class.d;
    let mut warnings = Vec::new();
    let mut h = match config.bandwidth_override {
        Some(h) => h,
        None => config.c0 * (config.class.radius * nf * ln_n).powf(-1.0 / (s + d as f64)),
    };
    if h >= 1.0 {
        warnings.push(format!("bandwidth {h:.4} ≥ 1; capped at 0.5 (n too small for the class)"));
        h = 0.5;
    }
    let k = ((config.c2 * ln_n).ceil() as usize).max(1);
    let hd = h.powi(d as i32);
    let tau = config.c1() * ln_n / (nf * hd);
    let clip = if config.disable_clip {
        f64::INFINITY
    } else {
        1.0 / (nf.powf(1.0 - 2.0 * config.epsilon) * hd)
    };
    Ok(Parameters { n, h, k, tau_classify: tau, tau_h2: tau / 4.0, clip, delta: 2.0 * tau, warnings })
}

/// Strict test: ties go to the smooth branch.
pub fn classify_regime(fhat1: f64, tau_classify: f64) -> Regime {
    if fhat1 < tau_classify {
        Regime::NonSmooth
    } else {
        Regime::Smooth
    }
}

/// Second-order Taylor-corrected plug-in for `-f ln f`, zero when
/// `f̂_{h,2}` is below `τ_{H2}`.
pub fn h2_smooth(fhat2: f64, fhat3: f64, u2: f64, tau_h2: f64) -> f64 {
    if fhat2 < tau_h2 || fhat2 <= 0.0 {
        return 0.0;
    }
    let l = fhat2.ln();
    -fhat2 * l - (1.0 + l) * (fhat3 - fhat2) - 0.5 * (fhat2 - 2.0 * fhat3 + u2 / fhat2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn class(s: f64, d: usize) -> LipschitzSpec {
        LipschitzSpec::new(s, 2.0, d, 1.0).unwrap()
    }

    #[test]
    fn default_bandwidth_and_degree() {
        let p = select_parameters(&EstimatorConfig::new(class(1.0, 1)), 10_000).unwrap();
        let expected = (1e4 * 1e4f64.ln()).powf(-0.5);
        assert!((p.h - expected).abs() < 1e-15);
        assert!((p.h - 3.30e-3).abs() < 1e-5);
        assert_eq!(p.k, 1);
        assert!((p.tau_h2 * 4.0 - p.tau_classify).abs() < 1e-15);
    }

    #[test]
    fn epsilon_below_degree_constraint_rejected() {
        let mut c = EstimatorConfig::new(class(1.0, 1));
        c.epsilon = 0.2;
        assert!(matches!(select_parameters(&c, 1000), Err(Error::Config(_))));
    }

    #[test]
    fn classification_is_strict() {
        assert_eq!(classify_regime(0.0, 0.5), Regime::NonSmooth);
        assert_eq!(classify_regime(0.5, 0.5), Regime::Smooth);
    }

    #[test]
    fn h2_examples() {
        assert_eq!(h2_smooth(0.1, 5.0, 1.0, 0.2), 0.0);
        assert_eq!(h2_smooth(1.0, 1.0, 1.0, 0.1), 0.0);
        let v = h2_smooth(0.5, 0.6, 0.36, 0.1);
        assert!((v - 0.305_889).abs() < 1e-6, "{v}");
    }

    #[test]
    fn tiny_n_rejected_and_large_bandwidth_capped() {
        let c = EstimatorConfig::new(class(1.0, 1));
        assert!(select_parameters(&c, 10).is_err());
        let mut big = c.clone();
        big.c0 = 50.0;
        let p = select_parameters(&big, 100).unwrap();
        assert_eq!(p.h, 0.5);
        assert_eq!(p.warnings.len(), 1);
    }

    #[test]
    fn config_round_trips_through_json() {
        let c = EstimatorConfig::new(class(2.0, 1));
        let s = serde_json::to_string(&c).unwrap();
        let back: EstimatorConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(c, back);
        let minimal: EstimatorConfig =
            serde_json::from_str(r#"{"class": {"s": 1, "p": 2, "d": 1, "L": 1}}"#).unwrap();
        assert_eq!(minimal.c2, 0.05);
    }
}

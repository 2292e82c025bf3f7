use serde::{Deserialize, Serialize};

use crate::densities::PointSet;
use crate::error::{Error, Result};

use super::integrate::{check_samples, estimate_splits, EstimateResult};
use super::params::EstimatorConfig;
use super::pointwise::SplitSamples;

/// Orlicz tail `Ψ_q(u) = exp(u^q) - 1` with truncation constant `C₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrliczTail {
    pub q: f64,
    /// Defaults to `κ³` with `κ = 2^{1/q}`.
    #[serde(default)]
    pub c0: Option<f64>,
}

impl OrliczTail {
    pub fn new(q: f64) -> Result<Self> {
        let t = Self { q, c0: None };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q >= 1.0 && self.q.is_finite()) {
            return Err(Error::InvalidParameter(format!("Orlicz exponent q = {} must be ≥ 1", self.q)));
        }
        if let Some(c) = self.c0 {
            if !(c > 0.0) {
                return Err(Error::InvalidParameter(format!("truncation constant {c} must be positive")));
            }
        }
        Ok(())
    }

    pub fn kappa(&self) -> f64 {
        2f64.powf(1.0 / self.q)
    }

    pub fn c0(&self) -> f64 {
        self.c0.unwrap_or_else(|| self.kappa().powi(3))
    }

    pub fn psi(&self, u: f64) -> f64 {
        (u.powf(self.q)).exp_m1()
    }

    pub fn psi_inverse(&self, y: f64) -> f64 {
        y.ln_1p().powf(1.0 / self.q)
    }

    /// `R = C₀ Ψ^{-1}(n)`.
    pub fn radius(&self, n: usize) -> f64 {
        self.c0() * self.psi_inverse(n as f64)
    }

    /// Checks `Ψ(κu) ≥ Ψ(u)²` on a grid of `u ∈ (0, 4]`.
    pub fn rapid_growth_holds(&self) -> bool {
        let k = self.kappa();
        (1..=400).all(|i| {
            let u = i as f64 * 0.01;
            let lhs = self.psi(k * u);
            let rhs = self.psi(u).powi(2);
            lhs >= rhs * (1.0 - 1e-12)
        })
    }
}

/// Entropy estimate for densities on `R^d` with an Orlicz tail: truncate
/// to `[-R, R]^d`, map affinely onto the unit cube, estimate with the
/// tail-adjusted bandwidth, and add back `d ln(2R)`.
pub fn estimate_entropy_unbounded(
    samples: &PointSet,
    config: &EstimatorConfig,
    tail: &OrliczTail,
) -> Result<EstimateResult> {
    config.validate()?;
    tail.validate()?;
    check_samples(samples, config.class.d)?;
    let d = config.class.d;
    let n = samples.len() / 3;
    if n < 2 {
        return Err(Error::InsufficientData(format!("need at least 6 samples, got {}", samples.len())));
    }
    let r = tail.radius(n);
    let width = 2.0 * r;
    let mut truncated = 0usize;
    let parts: [PointSet; 3] = std::array::from_fn(|b| {
        let block = samples.slice(b * n, (b + 1) * n);
        let kept = block.filter(|p| p.iter().all(|v| v.abs() <= r));
        truncated += block.len() - kept.len();
        kept.map(|p| p.iter().map(|v| (v + r) / width).collect())
    });
    let splits = SplitSamples::from_parts(parts, n)?;

    let mut cfg = config.clone();
    if cfg.bandwidth_override.is_none() {
        let s = cfg.class.s;
        let p = cfg.class.p;
        let nf = n as f64;
        let sd = s + d as f64;
        let h = cfg.c0 * (nf * nf.ln()).powf(-1.0 / sd) * r.powf(d as f64 / (p * sd));
        cfg.bandwidth_override = Some(h / width);
    }
    let mut result = estimate_splits(&splits, &cfg)?;
    result.entropy += d as f64 * width.ln();
    result.truncated = truncated;
    let total = 3 * n;
    if truncated as f64 > 0.05 * total as f64 {
        result.warnings.push(format!(
            "{truncated} of {total} samples lie outside [-R, R]^d with R = {r:.4}; the tail assumption is likely violated"
        ));
    }
    Ok(result)
}

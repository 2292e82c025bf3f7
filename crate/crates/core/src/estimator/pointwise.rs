use crate::densities::PointSet;
use crate::error::{Error, Result};
use crate::kernels::{BoundaryMode, Kernel, KernelIndex, KernelKind};
use crate::poly_approx::PolyApprox;
use crate::u_stats::{h1_box_fastpath, h1_nonsmooth, second_order_u, UStatInput};

use super::params::{classify_regime, h2_smooth, Parameters, Regime};

/// Three index blocks `[0, n)`, `[n, 2n)`, `[2n, 3n)` of a sample. Any
/// remainder of `len mod 3` trailing points is dropped.
#[derive(Debug, Clone)]
pub struct SplitSamples {
    parts: [PointSet; 3],
    n: usize,
}

impl SplitSamples {
    pub fn new(samples: &PointSet) -> Result<Self> {
        let n = samples.len() / 3;
        if n == 0 {
            return Err(Error::InsufficientData(format!(
                "need at least 3 samples to split, got {}",
                samples.len()
            )));
        }
        Ok(Self {
            parts: [samples.slice(0, n), samples.slice(n, 2 * n), samples.slice(2 * n, 3 * n)],
            n,
        })
    }

    /// Blocks of possibly unequal stored size sharing the nominal size `n`;
    /// missing points count as zero kernel values.
    pub fn from_parts(parts: [PointSet; 3], n: usize) -> Result<Self> {
        if parts.iter().any(|p| p.len() > n) {
            return Err(Error::Data("split part larger than nominal size".into()));
        }
        Ok(Self { parts, n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn part(&self, i: usize) -> &PointSet {
        &self.parts[i]
    }

    pub fn dim(&self) -> usize {
        self.parts[0].dim()
    }
}

/// One pointwise evaluation with its branch bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointEstimate {
    pub value: f64,
    pub regime: Regime,
    pub clipped: bool,
    /// `f̂_{h,1}(x)` from the first split.
    pub fhat1: f64,
}

/// Pre-built neighbour indices for repeated pointwise evaluation.
#[derive(Debug, Clone)]
pub struct PointwiseEvaluator {
    idx: [KernelIndex; 3],
    params: Parameters,
    poly: PolyApprox,
    boundary: BoundaryMode,
    regime_override: Option<Regime>,
}

impl PointwiseEvaluator {
    pub fn new(
        splits: &SplitSamples,
        kernel: Kernel,
        boundary: BoundaryMode,
        params: Parameters,
        poly: PolyApprox,
        regime_override: Option<Regime>,
    ) -> Result<Self> {
        if params.n != splits.n() {
            return Err(Error::Config(format!(
                "parameters were selected for n = {}, splits have n = {}",
                params.n,
                splits.n()
            )));
        }
        let build = |i: usize| KernelIndex::with_population(splits.part(i), splits.n(), kernel, params.h, boundary);
        Ok(Self { idx: [build(0)?, build(1)?, build(2)?], params, poly, boundary, regime_override })
    }

    pub fn params(&self) -> &Parameters {
        &self.params
    }

    pub fn poly(&self) -> &PolyApprox {
        &self.poly
    }

    pub fn index(&self, i: usize) -> &KernelIndex {
        &self.idx[i]
    }

    /// `Ĥ(x)`.
    pub fn estimate(&self, x: &[f64]) -> PointEstimate {
        let wrapped;
        let x = match self.boundary {
            BoundaryMode::Periodic => {
                wrapped = x.iter().map(|v| v.rem_euclid(1.0)).collect::<Vec<_>>();
                &wrapped[..]
            }
            BoundaryMode::ZeroExtension => x,
        };
        let p = &self.params;
        let fhat1 = self.idx[0].kde(x);
        let regime = self.regime_override.unwrap_or_else(|| classify_regime(fhat1, p.tau_classify));
        match regime {
            Regime::NonSmooth => {
                let kernel = self.idx[1].kernel();
                let h1 = if kernel.kind == KernelKind::Box {
                    h1_box_fastpath(self.idx[1].count(x), p.n, p.h, kernel.d, &self.poly)
                } else {
                    UStatInput::with_zeros(self.idx[1].values(x), p.n).and_then(|u| h1_nonsmooth(&u, &self.poly))
                }
                .expect("counts never exceed n and k ≤ n by construction");
                let clipped = h1 > p.clip;
                PointEstimate { value: h1.min(p.clip), regime, clipped, fhat1 }
            }
            Regime::Smooth => {
                let fhat2 = self.idx[1].kde(x);
                let v3 = self.idx[2].values(x);
                let fhat3 = v3.iter().sum::<f64>() / p.n as f64;
                let u2 = UStatInput::with_zeros(v3, p.n)
                    .and_then(|u| second_order_u(&u))
                    .expect("n ≥ 16 by parameter selection");
                PointEstimate { value: h2_smooth(fhat2, fhat3, u2, p.tau_h2), regime, clipped: false, fhat1 }
            }
        }
    }
}

/// Single-point convenience wrapper; builds indices on every call.
pub fn pointwise_estimate(
    x: &[f64],
    splits: &SplitSamples,
    kernel: Kernel,
    boundary: BoundaryMode,
    params: &Parameters,
    poly: &PolyApprox,
) -> Result<PointEstimate> {
    let ev = PointwiseEvaluator::new(splits, kernel, boundary, params.clone(), poly.clone(), None)?;
    Ok(ev.estimate(x))
}

//! Reference estimators: the integral-form kernel plug-in, the
//! quantize-then-discrete-entropy reduction and a leave-one-out
//! resubstitution estimate.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::densities::{LipschitzSpec, PointSet};
use crate::error::{Error, Result};
use crate::estimator::{cached_poly, domain, exact_nodes_1d, grid_nodes, grid_size, weighted_sum};
use crate::kernels::{BoundaryMode, Kernel, KernelIndex, KernelKind};
use crate::numeric::{compensated_sum, neg_xlogx};
use crate::parallel;
use crate::u_stats::h1_box_fastpath;

/// Bandwidth `(L n)^{-1/(s+d)}` at which the plug-in is analysed.
pub fn plugin_bandwidth(class: &LipschitzSpec, n: usize) -> f64 {
    (class.radius * n as f64).powf(-1.0 / (class.s + class.d as f64))
}

/// `∫ -f̂_h ln f̂_h` using every sample. The box kernel in one dimension is
/// integrated exactly over its constant pieces, everything else on a
/// midpoint grid of pitch `h / resolution`.
pub fn plugin_entropy(
    samples: &PointSet,
    kernel: Kernel,
    h: f64,
    boundary: BoundaryMode,
    resolution: usize,
) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InsufficientData("plug-in needs at least one sample".into()));
    }
    if resolution == 0 {
        return Err(Error::InvalidParameter("resolution must be at least 1".into()));
    }
    let index = KernelIndex::new(samples, kernel, h, boundary)?;
    let reach = h * kernel.support_radius();
    let (lo, hi) = domain(boundary, reach);
    let nodes = if kernel.kind == KernelKind::Box && kernel.d == 1 {
        exact_nodes_1d(&[samples], reach, lo, hi, boundary)
    } else {
        grid_nodes(lo, hi, kernel.d, grid_size(hi - lo, h, resolution))
    };
    let values: Vec<f64> = parallel::install(|| {
        (0..nodes.len())
            .into_par_iter()
            .map(|i| {
                let x = nodes.point(i);
                match boundary {
                    BoundaryMode::Periodic => {
                        let w: Vec<f64> = x.iter().map(|v| v.rem_euclid(1.0)).collect();
                        neg_xlogx(index.kde(&w))
                    }
                    BoundaryMode::ZeroExtension => neg_xlogx(index.kde(x)),
                }
            })
            .collect()
    });
    Ok(weighted_sum(&values, &nodes.weights))
}

/// Bin counts of a sample on the regular partition of `[0,1]^d` into cubes
/// of edge `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    h: f64,
    per_axis: usize,
    d: usize,
    counts: Vec<usize>,
    n: usize,
}

impl Histogram {
    /// Fails unless `1/h` is an integer (to 1e-9) and every sample lies in
    /// the unit cube.
    pub fn new(samples: &PointSet, h: f64) -> Result<Self> {
        let per_axis = tiling_count(h)?;
        let d = samples.dim();
        let total = per_axis
            .checked_pow(d as u32)
            .filter(|&s| s <= 1 << 26)
            .ok_or_else(|| Error::InvalidParameter(format!("{per_axis}^{d} bins is too many")))?;
        let mut counts = vec![0usize; total];
        for p in samples.iter() {
            let mut idx = 0usize;
            for &v in p {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::Data(format!("sample coordinate {v} outside [0,1]")));
                }
                let b = ((v * per_axis as f64).floor() as usize).min(per_axis - 1);
                idx = idx * per_axis + b;
            }
            counts[idx] += 1;
        }
        Ok(Self { h, per_axis, d, counts, n: samples.len() })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Number of bins `S = h^{-d}`.
    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn per_axis(&self) -> usize {
        self.per_axis
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.n.max(1) as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }

    pub fn occupied(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }
}

fn tiling_count(h: f64) -> Result<usize> {
    if !(h > 0.0 && h <= 1.0) {
        return Err(Error::InvalidParameter(format!("bin edge h = {h} must lie in (0, 1]")));
    }
    let m = (1.0 / h).round();
    if (m * h - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!("bin edge h = {h} does not tile [0,1]")));
    }
    Ok(m as usize)
}

/// Largest tiling edge `1/m` not exceeding `h`.
pub fn tiling_bandwidth(h: f64) -> f64 {
    1.0 / (1.0 / h).ceil().max(1.0)
}

/// Discrete entropy estimator applied to the bin frequencies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscreteMode {
    /// Empirical entropy `Σ -p̂ ln p̂`.
    Plugin,
    /// Empirical entropy plus `(S₊ - 1)/(2n)`.
    MillerMadow,
    /// Polynomial approximation below `c1 ln n / n`, bias-corrected plug-in
    /// above; degree `⌈c2 ln n⌉`.
    Poly { c1: f64, c2: f64 },
}

impl DiscreteMode {
    pub fn poly() -> Self {
        DiscreteMode::Poly { c1: 2.0, c2: 0.3 }
    }
}

/// `Ĥ_discrete + d ln h` on the histogram of edge `h`.
pub fn discrete_reduction_entropy(samples: &PointSet, h: f64, mode: DiscreteMode) -> Result<f64> {
    let d = samples.dim() as f64;
    let discrete = match mode {
        DiscreteMode::Plugin => discrete_plugin(&Histogram::new(samples, h)?),
        DiscreteMode::MillerMadow => {
            let hist = Histogram::new(samples, h)?;
            discrete_plugin(&hist) + (hist.occupied().max(1) - 1) as f64 / (2.0 * hist.n().max(1) as f64)
        }
        DiscreteMode::Poly { c1, c2 } => {
            let half = samples.len() / 2;
            let first = Histogram::new(&samples.slice(0, half), h)?;
            let second = Histogram::new(&samples.slice(half, 2 * half), h)?;
            discrete_poly(&first, &second, c1, c2)?
        }
    };
    Ok(discrete + d * h.ln())
}

fn discrete_plugin(hist: &Histogram) -> f64 {
    compensated_sum(hist.frequencies().into_iter().map(neg_xlogx))
}

/// Classifies each bin with the first histogram and estimates `-p ln p`
/// from the second.
fn discrete_poly(first: &Histogram, second: &Histogram, c1: f64, c2: f64) -> Result<f64> {
    let n = second.n();
    if n < 16 {
        return Err(Error::InsufficientData(format!("polynomial discrete estimator needs 2×16 samples, got 2×{n}")));
    }
    if !(c1 > 0.0 && c2 > 0.0) {
        return Err(Error::InvalidParameter("c1 and c2 must be positive".into()));
    }
    let nf = n as f64;
    let ln_n = nf.ln();
    let threshold = c1 * ln_n / nf;
    let k = ((c2 * ln_n).ceil() as usize).max(1);
    let poly = cached_poly(2.0 * threshold, k)?;
    let mut terms = Vec::with_capacity(second.bins());
    for (&c_first, &c_second) in first.counts().iter().zip(second.counts()) {
        let p_first = c_first as f64 / first.n() as f64;
        if p_first < threshold {
            terms.push(h1_box_fastpath(c_second, n, 1.0, 1, &poly)?);
        } else {
            let p = c_second as f64 / nf;
            terms.push(neg_xlogx(p) + (1.0 - p) / (2.0 * nf));
        }
    }
    Ok(compensated_sum(terms))
}

/// `-(1/n) Σ ln f̂^{(-i)}(X_i)` with the leave-one-out estimate floored at
/// `1/(n h^d)` where it vanishes.
pub fn resubstitution_entropy(samples: &PointSet, kernel: Kernel, h: f64, boundary: BoundaryMode) -> Result<f64> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!("resubstitution needs n ≥ 2, got {n}")));
    }
    let index = KernelIndex::new(samples, kernel, h, boundary)?;
    let self_weight = kernel.at(h, &vec![0.0; kernel.d]);
    let floor = 1.0 / (n as f64 * h.powi(kernel.d as i32));
    let logs: Vec<f64> = parallel::install(|| {
        (0..n)
            .into_par_iter()
            .map(|i| {
                let x: Vec<f64> = match boundary {
                    BoundaryMode::Periodic => samples.point(i).iter().map(|v| v.rem_euclid(1.0)).collect(),
                    BoundaryMode::ZeroExtension => samples.point(i).to_vec(),
                };
                let total = compensated_sum(index.values(&x));
                let loo = (total - self_weight) / (n - 1) as f64;
                // Rounding residue of the self-term subtraction counts as zero.
                let f = if loo > 1e-12 * self_weight { loo } else { floor };
                -f.ln()
            })
            .collect()
    });
    Ok(crate::numeric::pairwise_sum(&logs) / n as f64)
}

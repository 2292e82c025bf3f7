use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::densities::PointSet;
use crate::error::{Error, Result};
use crate::kernels::{BoundaryMode, KernelKind};
use crate::numeric::pairwise_sum;
use crate::parallel;
use crate::poly_approx::{remez_minimax, PolyApprox};

use super::params::{select_parameters, EstimatorConfig, IntegrationMode, Regime};
use super::pointwise::{PointwiseEvaluator, SplitSamples};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateResult {
    /// `Ĥ` in nats.
    pub entropy: f64,
    pub h: f64,
    pub k: usize,
    /// Per-split sample size.
    pub n: usize,
    /// Share of evaluation cells handled by the non-smooth branch.
    pub nonsmooth_fraction: f64,
    pub clip_activations: usize,
    pub evaluation_points: usize,
    /// `|M_N - M_{N/2}|` for grid integration; `None` when exact.
    pub quadrature_error: Option<f64>,
    /// Smallest kernel density estimate seen (never negative for the
    /// shipped kernels).
    pub min_density_estimate: f64,
    /// Samples discarded by the unbounded-support wrapper.
    pub truncated: usize,
    pub wall_time_ms: f64,
    pub warnings: Vec<String>,
}

impl EstimateResult {
    /// Flat `key=value` record, one field per line.
    pub fn to_record(&self) -> String {
        let mut s = String::new();
        let q = self.quadrature_error.map_or("none".to_string(), |e| format!("{e:e}"));
        for (k, v) in [
            ("entropy", format!("{}", self.entropy)),
            ("h", format!("{}", self.h)),
            ("k", self.k.to_string()),
            ("n_per_split", self.n.to_string()),
            ("nonsmooth_fraction", format!("{}", self.nonsmooth_fraction)),
            ("clip_activations", self.clip_activations.to_string()),
            ("evaluation_points", self.evaluation_points.to_string()),
            ("quadrature_error", q),
            ("negative_density_free", (self.min_density_estimate >= 0.0).to_string()),
            ("truncated", self.truncated.to_string()),
        ] {
            s.push_str(k);
            s.push('=');
            s.push_str(&v);
            s.push('\n');
        }
        for w in &self.warnings {
            s.push_str("warning=");
            s.push_str(w);
            s.push('\n');
        }
        s
    }
}

/// Minimax polynomials are pure functions of `(Δ, k)`; cache them across
/// replicates.
pub(crate) fn cached_poly(delta: f64, k: usize) -> Result<Arc<PolyApprox>> {
    static CACHE: OnceLock<Mutex<HashMap<(u64, usize), Arc<PolyApprox>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (delta.to_bits(), k);
    if let Some(p) = cache.lock().expect("poly cache").get(&key) {
        return Ok(p.clone());
    }
    let p = Arc::new(remez_minimax(delta, k)?);
    let mut guard = cache.lock().expect("poly cache");
    if guard.len() > 4096 {
        guard.clear();
    }
    guard.insert(key, p.clone());
    Ok(p)
}

/// Evaluation nodes with weights.
pub(crate) struct Nodes {
    pub dim: usize,
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Nodes {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }
}

/// Cell midpoints of the arrangement cut by every `p ± reach`, restricted to
/// `[lo, hi]`. Any map that is constant between those cuts is integrated
/// exactly by these nodes.
pub(crate) fn exact_nodes_1d(sets: &[&PointSet], reach: f64, lo: f64, hi: f64, boundary: BoundaryMode) -> Nodes {
    let mut cuts = vec![lo, hi];
    for set in sets {
        for &p in set.coords() {
            for c in [p - reach, p + reach] {
                let c = match boundary {
                    BoundaryMode::Periodic => c.rem_euclid(1.0),
                    BoundaryMode::ZeroExtension => c,
                };
                if c > lo && c < hi {
                    cuts.push(c);
                }
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut points = Vec::with_capacity(cuts.len());
    let mut weights = Vec::with_capacity(cuts.len());
    for w in cuts.windows(2) {
        let width = w[1] - w[0];
        if width > 0.0 {
            points.push(0.5 * (w[0] + w[1]));
            weights.push(width);
        }
    }
    Nodes { dim: 1, points, weights }
}

/// Midpoint nodes of an `m^d` grid on `[lo, hi]^d`.
pub(crate) fn grid_nodes(lo: f64, hi: f64, d: usize, m: usize) -> Nodes {
    let step = (hi - lo) / m as f64;
    let total = m.pow(d as u32);
    let mut points = Vec::with_capacity(total * d);
    for code in 0..total {
        let mut c = code;
        let start = points.len();
        points.resize(start + d, 0.0);
        for axis in (0..d).rev() {
            points[start + axis] = lo + step * ((c % m) as f64 + 0.5);
            c /= m;
        }
    }
    Nodes { dim: d, points, weights: vec![step.powi(d as i32); total] }
}

/// Grid size per axis for pitch `h / resolution`, rounded up to even.
pub(crate) fn grid_size(width: f64, h: f64, resolution: usize) -> usize {
    let m = (width * resolution as f64 / h).ceil().max(2.0) as usize;
    m + m % 2
}

pub(crate) fn weighted_sum(values: &[f64], weights: &[f64]) -> f64 {
    let prod: Vec<f64> = values.iter().zip(weights).map(|(v, w)| v * w).collect();
    pairwise_sum(&prod)
}

/// Integration domain per axis.
pub(crate) fn domain(boundary: BoundaryMode, reach: f64) -> (f64, f64) {
    match boundary {
        BoundaryMode::ZeroExtension => (-reach, 1.0 + reach),
        BoundaryMode::Periodic => (0.0, 1.0),
    }
}

pub(crate) fn check_samples(samples: &PointSet, d: usize) -> Result<()> {
    if samples.dim() != d {
        return Err(Error::Data(format!(
            "samples have dimension {}, configuration expects {d}",
            samples.dim()
        )));
    }
    if samples.coords().iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("non-finite sample coordinate".into()));
    }
    if samples.len() < 3 {
        return Err(Error::InsufficientData(format!("need at least 3 samples, got {}", samples.len())));
    }
    Ok(())
}

/// `Ĥ = ∫ Ĥ(x) dx` over the support of `f_h`.
pub fn estimate_entropy(samples: &PointSet, config: &EstimatorConfig) -> Result<EstimateResult> {
    config.validate()?;
    check_samples(samples, config.class.d)?;
    let mut warnings = Vec::new();
    if config.boundary == BoundaryMode::ZeroExtension
        && samples.coords().iter().any(|v| !(0.0..=1.0).contains(v))
    {
        warnings.push("samples outside [0,1]^d; zero-extension assumes unit-cube support".into());
    }
    if !samples.len().is_multiple_of(3) {
        warnings.push(format!("{} trailing samples dropped to split into three equal parts", samples.len() % 3));
    }
    let splits = SplitSamples::new(samples)?;
    let mut result = estimate_splits(&splits, config)?;
    warnings.append(&mut result.warnings);
    result.warnings = warnings;
    Ok(result)
}

pub(crate) fn estimate_splits(splits: &SplitSamples, config: &EstimatorConfig) -> Result<EstimateResult> {
    let start = Instant::now();
    let params = select_parameters(config, splits.n())?;
    let poly = cached_poly(params.delta, params.k)?;
    let kernel = config.kernel();
    let d = config.class.d;
    let reach = params.h * kernel.support_radius();
    let (lo, hi) = domain(config.boundary, reach);
    let exact = match config.integration {
        IntegrationMode::Exact => {
            if kernel.kind != KernelKind::Box || d != 1 {
                return Err(Error::Config("exact integration needs the box kernel in one dimension".into()));
            }
            true
        }
        IntegrationMode::Auto => kernel.kind == KernelKind::Box && d == 1,
        IntegrationMode::Grid => false,
    };
    let evaluator = PointwiseEvaluator::new(
        splits,
        kernel,
        config.boundary,
        params.clone(),
        (*poly).clone(),
        config.regime_override,
    )?;
    let run = |nodes: &Nodes| {
        parallel::install(|| {
            (0..nodes.len())
                .into_par_iter()
                .map(|i| evaluator.estimate(nodes.point(i)))
                .collect::<Vec<_>>()
        })
    };
    let (entropy, points, quadrature_error) = if exact {
        let sets = [splits.part(0), splits.part(1), splits.part(2)];
        let nodes = exact_nodes_1d(&sets, reach, lo, hi, config.boundary);
        let est = run(&nodes);
        let vals: Vec<f64> = est.iter().map(|e| e.value).collect();
        (weighted_sum(&vals, &nodes.weights), est, None)
    } else {
        let m = grid_size(hi - lo, params.h, config.resolution);
        let fine = grid_nodes(lo, hi, d, m);
        let coarse = grid_nodes(lo, hi, d, m / 2);
        let est = run(&fine);
        let vals: Vec<f64> = est.iter().map(|e| e.value).collect();
        let value = weighted_sum(&vals, &fine.weights);
        let coarse_vals: Vec<f64> = run(&coarse).iter().map(|e| e.value).collect();
        let coarse_value = weighted_sum(&coarse_vals, &coarse.weights);
        (value, est, Some((value - coarse_value).abs()))
    };
    let nonsmooth = points.iter().filter(|e| e.regime == Regime::NonSmooth).count();
    let clip_activations = points.iter().filter(|e| e.clipped).count();
    Ok(EstimateResult {
        entropy,
        h: params.h,
        k: params.k,
        n: params.n,
        nonsmooth_fraction: nonsmooth as f64 / points.len().max(1) as f64,
        clip_activations,
        evaluation_points: points.len(),
        quadrature_error,
        min_density_estimate: points.iter().fold(f64::INFINITY, |a, e| a.min(e.fhat1)),
        truncated: 0,
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
        warnings: params.warnings.clone(),
    })
}

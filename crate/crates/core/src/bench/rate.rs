use std::collections::BTreeMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

use super::run::ExperimentRecord;

const BOOTSTRAP_RESAMPLES: usize = 200;
const MIN_REPLICATES: usize = 20;

/// Log-log least-squares fit of RMSE against total sample size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    pub estimator: String,
    pub density: String,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// 90% percentile-bootstrap interval of the slope.
    pub ci_low: f64,
    pub ci_high: f64,
    #[serde(skip)]
    pub n_grid: Vec<usize>,
    #[serde(skip)]
    pub rmse: Vec<f64>,
}

/// Errors of one `(estimator, density)` pair grouped by `n`, ascending.
fn errors_by_n(records: &[ExperimentRecord], estimator: &str, density: &str) -> BTreeMap<usize, Vec<f64>> {
    let mut groups: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.estimator == estimator && r.density == density) {
        groups.entry(r.n).or_default().push(r.error);
    }
    groups
}

fn rmse(errors: &[f64]) -> f64 {
    (errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64).sqrt()
}

/// `(n, RMSE)` for every sample size present.
pub fn cell_rmse(records: &[ExperimentRecord], estimator: &str, density: &str) -> Vec<(usize, f64)> {
    errors_by_n(records, estimator, density).into_iter().map(|(n, e)| (n, rmse(&e))).collect()
}

/// Returns `(slope, intercept, r²)`.
fn ols(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (slope, my - slope * mx, r2)
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn resample(errors: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..errors.len()).map(|_| errors[rng.random_range(0..errors.len())]).collect()
}

/// Fits `ln RMSE = a + b ln n`. Needs at least three sample sizes with
/// twenty replicates each; replicates are resampled within each `n` for
/// the slope interval.
pub fn fit_rate(records: &[ExperimentRecord], estimator: &str, density: &str, seed: u64) -> Result<RateFit> {
    let groups = errors_by_n(records, estimator, density);
    if groups.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{estimator} on {density}: rate fit needs 3 distinct n, found {}",
            groups.len()
        )));
    }
    if let Some((n, e)) = groups.iter().find(|(_, e)| e.len() < MIN_REPLICATES) {
        return Err(Error::InsufficientData(format!(
            "{estimator} on {density}: n = {n} has {} replicates, need {MIN_REPLICATES}",
            e.len()
        )));
    }
    let n_grid: Vec<usize> = groups.keys().copied().collect();
    let x: Vec<f64> = n_grid.iter().map(|&n| (n as f64).ln()).collect();
    let rmses: Vec<f64> = groups.values().map(|e| rmse(e)).collect();
    if rmses.iter().any(|&r| !(r > 0.0) || !r.is_finite()) {
        return Err(Error::Data(format!("{estimator} on {density}: RMSE must be positive and finite")));
    }
    let y: Vec<f64> = rmses.iter().map(|r| r.ln()).collect();
    let (slope, intercept, r_squared) = ols(&x, &y);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut slopes: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .map(|_| {
            let yb: Vec<f64> = groups.values().map(|e| rmse(&resample(e, &mut rng)).max(f64::MIN_POSITIVE).ln()).collect();
            ols(&x, &yb).0
        })
        .collect();
    slopes.sort_by(f64::total_cmp);
    Ok(RateFit {
        estimator: estimator.to_string(),
        density: density.to_string(),
        slope,
        intercept,
        r_squared,
        ci_low: percentile(&slopes, 0.05),
        ci_high: percentile(&slopes, 0.95),
        n_grid,
        rmse: rmses,
    })
}

/// Mean signed error at one `n` with a 95% bootstrap interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BiasSummary {
    pub n: usize,
    pub replicates: usize,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl BiasSummary {
    pub fn contains_zero(&self) -> bool {
        self.ci_low <= 0.0 && 0.0 <= self.ci_high
    }
}

pub fn bias_summary(
    records: &[ExperimentRecord],
    estimator: &str,
    density: &str,
    n: usize,
    seed: u64,
) -> Result<BiasSummary> {
    let groups = errors_by_n(records, estimator, density);
    let errors = groups
        .get(&n)
        .filter(|e| e.len() >= 2)
        .ok_or_else(|| Error::InsufficientData(format!("{estimator} on {density}: fewer than 2 replicates at n = {n}")))?;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut means: Vec<f64> = (0..BOOTSTRAP_RESAMPLES).map(|_| mean(&resample(errors, &mut rng))).collect();
    means.sort_by(f64::total_cmp);
    Ok(BiasSummary {
        n,
        replicates: errors.len(),
        mean: mean(errors),
        ci_low: percentile(&means, 0.025),
        ci_high: percentile(&means, 0.975),
    })
}

pub fn write_rate_csv<W: Write>(fits: &[RateFit], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    for f in fits {
        w.serialize(f)?;
    }
    w.flush()?;
    Ok(())
}

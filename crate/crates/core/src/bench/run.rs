use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{
    discrete_reduction_entropy, plugin_bandwidth, plugin_entropy, resubstitution_entropy, tiling_bandwidth,
    DiscreteMode,
};
use crate::densities::{make_density, DensityModel, PointSet, Support};
use crate::error::{Error, Result};
use crate::estimator::{estimate_entropy, estimate_entropy_unbounded, OrliczTail};
use crate::parallel;

use super::config::{BenchConfig, EstimatorId};

pub const CSV_HEADER: [&str; 9] =
    ["estimator", "density", "n", "replicate", "seed", "estimate", "truth", "error", "wall_time_ms"];

/// One estimator run on one replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub estimator: String,
    pub density: String,
    pub n: usize,
    pub replicate: usize,
    pub seed: u64,
    pub estimate: f64,
    pub truth: f64,
    /// `estimate - truth`.
    pub error: f64,
    pub wall_time_ms: f64,
}

/// SplitMix64 finaliser.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3))
}

/// `mix(mix(mix(master ^ fnv(density)) ^ n) ^ r)` with `mix` = SplitMix64.
/// Every estimator in a cell sees the same sample.
pub fn cell_seed(master: u64, density_id: &str, n: usize, replicate: usize) -> u64 {
    let a = splitmix64(master ^ fnv1a(density_id));
    let b = splitmix64(a ^ n as u64);
    splitmix64(b ^ replicate as u64)
}

/// Runs one estimator on one sample of total size `samples.len()`.
pub fn run_estimator(id: EstimatorId, samples: &PointSet, model: &DensityModel, cfg: &BenchConfig) -> Result<f64> {
    let n = samples.len();
    let class = &cfg.class;
    let kernel = crate::kernels::Kernel::new(cfg.kernel, class.d);
    let unbounded = model.support() == Support::Whole;
    if unbounded && id != EstimatorId::Optimal {
        return Err(Error::Config(format!("estimator {id} needs a density supported on the unit cube")));
    }
    match id {
        EstimatorId::Optimal => {
            let ecfg = cfg.estimator_config();
            let r = if unbounded {
                estimate_entropy_unbounded(samples, &ecfg, &OrliczTail::new(cfg.tail_q)?)?
            } else {
                estimate_entropy(samples, &ecfg)?
            };
            Ok(r.entropy)
        }
        EstimatorId::Plugin => plugin_entropy(samples, kernel, plugin_bandwidth(class, n), cfg.boundary, cfg.resolution),
        EstimatorId::Resub => resubstitution_entropy(samples, kernel, plugin_bandwidth(class, n), cfg.boundary),
        EstimatorId::DiscreteMm | EstimatorId::DiscretePoly => {
            let nf = n as f64;
            let h = (class.radius * nf * nf.ln()).powf(-1.0 / (class.s + class.d as f64));
            let mode = if id == EstimatorId::DiscreteMm { DiscreteMode::MillerMadow } else { DiscreteMode::poly() };
            discrete_reduction_entropy(samples, tiling_bandwidth(h.min(1.0)), mode)
        }
    }
}

type CellKey = (usize, usize, usize);

/// Runs every missing `(density, n, replicate)` cell and returns the full
/// record list in canonical order: density, n, replicate, then estimator as
/// listed in the configuration.
pub fn run_bench_resume(cfg: &BenchConfig, existing: &[ExperimentRecord]) -> Result<Vec<ExperimentRecord>> {
    cfg.validate()?;
    let models: Vec<DensityModel> = cfg.densities.iter().map(make_density).collect::<Result<_>>()?;
    let mut done: BTreeMap<(String, String, usize, usize), ExperimentRecord> = BTreeMap::new();
    for r in existing {
        done.insert((r.estimator.clone(), r.density.clone(), r.n, r.replicate), r.clone());
    }
    let cells: Vec<CellKey> = (0..models.len())
        .flat_map(|di| cfg.n_grid.iter().enumerate().flat_map(move |(ni, _)| (0..cfg.replicates).map(move |r| (di, ni, r))))
        .collect();
    let results: Vec<Result<Vec<ExperimentRecord>>> = parallel::install(|| {
        cells
            .par_iter()
            .map(|&(di, ni, r)| {
                let model = &models[di];
                let id = model.id();
                let n = cfg.n_grid[ni];
                let seed = cell_seed(cfg.seed, &id, n, r);
                let missing: Vec<EstimatorId> = cfg
                    .estimators
                    .iter()
                    .copied()
                    .filter(|e| !done.contains_key(&(e.to_string(), id.clone(), n, r)))
                    .collect();
                let samples = if missing.is_empty() {
                    None
                } else {
                    Some(model.sample(n, &mut ChaCha8Rng::seed_from_u64(seed))?)
                };
                let mut out = Vec::with_capacity(cfg.estimators.len());
                for e in &cfg.estimators {
                    if let Some(prev) = done.get(&(e.to_string(), id.clone(), n, r)) {
                        out.push(prev.clone());
                        continue;
                    }
                    let samples = samples.as_ref().expect("sampled when something is missing");
                    let start = Instant::now();
                    let estimate = run_estimator(*e, samples, model, cfg)?;
                    let wall = if cfg.record_timing { start.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
                    let truth = model.entropy_truth();
                    out.push(ExperimentRecord {
                        estimator: e.to_string(),
                        density: id.clone(),
                        n,
                        replicate: r,
                        seed,
                        estimate,
                        truth,
                        error: estimate - truth,
                        wall_time_ms: wall,
                    });
                }
                Ok(out)
            })
            .collect()
    });
    let mut records = Vec::new();
    for r in results {
        records.extend(r?);
    }
    Ok(records)
}

pub fn run_bench(cfg: &BenchConfig) -> Result<Vec<ExperimentRecord>> {
    run_bench_resume(cfg, &[])
}

/// RFC 4180 CSV with a fixed header and LF line endings.
pub fn write_records<W: Write>(records: &[ExperimentRecord], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records<R: Read>(input: R) -> Result<Vec<ExperimentRecord>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = rdr.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Data(format!("unexpected CSV header {:?}", header.iter().collect::<Vec<_>>())));
    }
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

//! Periodic boundary handling on a density that wraps around the torus.
use entroscope::densities::{make_density, DensitySpec, LipschitzSpec};
use entroscope::estimator::{estimate_entropy, EstimatorConfig};
use entroscope::kernels::BoundaryMode;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> entroscope::Result<()> {
    let model = make_density(&DensitySpec::CosineBump { amplitude: 0.9, d: 2 })?;
    let samples = model.sample(60_000, &mut ChaCha8Rng::seed_from_u64(4))?;
    let shifted = samples.map(|p| p.iter().map(|v| (v + 0.5).rem_euclid(1.0)).collect());
    let mut cfg = EstimatorConfig::new(LipschitzSpec::new(2.0, 2.0, 2, 1.0)?);
    println!("truth {:.6}", model.entropy_truth());
    for boundary in [BoundaryMode::ZeroExtension, BoundaryMode::Periodic] {
        cfg.boundary = boundary;
        let a = estimate_entropy(&samples, &cfg)?.entropy;
        let b = estimate_entropy(&shifted, &cfg)?.entropy;
        println!("{boundary:?}: H {a:.5}, after a half-period shift {b:.5}");
    }
    Ok(())
}

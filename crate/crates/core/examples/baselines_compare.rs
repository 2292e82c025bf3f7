//! All five estimators on one cosine-bump sample.
use entroscope::bench::{run_estimator, BenchConfig};
use entroscope::densities::make_density;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> entroscope::Result<()> {
    let cfg = BenchConfig::from_json(
        r#"{"densities": [{"kind": "cosine_bump", "amplitude": 0.8, "d": 1}],
            "class": {"s": 2, "p": 2, "d": 1, "L": 1},
            "estimators": ["optimal", "plugin", "discrete-mm", "discrete-poly", "resub"],
            "n_grid": [30000]}"#,
    )?;
    let model = make_density(&cfg.densities[0])?;
    let samples = model.sample(30_000, &mut ChaCha8Rng::seed_from_u64(2))?;
    println!("truth {:.6}", model.entropy_truth());
    for &id in &cfg.estimators {
        let h = run_estimator(id, &samples, &model, &cfg)?;
        println!("{:<14} {h:.6}  error {:+.5}", id.as_str(), h - model.entropy_truth());
    }
    Ok(())
}

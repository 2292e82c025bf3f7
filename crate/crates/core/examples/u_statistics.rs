//! Unbiased powers of a mean from power sums, checked against Monte Carlo.
use entroscope::u_stats::{u_statistic, UStatInput};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> entroscope::Result<()> {
    // Values uniform on [0, 2]: the mean is 1, so every power of it is 1.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let reps = 20_000;
    for l in 1..=4 {
        let mut naive = 0.0;
        let mut unbiased = 0.0;
        for _ in 0..reps {
            let v: Vec<f64> = (0..8).map(|_| 2.0 * rng.random::<f64>()).collect();
            naive += (v.iter().sum::<f64>() / 8.0).powi(l as i32);
            unbiased += u_statistic(&UStatInput::new(v), l)?;
        }
        println!("l {l}: mean^l plug-in {:.4}  U-statistic {:.4}  target 1", naive / reps as f64, unbiased / reps as f64);
    }
    Ok(())
}

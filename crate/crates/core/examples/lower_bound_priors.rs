//! Moment-matched prior pair behind the minimax lower bound.
use entroscope::densities::LipschitzSpec;
use entroscope::lower_bound::{entropy_gap, poisson_mixture_tv, tv_bound, two_point_demo, LowerBoundConfig};

fn main() -> entroscope::Result<()> {
    for n in [1_000, 10_000, 100_000] {
        let cfg = LowerBoundConfig::new(n, LipschitzSpec::new(1.0, 1.0, 1, 10.0)?);
        let priors = cfg.build()?;
        let gap = entropy_gap(&priors);
        let tv = poisson_mixture_tv(&priors, n, None);
        println!(
            "n {n:>6}  k {:>2}  eta {:.2e}  gap {gap:.3e}  gap*n*ln n {:.4}  TV {tv:.2e} (bound {:.2e})",
            cfg.k(),
            cfg.eta(),
            gap * n as f64 * cfg.ln_n(),
            tv_bound(n, priors.q, cfg.k(), cfg.d3)
        );
    }
    let two = two_point_demo(4.0, 10_000, 1.0, 1)?;
    println!("two-point: chi2 {:.3e} <= {:.3e}, separation {:.3e}", two.chi_square, two.chi_square_bound, two.separation);
    Ok(())
}

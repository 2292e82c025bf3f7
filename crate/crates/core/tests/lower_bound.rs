mod common;

use entroscope::densities::LipschitzSpec;
use entroscope::lower_bound::{
    build_priors, entropy_gap, lipschitz_membership_check, log_grid, poisson_mixture_tv, poisson_mixture_tv_atoms,
    tv_bound, two_point_demo, LowerBoundConfig,
};

#[test]
fn lp_optimum_is_twice_the_discrete_approximation_error() {
    // With q = 1 the objective is ln t on [η, 1] and the constraints match
    // the first k moments, so by duality the optimum is twice the best
    // degree-k uniform error of ln t on the same grid.
    let (eta, k) = (0.05, 3);
    let priors = build_priors(1, k, eta, 400, 1.0).unwrap();
    let us: Vec<f64> = priors.grid.iter().map(|t| (t - eta) / (1.0 - eta)).collect();
    let e = common::discrete_minimax_lp(|u| (eta + (1.0 - eta) * u).ln(), &us, k);
    assert!((priors.objective - 2.0 * e).abs() < 1e-6 * e, "{} vs {}", priors.objective, 2.0 * e);
}

#[test]
fn moments_match_and_tilt_is_consistent() {
    let priors = build_priors(2, 5, 0.01, 300, 0.001).unwrap();
    assert!(priors.base_residual() <= 1e-8);
    assert!(priors.tilted_residual() <= 1e-8);
    assert!(priors.tilt_moment_error() <= 1e-8);
    for i in 0..2 {
        let mass: f64 = priors.atoms(i).iter().map(|a| a.1).sum();
        assert!((mass - 1.0).abs() < 1e-12);
        assert!(priors.atoms(i).iter().all(|&(x, w)| x >= 0.0 && w >= 0.0));
    }
    assert!(entropy_gap(&priors) > 0.0);
}

#[test]
fn tv_decays_with_the_matched_degree() {
    let n = 10_000;
    let ln_n = (n as f64).ln();
    let eta = 1.0 / 16.0 / (ln_n * ln_n);
    let mut prev = f64::INFINITY;
    for k in [4, 8, 12] {
        let priors = build_priors(1, k, eta, 400, ln_n / n as f64).unwrap();
        let tv = poisson_mixture_tv(&priors, n, None);
        assert!(tv < prev, "k = {k}: {tv} !< {prev}");
        assert!(tv <= tv_bound(n, 1, k, 1.0));
        prev = tv;
    }
}

#[test]
fn scaled_gap_is_stable_in_n() {
    // η k² is held near one, so Δ · n ln n barely moves.
    let gaps: Vec<f64> = [1_000usize, 10_000]
        .iter()
        .map(|&n| {
            let cfg = LowerBoundConfig::new(n, LipschitzSpec::new(1.0, 1.0, 1, 10.0).unwrap());
            let nf = n as f64;
            entropy_gap(&cfg.build().unwrap()) * nf * nf.ln()
        })
        .collect();
    assert!(gaps.iter().all(|&g| g > 0.0));
    assert!((gaps[0] / gaps[1] - 1.0).abs() < 0.5, "{gaps:?}");
}

#[test]
fn cutoff_choice_does_not_move_tv() {
    let a0 = [(0.0, 0.3), (0.002, 0.7)];
    let a1 = [(0.001, 0.5), (0.0015, 0.5)];
    let auto = poisson_mixture_tv_atoms(&a0, &a1, 5000, None);
    let wide = poisson_mixture_tv_atoms(&a0, &a1, 5000, Some(400));
    assert!((auto - wide).abs() < 1e-11);
    assert!(auto > 0.0 && auto <= 1.0);
}

#[test]
fn grid_is_log_spaced() {
    let g = log_grid(0.01, 5);
    assert_eq!(g.len(), 5);
    assert!((g[0] - 0.01).abs() < 1e-15 && (g[4] - 1.0).abs() < 1e-15);
    let r: Vec<f64> = g.windows(2).map(|w| w[1] / w[0]).collect();
    assert!(r.windows(2).all(|w| (w[0] - w[1]).abs() < 1e-12));
}

#[test]
fn membership_moment_condition_mostly_holds() {
    let cfg = LowerBoundConfig::new(10_000, LipschitzSpec::new(1.0, 1.0, 1, 10.0).unwrap());
    let priors = cfg.build().unwrap();
    let r = lipschitz_membership_check(&priors, &cfg.class, cfg.cells(), cfg.bandwidth(), cfg.n, 200, 1).unwrap();
    assert!(r.moment_pass_rate.iter().all(|&p| p >= 0.95), "{r:?}");
    assert!(r.mass_threshold > 0.0);
}

#[test]
fn two_point_separation() {
    let r = two_point_demo(4.0, 10_000, 1.0, 1).unwrap();
    assert!(r.chi_square <= r.chi_square_bound, "{r:?}");
    assert!(r.separation > 0.0);
}

#[test]
fn config_rejects_bad_constants() {
    let mut cfg = LowerBoundConfig::new(1000, LipschitzSpec::new(1.0, 1.0, 1, 10.0).unwrap());
    cfg.d1 = Some(100.0);
    assert!(cfg.validate().is_err());
    cfg.d1 = None;
    cfg.q = Some(0);
    assert!(cfg.validate().is_err());
    let parsed: Result<LowerBoundConfig, _> =
        serde_json::from_str(r#"{"n": 1000, "class": {"s": 1, "p": 1, "d": 1, "L": 10}, "bogus": 1}"#);
    assert!(parsed.is_err());
}

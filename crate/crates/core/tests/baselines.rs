use entroscope::baselines::{
    discrete_reduction_entropy, plugin_bandwidth, plugin_entropy, resubstitution_entropy, tiling_bandwidth,
    DiscreteMode, Histogram,
};
use entroscope::densities::{make_density, DensitySpec, LipschitzSpec, PointSet};
use entroscope::kernels::{BoundaryMode, Kernel, KernelKind};
use entroscope::poly_approx::remez_minimax;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn sample(spec: DensitySpec, n: usize, seed: u64) -> PointSet {
    make_density(&spec).unwrap().sample(n, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

#[test]
fn periodic_plugin_is_translation_invariant() {
    let s = sample(DensitySpec::CosineBump { amplitude: 0.6, d: 1 }, 2000, 3);
    let shifted = s.map(|p| vec![(p[0] + 0.37).rem_euclid(1.0)]);
    for kind in [KernelKind::Box, KernelKind::TriangleProduct] {
        let k = Kernel::new(kind, 1);
        let a = plugin_entropy(&s, k, 0.05, BoundaryMode::Periodic, 32).unwrap();
        let b = plugin_entropy(&shifted, k, 0.05, BoundaryMode::Periodic, 32).unwrap();
        assert!((a - b).abs() < 1e-4, "{kind:?}: {a} vs {b}");
    }
}

#[test]
fn plugin_is_consistent_on_beta() {
    let m = make_density(&DensitySpec::BetaProduct { alpha: 2.0, beta: 2.0, d: 1 }).unwrap();
    let class = LipschitzSpec::new(2.0, 2.0, 1, 1.0).unwrap();
    let n = 40_000;
    let s = m.sample(n, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
    let h = plugin_bandwidth(&class, n);
    let est = plugin_entropy(&s, Kernel::new(KernelKind::Box, 1), h, BoundaryMode::ZeroExtension, 8).unwrap();
    assert!((est - m.entropy_truth()).abs() < 0.03, "{est} vs {}", m.entropy_truth());
}

#[test]
fn resubstitution_is_consistent_on_uniform() {
    let s = sample(DensitySpec::UniformCube { d: 1 }, 20_000, 5);
    let est = resubstitution_entropy(&s, Kernel::new(KernelKind::Box, 1), 0.02, BoundaryMode::Periodic).unwrap();
    assert!(est.abs() < 0.02, "{est}");
}

#[test]
fn discrete_modes_agree_on_a_well_sampled_histogram() {
    let s = sample(DensitySpec::CosineBump { amplitude: 0.5, d: 1 }, 50_000, 9);
    let truth = make_density(&DensitySpec::CosineBump { amplitude: 0.5, d: 1 }).unwrap().entropy_truth();
    let h = tiling_bandwidth(0.03);
    let plugin = discrete_reduction_entropy(&s, h, DiscreteMode::Plugin).unwrap();
    let mm = discrete_reduction_entropy(&s, h, DiscreteMode::MillerMadow).unwrap();
    let poly = discrete_reduction_entropy(&s, h, DiscreteMode::poly()).unwrap();
    assert!(mm > plugin, "Miller-Madow adds a positive correction");
    for v in [plugin, mm, poly] {
        assert!((v - truth).abs() < 0.02, "{v} vs {truth}");
    }
}

#[test]
fn sparse_bins_stay_within_the_approximation_bias() {
    // Every bin falls below the threshold, so each contributes an unbiased
    // estimate of the polynomial and the total bias is at most S times the
    // uniform approximation error.
    let (n, bins) = (2000, 1000);
    let s = sample(DensitySpec::UniformCube { d: 1 }, n, 21);
    let h = 1.0 / bins as f64;
    let half = (n / 2) as f64;
    let threshold = 2.0 * half.ln() / half;
    let k = (0.3 * half.ln()).ceil() as usize;
    let bound = bins as f64 * remez_minimax(2.0 * threshold, k).unwrap().sup_error();
    let poly = discrete_reduction_entropy(&s, h, DiscreteMode::poly()).unwrap();
    assert!(poly.abs() <= bound + 0.05, "poly {poly}, bound {bound}");
    let plugin = discrete_reduction_entropy(&s, h, DiscreteMode::Plugin).unwrap();
    let mm = discrete_reduction_entropy(&s, h, DiscreteMode::MillerMadow).unwrap();
    assert!(mm.abs() < plugin.abs(), "Miller-Madow {mm}, plug-in {plugin}");
}

#[test]
fn histogram_indexes_row_major() {
    let s = PointSet::from_points(2, &[vec![0.1, 0.9], vec![0.6, 0.1], vec![0.6, 0.2], vec![1.0, 1.0]]).unwrap();
    let hist = Histogram::new(&s, 0.5).unwrap();
    assert_eq!(hist.counts(), &[0, 1, 2, 1]);
    assert_eq!(hist.occupied(), 3);
    assert_eq!((hist.bins(), hist.per_axis(), hist.dim(), hist.n()), (4, 2, 2, 4));
}

#[test]
fn histogram_rejects_points_outside_the_cube() {
    let s = PointSet::from_points(1, &[vec![0.5], vec![1.5]]).unwrap();
    assert!(Histogram::new(&s, 0.25).is_err());
}

#[test]
fn tiling_bandwidth_rounds_down_to_a_divisor() {
    assert_eq!(tiling_bandwidth(0.3), 0.25);
    assert_eq!(tiling_bandwidth(2.0), 1.0);
    assert_eq!(tiling_bandwidth(0.1), 0.1);
}

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::densities::{make_density, DensitySpec, LipschitzSpec};
use crate::error::Result;
use crate::estimator::{estimate_entropy, EstimatorConfig};
use crate::kernels::{check_kernel_assumptions, Kernel, KernelKind};
use crate::lower_bound::{build_priors, entropy_gap, poisson_mixture_tv, tv_bound, LowerBoundConfig};
use crate::numeric::neg_xlogx;
use crate::oracle::{
    default_domain, fisher_information, fisher_probe, quadrature_entropy, quadrature_entropy_to_tolerance,
    ProbeSubject,
};
use crate::poly_approx::remez_minimax;
use crate::u_stats::{elementary_symmetric, h1_box_fastpath, h1_nonsmooth, power_sums, UStatInput};

use super::MOMENT_TOLERANCE;

/// Outcome of one self-check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckLine {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn line(name: &'static str, passed: bool, detail: String) -> CheckLine {
    CheckLine { name, passed, detail }
}

/// Runs the oracle suite in a fixed order. Every check is deterministic.
pub fn run_selfcheck() -> Result<Vec<CheckLine>> {
    Ok(vec![
        uniform_quadrature()?,
        closed_form_truths()?,
        remez_equioscillation()?,
        newton_identities(),
        box_fastpath()?,
        kernel_assumptions()?,
        lower_bound_priors()?,
        cosine_fisher()?,
        shrinking_bump_probe()?,
        estimator_on_uniform()?,
    ])
}

fn uniform_quadrature() -> Result<CheckLine> {
    let q = quadrature_entropy(|_| 1.0, &[(0.0, 1.0), (0.0, 1.0)], 64)?;
    Ok(line("uniform quadrature", q.value == 0.0, format!("H = {:e}", q.value)))
}

fn closed_form_truths() -> Result<CheckLine> {
    let specs = [
        DensitySpec::BetaProduct { alpha: 2.0, beta: 2.0, d: 1 },
        DensitySpec::BetaProduct { alpha: 3.0, beta: 5.0, d: 1 },
        DensitySpec::Gaussian { sigma: 0.7, d: 1 },
        DensitySpec::CosineBump { amplitude: 0.5, d: 1 },
    ];
    let mut worst: f64 = 0.0;
    for spec in &specs {
        let model = make_density(spec)?;
        let q = quadrature_entropy_to_tolerance(|x| model.pdf(x), &default_domain(&model), 1e-10, 1 << 16)?;
        worst = worst.max((q.value - model.entropy_truth()).abs());
    }
    Ok(line("closed-form entropies", worst <= 1e-6, format!("max |quadrature - closed form| = {worst:e}")))
}

fn remez_equioscillation() -> Result<CheckLine> {
    let mut worst: f64 = 0.0;
    let mut alternates = true;
    for k in [2usize, 4, 8, 16] {
        let p = remez_minimax(1.0, k)?;
        // Dense scan, clustered at 0 where the error peaks crowd together.
        let m = 20_000;
        let scan = (0..=m)
            .map(|i| {
                let t = (std::f64::consts::FRAC_PI_2 * i as f64 / m as f64).sin().powi(2);
                (p.eval(t) - neg_xlogx(t)).abs()
            })
            .fold(0.0, f64::max);
        worst = worst.max((scan - p.sup_error()).abs() / p.sup_error());
        let errs = p.alternation_errors();
        alternates &= errs.len() == k + 2 && errs.windows(2).all(|w| w[0] * w[1] < 0.0);
        worst = worst.max(1.0 - p.levelled_error() / p.sup_error());
    }
    Ok(line(
        "remez equioscillation",
        alternates && worst <= 1e-6,
        format!("k+2 alternating extrema: {alternates}, worst relative gap {worst:e}"),
    ))
}

fn newton_identities() -> CheckLine {
    let values = [3.0, -1.0, 2.0, 5.0, 1.0, -2.0, 4.0, 1.0, 2.0, -3.0];
    let n = values.len();
    let e = elementary_symmetric(&power_sums(&values, n));
    let mut brute = vec![0.0; n + 1];
    for mask in 0u32..(1 << n) {
        let prod: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| values[i]).product();
        brute[mask.count_ones() as usize] += prod;
    }
    let ok = e == brute;
    CheckLine { name: "newton identities", passed: ok, detail: format!("e_0..e_{n} exact: {ok}") }
}

fn box_fastpath() -> Result<CheckLine> {
    let mut worst: f64 = 0.0;
    for (n, k, h, z) in [(60usize, 4usize, 0.1f64, 3usize), (150, 8, 0.05, 11), (200, 10, 0.02, 0), (40, 6, 0.25, 40)] {
        let poly = remez_minimax(4.0 * 10.0 / (n as f64 * h), k)?;
        let fast = h1_box_fastpath(z, n, h, 1, &poly)?;
        let slow = h1_nonsmooth(&UStatInput::with_zeros(vec![1.0 / h; z], n)?, &poly)?;
        worst = worst.max((fast - slow).abs() / slow.abs().max(1e-300));
    }
    Ok(line("box fast path", worst <= 1e-9, format!("max relative gap {worst:e}")))
}

fn kernel_assumptions() -> Result<CheckLine> {
    let mut failed = Vec::new();
    for kind in [KernelKind::Box, KernelKind::TriangleProduct] {
        for d in [1usize, 2] {
            if !check_kernel_assumptions(&Kernel::new(kind, d), 1e-8)?.all_passed() {
                failed.push(format!("{kind:?}/d{d}"));
            }
        }
    }
    Ok(line("kernel assumptions", failed.is_empty(), format!("failures: {failed:?}")))
}

fn lower_bound_priors() -> Result<CheckLine> {
    let cfg = LowerBoundConfig::new(1000, LipschitzSpec::new(1.0, 1.0, 1, 10.0)?);
    let k = 6;
    let priors = build_priors(cfg.q(), k, cfg.eta(), cfg.grid_m, cfg.dilation())?;
    let residual = priors.base_residual().max(priors.tilted_residual());
    let gap = entropy_gap(&priors);
    let tv = poisson_mixture_tv(&priors, cfg.n, None);
    let bound = tv_bound(cfg.n, priors.q, k, cfg.d3);
    Ok(line(
        "lower-bound priors",
        residual <= MOMENT_TOLERANCE && gap > 0.0 && tv <= bound,
        format!("residual {residual:e}, gap {gap:e}, TV {tv:e} <= {bound:e}"),
    ))
}

fn cosine_fisher() -> Result<CheckLine> {
    let a: f64 = 0.5;
    let model = make_density(&DensitySpec::CosineBump { amplitude: a, d: 1 })?;
    let j = fisher_information(|x| model.pdf(x), |x| model.gradient(x), &[(0.0, 1.0)], 4096)?;
    let exact = 4.0 * std::f64::consts::PI.powi(2) * (1.0 - (1.0 - a * a).sqrt());
    let rel = (j.value - exact).abs() / exact;
    Ok(line("cosine fisher information", rel <= 1e-6, format!("J = {} vs {exact}", j.value)))
}

fn shrinking_bump_probe() -> Result<CheckLine> {
    let subjects: Vec<ProbeSubject> = (2..=6).map(|e| ProbeSubject::shrinking_bump(2f64.powi(-e))).collect();
    let report = fisher_probe(&subjects, 2.0, 1 << 14)?;
    let ratios: Vec<String> = report.rows.iter().map(|r| format!("{:.4}", r.ratio)).collect();
    Ok(line("shrinking-bump fisher ratios", report.all_finite, format!("ratios {}", ratios.join(", "))))
}

fn estimator_on_uniform() -> Result<CheckLine> {
    let model = make_density(&DensitySpec::UniformCube { d: 1 })?;
    let samples = model.sample(3000, &mut ChaCha8Rng::seed_from_u64(7))?;
    let cfg = EstimatorConfig::new(LipschitzSpec::new(2.0, 2.0, 1, 1.0)?);
    let h = estimate_entropy(&samples, &cfg)?.entropy;
    Ok(line("estimator on uniform sample", h.abs() <= 0.05, format!("H = {h:.6}, truth 0")))
}

//! Grid-quadrature ground truth: entropy, Fisher information and
//! second-derivative norms, plus a probe comparing the last two.

use rayon::prelude::*;
use serde::Serialize;

use crate::densities::{DensityModel, DensitySpec, Support};
use crate::error::{Error, Result};
use crate::numeric::{neg_xlogx, pairwise_sum};
use crate::parallel;

/// Per-axis integration bounds.
pub type Domain = [(f64, f64)];

/// Richardson-extrapolated midpoint value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureEstimate {
    pub value: f64,
    /// `|R - M_N|`, the size of the Richardson correction.
    pub error_estimate: f64,
    pub resolution: usize,
    /// Set when a tolerance-driven run ran out of resolution.
    pub flagged: bool,
}

fn check_grid(domain: &Domain, resolution: usize) -> Result<usize> {
    if domain.is_empty() {
        return Err(Error::InvalidParameter("empty domain".into()));
    }
    if domain.iter().any(|&(a, b)| !(a.is_finite() && b.is_finite() && b > a)) {
        return Err(Error::InvalidParameter("domain bounds must be finite with lo < hi".into()));
    }
    if resolution < 2 || !resolution.is_power_of_two() {
        return Err(Error::InvalidParameter(format!("resolution {resolution} must be a power of two ≥ 2")));
    }
    let total = resolution
        .checked_pow(domain.len() as u32)
        .filter(|&t| t <= 1 << 28)
        .ok_or_else(|| Error::InvalidParameter(format!("{resolution}^{} grid points is too many", domain.len())))?;
    Ok(total)
}

/// Midpoint rule of `g` on an `m^d` grid, summed in fixed order.
fn midpoint<G: Fn(&[f64]) -> f64 + Sync>(g: &G, domain: &Domain, m: usize) -> f64 {
    let d = domain.len();
    let total = m.pow(d as u32);
    let steps: Vec<f64> = domain.iter().map(|&(a, b)| (b - a) / m as f64).collect();
    let volume: f64 = steps.iter().product();
    let values: Vec<f64> = parallel::install(|| {
        (0..total)
            .into_par_iter()
            .map_init(
                || vec![0.0; d],
                |x, code| {
                    let mut c = code;
                    for axis in (0..d).rev() {
                        x[axis] = domain[axis].0 + steps[axis] * ((c % m) as f64 + 0.5);
                        c /= m;
                    }
                    g(x)
                },
            )
            .collect()
    });
    pairwise_sum(&values) * volume
}

/// `∫ -f ln f` by the midpoint rule at `resolution` and `resolution/2` per
/// axis, combined by Richardson extrapolation.
pub fn quadrature_entropy<F: Fn(&[f64]) -> f64 + Sync>(
    pdf: F,
    domain: &Domain,
    resolution: usize,
) -> Result<QuadratureEstimate> {
    check_grid(domain, resolution)?;
    let g = |x: &[f64]| neg_xlogx(pdf(x));
    let fine = midpoint(&g, domain, resolution);
    let coarse = midpoint(&g, domain, resolution / 2);
    let value = fine + (fine - coarse) / 3.0;
    Ok(QuadratureEstimate { value, error_estimate: (value - fine).abs(), resolution, flagged: false })
}

/// Doubles the resolution from 64 until the error estimate drops below
/// `tol`; the result is flagged if `max_resolution` is reached first.
pub fn quadrature_entropy_to_tolerance<F: Fn(&[f64]) -> f64 + Sync>(
    pdf: F,
    domain: &Domain,
    tol: f64,
    max_resolution: usize,
) -> Result<QuadratureEstimate> {
    let mut m = 64usize.min(max_resolution.max(2));
    loop {
        let est = quadrature_entropy(&pdf, domain, m)?;
        if est.error_estimate <= tol {
            return Ok(est);
        }
        if m * 2 > max_resolution {
            return Ok(QuadratureEstimate { flagged: true, ..est });
        }
        m *= 2;
    }
}

/// Integration box for a zoo density: the cube it lives on, or `±10σ`
/// around the origin for unbounded support.
pub fn default_domain(model: &DensityModel) -> Vec<(f64, f64)> {
    let d = model.dim();
    match model.support() {
        Support::Cube { lo, hi } => vec![(lo, hi); d],
        Support::Whole => {
            let r = 10.0 * gaussian_scale(model.spec());
            vec![(-r, r); d]
        }
    }
}

fn gaussian_scale(spec: &DensitySpec) -> f64 {
    match spec {
        DensitySpec::Gaussian { sigma, .. } => *sigma,
        DensitySpec::Scaled { base, factor } => factor * gaussian_scale(base),
        _ => 1.0,
    }
}

/// Fisher information with its divergence diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FisherEstimate {
    /// `+∞` when the grid sums keep growing with resolution.
    pub value: f64,
    /// Sums at `N/4`, `N/2` and `N`.
    pub sums: [f64; 3],
    /// Mass of the cells skipped because `f < 1e-12`.
    pub excluded_mass: f64,
    pub divergent: bool,
}

const FISHER_FLOOR: f64 = 1e-12;

/// `J(f) = ∫ |∇f|² / f` by the midpoint rule at three resolutions. Cells
/// with `f < 1e-12` are skipped and their mass recorded. If the last
/// increment is more than half the previous one (logarithmic or worse
/// growth) the integral is declared divergent.
pub fn fisher_information<F, G>(pdf: F, gradient: G, domain: &Domain, resolution: usize) -> Result<FisherEstimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
    G: Fn(&[f64]) -> Vec<f64> + Sync,
{
    check_grid(domain, resolution)?;
    if resolution < 8 {
        return Err(Error::InvalidParameter("Fisher quadrature needs resolution ≥ 8".into()));
    }
    let integrand = |x: &[f64]| {
        let f = pdf(x);
        if f < FISHER_FLOOR {
            0.0
        } else {
            gradient(x).iter().map(|g| g * g).sum::<f64>() / f
        }
    };
    let excluded = |x: &[f64]| {
        let f = pdf(x);
        if f < FISHER_FLOOR {
            f.max(0.0)
        } else {
            0.0
        }
    };
    let sums = [
        midpoint(&integrand, domain, resolution / 4),
        midpoint(&integrand, domain, resolution / 2),
        midpoint(&integrand, domain, resolution),
    ];
    let d1 = sums[1] - sums[0];
    let d2 = sums[2] - sums[1];
    let divergent = d2 > 1e-6 * sums[2].abs().max(1.0) && d2 > 0.5 * d1;
    Ok(FisherEstimate {
        value: if divergent { f64::INFINITY } else { sums[2] },
        sums,
        excluded_mass: midpoint(&excluded, domain, resolution),
        divergent,
    })
}

/// `Σ_i ‖∂_ii f‖_p` on the domain; `p = ∞` takes grid maxima.
pub fn second_derivative_norm<H: Fn(&[f64]) -> Vec<f64> + Sync>(
    hessian_diag: H,
    p: f64,
    domain: &Domain,
    resolution: usize,
) -> Result<f64> {
    check_grid(domain, resolution)?;
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!("p = {p} must be at least 1")));
    }
    let d = domain.len();
    let mut total = 0.0;
    for axis in 0..d {
        if p.is_infinite() {
            let m = resolution;
            let steps: Vec<f64> = domain.iter().map(|&(a, b)| (b - a) / m as f64).collect();
            let max = (0..m.pow(d as u32))
                .map(|code| {
                    let mut c = code;
                    let mut x = vec![0.0; d];
                    for ax in (0..d).rev() {
                        x[ax] = domain[ax].0 + steps[ax] * ((c % m) as f64 + 0.5);
                        c /= m;
                    }
                    hessian_diag(&x)[axis].abs()
                })
                .fold(0.0, f64::max);
            total += max;
        } else {
            let g = |x: &[f64]| hessian_diag(x)[axis].abs().powf(p);
            total += midpoint(&g, domain, resolution).powf(1.0 / p);
        }
    }
    Ok(total)
}

type Field = Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type Scalar = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A density handed to the Fisher probe.
pub struct ProbeSubject {
    pub name: String,
    pub domain: Vec<(f64, f64)>,
    /// Why the subject is outside the probe's hypotheses, if it is.
    pub exclusion: Option<String>,
    pdf: Scalar,
    gradient: Field,
    hessian_diag: Field,
}

impl std::fmt::Debug for ProbeSubject {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProbeSubject")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("exclusion", &self.exclusion)
            .finish()
    }
}

impl ProbeSubject {
    pub fn new(name: impl Into<String>, domain: Vec<(f64, f64)>, pdf: Scalar, gradient: Field, hessian_diag: Field) -> Self {
        Self { name: name.into(), domain, exclusion: None, pdf, gradient, hessian_diag }
    }

    pub fn excluded(mut self, reason: impl Into<String>) -> Self {
        self.exclusion = Some(reason.into());
        self
    }

    /// Wraps a zoo density. Densities whose zero extension is not C¹ are
    /// marked excluded; the uniform and cosine families are taken in the
    /// periodic sense, where they are smooth.
    pub fn from_model(model: DensityModel) -> Self {
        let domain = default_domain(&model);
        let exclusion = smoothness_exclusion(model.spec());
        let name = model.id();
        let m1 = std::sync::Arc::new(model);
        let (m2, m3) = (m1.clone(), m1.clone());
        let mut s = Self::new(
            name,
            domain,
            Box::new(move |x| m1.pdf(x)),
            Box::new(move |x| m2.gradient(x)),
            Box::new(move |x| m3.hessian_diag(x)),
        );
        s.exclusion = exclusion;
        s
    }

    /// `f_h(x) = h^{-1} g((x - 1/2)/h + 1/2)` for the quartic bump
    /// `g(u) = 30u²(1-u)²` on `[0,1]`.
    pub fn shrinking_bump(h: f64) -> Self {
        let u = move |x: f64| (x - 0.5) / h + 0.5;
        let inside = |u: f64| (0.0..=1.0).contains(&u);
        Self::new(
            format!("quartic_bump_h{h}"),
            vec![(0.0, 1.0)],
            Box::new(move |x| {
                let v = u(x[0]);
                if inside(v) {
                    30.0 * v * v * (1.0 - v) * (1.0 - v) / h
                } else {
                    0.0
                }
            }),
            Box::new(move |x| {
                let v = u(x[0]);
                vec![if inside(v) { 60.0 * v * (1.0 - v) * (1.0 - 2.0 * v) / (h * h) } else { 0.0 }]
            }),
            Box::new(move |x| {
                let v = u(x[0]);
                vec![if inside(v) { 60.0 * (1.0 - 6.0 * v + 6.0 * v * v) / (h * h * h) } else { 0.0 }]
            }),
        )
    }

    pub fn pdf(&self, x: &[f64]) -> f64 {
        (self.pdf)(x)
    }
}

fn smoothness_exclusion(spec: &DensitySpec) -> Option<String> {
    match spec {
        DensitySpec::BetaProduct { alpha, beta, .. } if alpha.min(*beta) <= 2.0 => Some(format!(
            "Beta({alpha},{beta}) extended by zero is not C¹: its derivative jumps at the cube boundary"
        )),
        DensitySpec::Scaled { base, .. } => smoothness_exclusion(base),
        _ => None,
    }
}

/// One line of the probe table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeRow {
    pub name: String,
    pub fisher: f64,
    pub second_norm: f64,
    /// `J / Σ‖∂_ii f‖_p`, with `0/0 := 0`.
    pub ratio: f64,
    pub excluded: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub p: f64,
    pub rows: Vec<ProbeRow>,
    /// Largest ratio among included subjects: an empirical witness for
    /// the constant.
    pub max_ratio: f64,
    pub all_finite: bool,
}

/// Ratio table `J(f) / Σ_i ‖∂_ii f‖_p`. Excluded subjects are listed with
/// their values but do not enter `max_ratio` or `all_finite`.
pub fn fisher_probe(subjects: &[ProbeSubject], p: f64, resolution: usize) -> Result<ProbeReport> {
    let mut rows = Vec::with_capacity(subjects.len());
    let mut max_ratio: f64 = 0.0;
    let mut all_finite = true;
    for s in subjects {
        let fisher = fisher_information(&s.pdf, &s.gradient, &s.domain, resolution)?.value;
        let second_norm = second_derivative_norm(&s.hessian_diag, p, &s.domain, resolution)?;
        let ratio = probe_ratio(fisher, second_norm);
        if s.exclusion.is_none() {
            all_finite &= ratio.is_finite();
            max_ratio = max_ratio.max(ratio);
        }
        rows.push(ProbeRow { name: s.name.clone(), fisher, second_norm, ratio, excluded: s.exclusion.clone() });
    }
    Ok(ProbeReport { p, rows, max_ratio, all_finite })
}

/// `J / N` with the `0/0 = 0` convention.
pub fn probe_ratio(fisher: f64, second_norm: f64) -> f64 {
    if fisher == 0.0 && second_norm == 0.0 {
        0.0
    } else {
        fisher / second_norm
    }
}

//! Constructive side of the minimax lower bound.
//!
//! Two probability measures on `[η, 1]` that agree on the moments
//! `t^{-q+1}, …, t^k` but differ as much as possible in `∫ t^{1-q} ln t`
//! come out of a discretised linear program. Tilting by `(η/t)^q` (with the
//! leftover mass moved to an atom at zero) turns them into measures with
//! matching moments `0..=q+k`, which are then dilated onto `[0, d₃ ln n / n]`.
//! Poisson mixtures over the two dilated priors are nearly indistinguishable
//! while their `t ln t` functionals are separated.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::densities::LipschitzSpec;
use crate::error::{Error, Result};
use crate::linprog::{maximize, LinearProgram};
use crate::numeric::{compensated_sum, integrate_box};
use crate::parallel;

/// A moment-matched pair, before and after tilting and dilation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentMatchedPriors {
    pub q: usize,
    pub k: usize,
    pub eta: f64,
    /// Support grid on `[η, 1]`.
    pub grid: Vec<f64>,
    /// Weights of `ν₀` and `ν₁` on the grid.
    pub nu: [Vec<f64>; 2],
    /// Atom-at-zero masses of the tilted measures.
    pub atom: [f64; 2],
    /// Grid weights of the tilted measures.
    pub tilted: [Vec<f64>; 2],
    /// Scale applied to the tilted measures.
    pub dilation: f64,
    /// LP optimum `∫φ_q dν₁ - ∫φ_q dν₀`.
    pub objective: f64,
}

impl MomentMatchedPriors {
    /// Tilts and dilates a given pair of grid measures.
    pub fn from_weights(q: usize, k: usize, eta: f64, grid: Vec<f64>, nu: [Vec<f64>; 2], dilation: f64) -> Result<Self> {
        validate_shape(q, eta)?;
        if nu.iter().any(|w| w.len() != grid.len()) {
            return Err(Error::InvalidParameter("weight vectors must match the grid".into()));
        }
        if grid.iter().any(|&t| !(t >= eta * (1.0 - 1e-12) && t <= 1.0 + 1e-12)) {
            return Err(Error::InvalidParameter(format!("grid leaves [{eta}, 1]")));
        }
        if !(dilation > 0.0 && dilation.is_finite()) {
            return Err(Error::InvalidParameter(format!("dilation {dilation} must be positive")));
        }
        let mut tilted: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
        let mut atom = [0.0; 2];
        for i in 0..2 {
            tilted[i] = grid.iter().zip(&nu[i]).map(|(&t, &w)| w * (eta / t).powi(q as i32)).collect();
            atom[i] = (1.0 - compensated_sum(tilted[i].iter().copied())).max(0.0);
        }
        let phi = |t: f64| t.powi(1 - q as i32) * t.ln();
        let objective = compensated_sum(grid.iter().enumerate().map(|(j, &t)| phi(t) * (nu[1][j] - nu[0][j])));
        Ok(Self { q, k, eta, grid, nu, atom, tilted, dilation, objective })
    }

    /// `max_l |∫t^l dν₁ - ∫t^l dν₀|` over `l = -q+1..=k`.
    pub fn base_residual(&self) -> f64 {
        let lo = 1 - self.q as i32;
        (lo..=self.k as i32)
            .map(|l| {
                compensated_sum(self.grid.iter().enumerate().map(|(j, &t)| t.powi(l) * (self.nu[1][j] - self.nu[0][j])))
                    .abs()
            })
            .fold(0.0, f64::max)
    }

    /// `∫ t^l dμ̃_i`, the atom counting only for `l = 0`.
    pub fn tilted_moment(&self, i: usize, l: usize) -> f64 {
        let grid_part = compensated_sum(self.grid.iter().zip(&self.tilted[i]).map(|(&t, &w)| w * t.powi(l as i32)));
        if l == 0 {
            grid_part + self.atom[i]
        } else {
            grid_part
        }
    }

    /// `max_l |∫t^l dμ̃₁ - ∫t^l dμ̃₀|` over `l = 0..=q+k`.
    pub fn tilted_residual(&self) -> f64 {
        (0..=self.q + self.k)
            .map(|l| (self.tilted_moment(1, l) - self.tilted_moment(0, l)).abs())
            .fold(0.0, f64::max)
    }

    /// `max_i |∫t^q dμ̃_i - η^q|`.
    pub fn tilt_moment_error(&self) -> f64 {
        let target = self.eta.powi(self.q as i32);
        (0..2).map(|i| (self.tilted_moment(i, self.q) - target).abs()).fold(0.0, f64::max)
    }

    /// Atoms `(location, weight)` of the dilated prior `μ_i`, zero first.
    pub fn atoms(&self, i: usize) -> Vec<(f64, f64)> {
        std::iter::once((0.0, self.atom[i]))
            .chain(self.grid.iter().zip(&self.tilted[i]).map(|(&t, &w)| (self.dilation * t, w)))
            .collect()
    }

    /// `∫ t dμ_i`.
    pub fn mean(&self, i: usize) -> f64 {
        self.dilation * self.tilted_moment(i, 1)
    }

    /// `∫ t^r dμ_i` for real `r > 0`.
    pub fn abs_moment(&self, i: usize, r: f64) -> f64 {
        compensated_sum(self.atoms(i).into_iter().map(|(x, w)| w * x.powf(r)))
    }
}

fn validate_shape(q: usize, eta: f64) -> Result<()> {
    if q == 0 {
        return Err(Error::InvalidParameter("q must be at least 1".into()));
    }
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::InvalidParameter(format!("η = {eta} must lie in (0, 1)")));
    }
    Ok(())
}

/// `m` log-spaced points from `η` to 1.
pub fn log_grid(eta: f64, m: usize) -> Vec<f64> {
    let r = -eta.ln();
    (0..m)
        .map(|i| if i + 1 == m { 1.0 } else { eta * (r * i as f64 / (m - 1) as f64).exp() })
        .collect()
}

const MOMENT_SLACK: f64 = 1e-10;

/// Solves the moment-matching LP on a log grid of `max(grid_m, 10(k+q))`
/// points and builds the tilted, dilated pair.
///
/// Polynomial moments are imposed through Chebyshev polynomials on
/// `[η, 1]` and the negative powers through `(η/t)^l`; both span the same
/// constraint set as the raw monomials but keep the rows well scaled.
pub fn build_priors(q: usize, k: usize, eta: f64, grid_m: usize, dilation: f64) -> Result<MomentMatchedPriors> {
    validate_shape(q, eta)?;
    let m = grid_m.max(10 * (k + q)).max(2);
    let grid = log_grid(eta, m);
    let phi = |t: f64| t.powi(1 - q as i32) * t.ln();

    // Each moment constraint becomes a pair of inequalities with slack
    // `MOMENT_SLACK`; the exact equalities are massively degenerate.
    let moments = (q - 1) + k;
    let rows = 2 + 2 * moments;
    let cols = 2 * m + 2 * moments;
    let mut a = DMatrix::zeros(rows, cols);
    let mut c = DVector::zeros(cols);
    let mut b = DVector::zeros(rows);
    b[0] = 1.0;
    b[1] = 1.0;
    for r in 0..moments {
        let (up, down) = (2 + 2 * r, 3 + 2 * r);
        b[up] = MOMENT_SLACK;
        b[down] = MOMENT_SLACK;
        a[(up, 2 * m + 2 * r)] = 1.0;
        a[(down, 2 * m + 2 * r + 1)] = 1.0;
    }
    let mut psi = Vec::with_capacity(moments);
    for (j, &t) in grid.iter().enumerate() {
        a[(0, j)] = 1.0;
        a[(1, m + j)] = 1.0;
        psi.clear();
        psi.extend((1..q).map(|l| (eta / t).powi(l as i32)));
        let x = (2.0 * t - 1.0 - eta) / (1.0 - eta);
        let (mut t_prev, mut t_cur) = (1.0, x);
        for deg in 1..=k {
            if deg > 1 {
                let next = 2.0 * x * t_cur - t_prev;
                t_prev = t_cur;
                t_cur = next;
            }
            psi.push(t_cur);
        }
        for (r, &v) in psi.iter().enumerate() {
            let (up, down) = (2 + 2 * r, 3 + 2 * r);
            a[(up, j)] = -v;
            a[(up, m + j)] = v;
            a[(down, j)] = v;
            a[(down, m + j)] = -v;
        }
        c[j] = -phi(t);
        c[m + j] = phi(t);
    }
    let sol = maximize(&LinearProgram { a, b, c })?;
    let clean = |w: &[f64]| -> Vec<f64> {
        let w: Vec<f64> = w.iter().map(|v| v.max(0.0)).collect();
        let s = compensated_sum(w.iter().copied());
        w.iter().map(|v| v / s).collect()
    };
    let nu = [clean(&sol.x[..m]), clean(&sol.x[m..2 * m])];
    let priors = MomentMatchedPriors::from_weights(q, k, eta, grid, nu, dilation)?;
    if !(priors.objective > 0.0) {
        return Err(Error::LinearProgram(format!(
            "optimum {} is not positive; grid of {m} points too coarse",
            priors.objective
        )));
    }
    Ok(priors)
}

/// `Δ = ∫ t ln t dμ₁ - ∫ t ln t dμ₀` over the dilated priors.
pub fn entropy_gap(priors: &MomentMatchedPriors) -> f64 {
    let side = |i: usize| compensated_sum(priors.atoms(i).into_iter().map(|(x, w)| if x > 0.0 { w * x * x.ln() } else { 0.0 }));
    side(1) - side(0)
}

/// Poisson mixture `∫ Poi(nλ) μ(dλ)` at `0..=cutoff`.
fn mixture_pmf(atoms: &[(f64, f64)], n: f64, cutoff: usize) -> Vec<f64> {
    let mut pmf = vec![0.0; cutoff + 1];
    for &(lambda, w) in atoms {
        if w == 0.0 {
            continue;
        }
        let mu = n * lambda;
        if mu == 0.0 {
            pmf[0] += w;
            continue;
        }
        let ln_mu = mu.ln();
        for (j, p) in pmf.iter_mut().enumerate() {
            *p += w * (j as f64 * ln_mu - mu - ln_gamma(j as f64 + 1.0)).exp();
        }
    }
    pmf
}

/// Smallest cutoff with Poisson tail mass beyond it below `1e-12` for
/// every mean up to `mu_max`.
fn auto_cutoff(mu_max: f64) -> usize {
    let mut j = (mu_max.ceil() as usize).max(1);
    loop {
        // Chernoff: P(X > j) ≤ exp(-μ) (eμ/j)^j for j > μ.
        let j_f = j as f64;
        if j_f > mu_max {
            let bound = -mu_max + j_f * (1.0 + mu_max.max(1e-300).ln() - j_f.ln());
            if bound < 12.0 * -std::f64::consts::LN_10 {
                return j;
            }
        }
        j += 1;
    }
}

/// Total variation between the two one-cell histogram laws
/// `γ_i = ∫ Poi(nλ) μ_i(dλ)`, as half the ℓ₁ distance on `0..=cutoff` plus
/// the tail mass beyond it. `cutoff = None` picks it automatically.
pub fn poisson_mixture_tv(priors: &MomentMatchedPriors, n: usize, cutoff: Option<usize>) -> f64 {
    let a0 = priors.atoms(0);
    let a1 = priors.atoms(1);
    poisson_mixture_tv_atoms(&a0, &a1, n, cutoff)
}

/// [`poisson_mixture_tv`] for arbitrary finite priors.
pub fn poisson_mixture_tv_atoms(a0: &[(f64, f64)], a1: &[(f64, f64)], n: usize, cutoff: Option<usize>) -> f64 {
    let n = n as f64;
    let mu_max = a0.iter().chain(a1).map(|a| a.0 * n).fold(0.0, f64::max);
    let cutoff = cutoff.unwrap_or_else(|| auto_cutoff(mu_max));
    let p0 = mixture_pmf(a0, n, cutoff);
    let p1 = mixture_pmf(a1, n, cutoff);
    let l1 = compensated_sum(p0.iter().zip(&p1).map(|(x, y)| (x - y).abs()));
    let tail = |p: &[f64], atoms: &[(f64, f64)]| {
        let total = compensated_sum(atoms.iter().map(|a| a.1));
        (total - compensated_sum(p.iter().copied())).max(0.0)
    };
    (0.5 * l1 + 0.5 * (tail(&p0, a0) + tail(&p1, a1))).min(1.0)
}

/// `(2e d₃ ln n / (q+k))^{q+k}`.
pub fn tv_bound(n: usize, q: usize, k: usize, d3: f64) -> f64 {
    let m = (q + k) as f64;
    (2.0 * std::f64::consts::E * d3 * (n as f64).ln() / m).powf(m)
}

/// Tunable constants of the construction; the theory only asks for them to
/// be small or large enough.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LowerBoundConfig {
    pub n: usize,
    /// Smoothness class; `q = ⌈p⌉`.
    pub class: LipschitzSpec,
    /// Matched degree; defaults to `⌈d₂ ln n⌉`.
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub q: Option<usize>,
    #[serde(default = "default_d2")]
    pub d2: f64,
    #[serde(default = "default_d3")]
    pub d3: f64,
    /// Defaults to `1/d₂²`.
    #[serde(default)]
    pub d1: Option<f64>,
    /// Bandwidth constant of the bump family.
    #[serde(default = "default_d0")]
    pub d0: f64,
    #[serde(default = "default_grid")]
    pub grid_m: usize,
    #[serde(default = "default_draws")]
    pub draws: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_d2() -> f64 {
    4.0
}
fn default_d3() -> f64 {
    1.0
}
fn default_d0() -> f64 {
    1.0
}
fn default_grid() -> usize {
    400
}
fn default_draws() -> usize {
    200
}

impl LowerBoundConfig {
    pub fn new(n: usize, class: LipschitzSpec) -> Self {
        Self {
            n,
            class,
            k: None,
            q: None,
            d2: default_d2(),
            d3: default_d3(),
            d1: None,
            d0: default_d0(),
            grid_m: default_grid(),
            draws: default_draws(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.class.validate().map_err(|e| Error::Config(e.to_string()))?;
        if self.n < 3 {
            return Err(Error::Config(format!("n = {} too small", self.n)));
        }
        for (name, v) in [("d0", self.d0), ("d2", self.d2), ("d3", self.d3), ("d1", self.d1())] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} = {v} must be positive")));
            }
        }
        if self.q == Some(0) {
            return Err(Error::Config("q must be at least 1".into()));
        }
        let eta = self.eta();
        if !(eta > 0.0 && eta < 1.0) {
            return Err(Error::Config(format!("η = {eta} outside (0, 1); lower d1")));
        }
        Ok(())
    }

    pub fn ln_n(&self) -> f64 {
        (self.n as f64).ln()
    }

    pub fn q(&self) -> usize {
        self.q.unwrap_or(self.class.p.ceil() as usize).max(1)
    }

    pub fn k(&self) -> usize {
        self.k.unwrap_or((self.d2 * self.ln_n()).ceil() as usize)
    }

    pub fn d1(&self) -> f64 {
        self.d1.unwrap_or(1.0 / (self.d2 * self.d2))
    }

    /// `η = d₁ / (ln n)²`.
    pub fn eta(&self) -> f64 {
        self.d1() / (self.ln_n() * self.ln_n())
    }

    /// `d₃ ln n / n`.
    pub fn dilation(&self) -> f64 {
        self.d3 * self.ln_n() / self.n as f64
    }

    /// `h = (d₀ L n ln n)^{-1/(s+d)}`.
    pub fn bandwidth(&self) -> f64 {
        let c = &self.class;
        (self.d0 * c.radius * self.n as f64 * self.ln_n()).powf(-1.0 / (c.s + c.d as f64))
    }

    /// `S = (2h)^{-d}`, rounded to the nearest positive integer.
    pub fn cells(&self) -> usize {
        ((2.0 * self.bandwidth()).powi(-(self.class.d as i32))).round().max(1.0) as usize
    }

    pub fn build(&self) -> Result<MomentMatchedPriors> {
        self.validate()?;
        build_priors(self.q(), self.k(), self.eta(), self.grid_m, self.dilation())
    }
}

/// Monte Carlo pass rates of the two membership conditions on the random
/// coefficient vector `P ~ μ_i^{⊗S}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MembershipReport {
    pub cells: usize,
    pub draws: usize,
    /// `C₁ = n ln n · max_i (∫t^q dμ_i)^{1/q}`.
    pub c1: f64,
    /// Common mean `α = ∫t dμ_i`.
    pub alpha: f64,
    /// `(2C₁/(n ln n))^p`.
    pub moment_threshold: f64,
    /// `1 / (n h^d (ln n)^3 ln L)`.
    pub mass_threshold: f64,
    /// Per prior: share of draws with `(1/S) Σ p_i^p` under the threshold.
    pub moment_pass_rate: [f64; 2],
    /// Per prior: share of draws with `|Σ (p_i - α)|` under the threshold.
    pub mass_pass_rate: [f64; 2],
    /// Per prior: share of draws passing both.
    pub joint_pass_rate: [f64; 2],
}

/// Samples `P ~ μ_i^{⊗S}` and checks the moment condition and the
/// mass-perturbation condition that put `f_P` in the smoothness class.
pub fn lipschitz_membership_check(
    priors: &MomentMatchedPriors,
    spec: &LipschitzSpec,
    cells: usize,
    h: f64,
    n: usize,
    draws: usize,
    seed: u64,
) -> Result<MembershipReport> {
    spec.validate()?;
    if cells == 0 || draws == 0 {
        return Err(Error::InvalidParameter("cells and draws must be positive".into()));
    }
    if !(h > 0.0) || n < 3 {
        return Err(Error::InvalidParameter("need h > 0 and n ≥ 3".into()));
    }
    let nf = n as f64;
    let ln_n = nf.ln();
    let q = priors.q as f64;
    let c1 = nf * ln_n * (0..2).map(|i| priors.abs_moment(i, q).powf(1.0 / q)).fold(0.0, f64::max);
    let alpha = priors.mean(0);
    let p = spec.p;
    let moment_threshold = (2.0 * c1 / (nf * ln_n)).powf(p);
    let ln_l = spec.radius.ln();
    let mass_threshold = if ln_l > 0.0 {
        1.0 / (nf * h.powi(spec.d as i32) * ln_n.powi(3) * ln_l)
    } else {
        f64::INFINITY
    };
    let mut moment_pass_rate = [0.0; 2];
    let mut mass_pass_rate = [0.0; 2];
    let mut joint_pass_rate = [0.0; 2];
    for i in 0..2 {
        let atoms = priors.atoms(i);
        let cdf: Vec<f64> = atoms
            .iter()
            .scan(0.0, |acc, a| {
                *acc += a.1;
                Some(*acc)
            })
            .collect();
        let total = *cdf.last().expect("atoms nonempty");
        let outcomes: Vec<(bool, bool)> = parallel::install(|| {
            (0..draws)
                .into_par_iter()
                .map(|r| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((i as u64) << 62) ^ r as u64);
                    let mut pow_sum = Vec::with_capacity(cells);
                    let mut dev = Vec::with_capacity(cells);
                    for _ in 0..cells {
                        let u = rng.random::<f64>() * total;
                        let j = cdf.partition_point(|&c| c <= u).min(atoms.len() - 1);
                        let x = atoms[j].0;
                        pow_sum.push(x.powf(p));
                        dev.push(x - alpha);
                    }
                    let moment_ok = compensated_sum(pow_sum) / cells as f64 <= moment_threshold;
                    let mass_ok = compensated_sum(dev).abs() <= mass_threshold;
                    (moment_ok, mass_ok)
                })
                .collect()
        });
        let rate = |f: &dyn Fn(&(bool, bool)) -> bool| outcomes.iter().filter(|o| f(o)).count() as f64 / draws as f64;
        moment_pass_rate[i] = rate(&|o| o.0);
        mass_pass_rate[i] = rate(&|o| o.1);
        joint_pass_rate[i] = rate(&|o| o.0 && o.1);
    }
    Ok(MembershipReport {
        cells,
        draws,
        c1,
        alpha,
        moment_threshold,
        mass_threshold,
        moment_pass_rate,
        mass_pass_rate,
        joint_pass_rate,
    })
}

/// Outcome of the two-point construction behind the parametric term.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoPointReport {
    pub dilation: f64,
    pub epsilon: f64,
    /// `χ²(f₁ ‖ f₀)` by quadrature.
    pub chi_square: f64,
    /// `ε²`, the data-processing bound.
    pub chi_square_bound: f64,
    /// `|H(f₀) - H(f₁)|`.
    pub separation: f64,
    /// `ε ln A`, the predicted order of the separation.
    pub separation_scale: f64,
}

/// Uniform base density on `[1/4, 3/4]^d`; `g` is its dilation by `A`
/// about the centre. Compares `f₀ = (f+g)/2` with
/// `f₁ = (1-ε)f/2 + (1+ε)g/2`.
pub fn two_point_with(a: f64, epsilon: f64, d: usize) -> Result<TwoPointReport> {
    if !(a >= 1.0 && a.is_finite()) {
        return Err(Error::InvalidParameter(format!("dilation A = {a} must be at least 1")));
    }
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::InvalidParameter(format!("ε = {epsilon} outside [0, 1)")));
    }
    if !(1..=2).contains(&d) {
        return Err(Error::InvalidParameter(format!("two-point quadrature supports d ≤ 2, got {d}")));
    }
    let base = 2f64.powi(d as i32);
    let inside = |x: &[f64], half: f64| x.iter().all(|&v| (v - 0.5).abs() <= half);
    let f = |x: &[f64]| if inside(x, 0.25) { base } else { 0.0 };
    let g = |x: &[f64]| if inside(x, 0.25 / a) { base * a.powi(d as i32) } else { 0.0 };
    let f0 = |x: &[f64]| 0.5 * (f(x) + g(x));
    let f1 = |x: &[f64]| 0.5 * (1.0 - epsilon) * f(x) + 0.5 * (1.0 + epsilon) * g(x);
    let cuts = vec![0.5 - 0.25 / a, 0.5 + 0.25 / a];
    let breaks = vec![cuts; d];
    let lo = vec![0.25; d];
    let hi = vec![0.75; d];
    let tol = 1e-13;
    let chi_square = integrate_box(
        |x| {
            let p0 = f0(x);
            if p0 > 0.0 {
                let diff = f1(x) - p0;
                diff * diff / p0
            } else {
                0.0
            }
        },
        &lo,
        &hi,
        &breaks,
        tol,
    )?;
    let ent = |p: &dyn Fn(&[f64]) -> f64| integrate_box(|x| crate::numeric::neg_xlogx(p(x)), &lo, &hi, &breaks, tol);
    let separation = (ent(&f0)? - ent(&f1)?).abs();
    Ok(TwoPointReport {
        dilation: a,
        epsilon,
        chi_square,
        chi_square_bound: epsilon * epsilon,
        separation,
        separation_scale: epsilon * a.ln(),
    })
}

/// Two-point construction at `ε = 1/√n` and `A = min(L^{1/(s+d)}, n^{1/(4d)})`.
pub fn two_point_demo(l: f64, n: usize, s: f64, d: usize) -> Result<TwoPointReport> {
    if !(l >= 1.0) || n == 0 || !(s > 0.0) {
        return Err(Error::InvalidParameter("need L ≥ 1, n ≥ 1 and s > 0".into()));
    }
    let nf = n as f64;
    let a = l.powf(1.0 / (s + d as f64)).min(nf.powf(1.0 / (4.0 * d as f64)));
    two_point_with(a, 1.0 / nf.sqrt(), d)
}

//! Test-density zoo.
//!
//! Every density here is evaluable, has a ground-truth entropy and a
//! seeded sampler. The bump-mixture family is the parametric submodel used
//! in minimax lower-bound constructions: `S` scaled copies of a bump
//! template `g` tiling the inner cube `[1/4, 3/4]^d`, plus a background
//! density `w` living on the frame `[0,1]^d \ [1/4,3/4]^d`.
//!
//! Both templates are built from the quartic bump `30 u^2 (1-u)^2` on
//! `[0,1]`, whose CDF is the quintic smoothstep `10u^3 - 15u^4 + 6u^5`.
//! The background is the uniform mixture of that bump over the
//! `4^d - 2^d` frame cells of edge 1/4.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use statrs::function::beta::{beta_reg, ln_beta};
use statrs::function::gamma::digamma;

use crate::error::{Error, Result};

/// Flat, row-major list of points in `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
}

impl PointSet {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Data("dimension must be positive".into()));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::Data(format!(
                "{} coordinates do not split into points of dimension {dim}",
                coords.len()
            )));
        }
        Ok(Self { dim, coords })
    }

    pub fn from_points(dim: usize, points: &[Vec<f64>]) -> Result<Self> {
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in points {
            if p.len() != dim {
                return Err(Error::Data(format!(
                    "point has {} coordinates, expected {dim}",
                    p.len()
                )));
            }
            coords.extend_from_slice(p);
        }
        Ok(Self { dim, coords })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Contiguous index block `[start, end)`.
    pub fn slice(&self, start: usize, end: usize) -> PointSet {
        PointSet { dim: self.dim, coords: self.coords[start * self.dim..end * self.dim].to_vec() }
    }

    pub fn map<F: Fn(&[f64]) -> Vec<f64>>(&self, f: F) -> PointSet {
        let coords = self.iter().flat_map(&f).collect();
        PointSet { dim: self.dim, coords }
    }

    pub fn filter<F: Fn(&[f64]) -> bool>(&self, keep: F) -> PointSet {
        let coords = self.iter().filter(|p| keep(p)).flatten().copied().collect();
        PointSet { dim: self.dim, coords }
    }
}

/// Smoothness class `Lip_{s,p,d}(L)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LipschitzSpec {
    pub s: f64,
    pub p: f64,
    pub d: usize,
    #[serde(rename = "L")]
    pub radius: f64,
}

impl LipschitzSpec {
    pub fn new(s: f64, p: f64, d: usize, radius: f64) -> Result<Self> {
        let spec = Self { s, p, d, radius };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s > 0.0 && self.s <= 2.0) {
            return Err(Error::InvalidParameter(format!(
                "smoothness s = {} outside (0, 2]",
                self.s
            )));
        }
        if !(self.p >= 1.0) {
            return Err(Error::InvalidParameter(format!("norm parameter p = {} < 1", self.p)));
        }
        if self.d == 0 {
            return Err(Error::InvalidParameter("dimension d must be positive".into()));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::InvalidParameter(format!("radius L = {} must be positive", self.radius)));
        }
        Ok(())
    }

    /// `p >= 2`: the regime where the matching upper bound holds.
    pub fn upper_bound_regime(&self) -> bool {
        self.p >= 2.0
    }
}

/// Parameters of the lower-bound bump mixture `f_P`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BumpMixtureSpec {
    /// Per-sub-cube masses `p_1..p_S`, row-major over the `(1/(2h))^d` grid.
    pub weights: Vec<f64>,
    /// Sub-cube edge `h`; `1/(2h)` must be an integer.
    pub edge: f64,
    /// Mean mass `α`; the background carries weight `1 - Sα`. Defaults to
    /// the mean of `weights`, which makes `f_P` a probability density.
    #[serde(default)]
    pub alpha: Option<f64>,
    pub d: usize,
}

impl BumpMixtureSpec {
    pub fn cells_per_axis(&self) -> Result<usize> {
        let m = 1.0 / (2.0 * self.edge);
        let mr = m.round();
        if !(self.edge > 0.0) || (m - mr).abs() > 1e-9 || mr < 1.0 {
            return Err(Error::InvalidDensity(format!(
                "bump edge h = {} must satisfy 1/(2h) integer",
                self.edge
            )));
        }
        Ok(mr as usize)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
            .unwrap_or_else(|| self.weights.iter().sum::<f64>() / self.weights.len().max(1) as f64)
    }
}

/// Serializable density description, as used in harness configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DensitySpec {
    UniformCube { d: usize },
    BetaProduct { alpha: f64, beta: f64, d: usize },
    CosineBump { amplitude: f64, d: usize },
    BumpMixture(BumpMixtureSpec),
    /// Product of centred normals; unbounded support.
    Gaussian { sigma: f64, d: usize },
    /// Law of `factor · X` for `X` drawn from `base`.
    Scaled { base: Box<DensitySpec>, factor: f64 },
}

impl DensitySpec {
    /// Short identifier used in CSV output and seed derivation.
    pub fn id(&self) -> String {
        match self {
            DensitySpec::UniformCube { d } => format!("uniform_d{d}"),
            DensitySpec::BetaProduct { alpha, beta, d } => format!("beta{alpha}_{beta}_d{d}"),
            DensitySpec::CosineBump { amplitude, d } => format!("cosine{amplitude}_d{d}"),
            DensitySpec::BumpMixture(b) => {
                format!("bumpmix_S{}_h{}_d{}", b.weights.len(), b.edge, b.d)
            }
            DensitySpec::Gaussian { sigma, d } => format!("gauss{sigma}_d{d}"),
            DensitySpec::Scaled { base, factor } => format!("{}_x{factor}", base.id()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropyProvenance {
    ClosedForm,
    Quadrature,
}

/// Where a density lives.
#[derive(Debug, Clone, PartialEq)]
pub enum Support {
    /// `[lo, hi]^d`.
    Cube { lo: f64, hi: f64 },
    Whole,
}

impl Support {
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Support::Cube { lo, hi } => x.iter().all(|&v| v >= *lo && v <= *hi),
            Support::Whole => x.iter().all(|v| v.is_finite()),
        }
    }
}

/// One-dimensional factor of a product density.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Marginal {
    Uniform,
    Beta { a: f64, b: f64, ln_norm: f64 },
    Cosine { a: f64 },
    Gaussian { sigma: f64 },
}

impl Marginal {
    fn pdf(&self, x: f64) -> f64 {
        match *self {
            Marginal::Uniform => {
                if (0.0..=1.0).contains(&x) {
                    1.0
                } else {
                    0.0
                }
            }
            Marginal::Beta { a, b, ln_norm } => {
                if !(0.0..=1.0).contains(&x) {
                    return 0.0;
                }
                if (x == 0.0 && a > 1.0) || (x == 1.0 && b > 1.0) {
                    return 0.0;
                }
                ((a - 1.0) * x.ln() + (b - 1.0) * (1.0 - x).ln() - ln_norm).exp()
            }
            Marginal::Cosine { a } => {
                if (0.0..=1.0).contains(&x) {
                    1.0 + a * (std::f64::consts::TAU * x).cos()
                } else {
                    0.0
                }
            }
            Marginal::Gaussian { sigma } => {
                let z = x / sigma;
                (-0.5 * z * z).exp() / (sigma * (std::f64::consts::TAU).sqrt())
            }
        }
    }

    fn cdf(&self, x: f64) -> f64 {
        match *self {
            Marginal::Uniform => x.clamp(0.0, 1.0),
            Marginal::Beta { a, b, .. } => {
                if x <= 0.0 {
                    0.0
                } else if x >= 1.0 {
                    1.0
                } else {
                    beta_reg(a, b, x)
                }
            }
            Marginal::Cosine { a } => {
                let x = x.clamp(0.0, 1.0);
                x + a * (std::f64::consts::TAU * x).sin() / std::f64::consts::TAU
            }
            Marginal::Gaussian { sigma } => {
                0.5 * statrs::function::erf::erfc(-x / (sigma * std::f64::consts::SQRT_2))
            }
        }
    }

    fn d1(&self, x: f64) -> f64 {
        match *self {
            Marginal::Uniform => 0.0,
            Marginal::Beta { a, b, .. } => {
                if x <= 0.0 || x >= 1.0 {
                    return 0.0;
                }
                self.pdf(x) * ((a - 1.0) / x - (b - 1.0) / (1.0 - x))
            }
            Marginal::Cosine { a } => {
                if (0.0..=1.0).contains(&x) {
                    -a * std::f64::consts::TAU * (std::f64::consts::TAU * x).sin()
                } else {
                    0.0
                }
            }
            Marginal::Gaussian { sigma } => -x / (sigma * sigma) * self.pdf(x),
        }
    }

    fn d2(&self, x: f64) -> f64 {
        match *self {
            Marginal::Uniform => 0.0,
            Marginal::Beta { a, b, .. } => {
                if x <= 0.0 || x >= 1.0 {
                    return 0.0;
                }
                let g = (a - 1.0) / x - (b - 1.0) / (1.0 - x);
                let dg = -(a - 1.0) / (x * x) - (b - 1.0) / ((1.0 - x) * (1.0 - x));
                self.pdf(x) * (g * g + dg)
            }
            Marginal::Cosine { a } => {
                if (0.0..=1.0).contains(&x) {
                    let w = std::f64::consts::TAU;
                    -a * w * w * (w * x).cos()
                } else {
                    0.0
                }
            }
            Marginal::Gaussian { sigma } => {
                let s2 = sigma * sigma;
                (x * x / (s2 * s2) - 1.0 / s2) * self.pdf(x)
            }
        }
    }

    fn entropy(&self) -> f64 {
        match *self {
            Marginal::Uniform => 0.0,
            Marginal::Beta { a, b, ln_norm } => {
                ln_norm - (a - 1.0) * digamma(a) - (b - 1.0) * digamma(b)
                    + (a + b - 2.0) * digamma(a + b)
            }
            Marginal::Cosine { a } => {
                let r = (1.0 - a * a).sqrt();
                -((1.0 + r) / 2.0).ln() - (1.0 - r)
            }
            Marginal::Gaussian { sigma } => {
                0.5 * (std::f64::consts::TAU * std::f64::consts::E * sigma * sigma).ln()
            }
        }
    }

    fn sup(&self) -> f64 {
        match *self {
            Marginal::Uniform => 1.0,
            Marginal::Beta { a, b, .. } => {
                if a >= 1.0 && b >= 1.0 && a + b > 2.0 {
                    self.pdf((a - 1.0) / (a + b - 2.0))
                } else if a == 1.0 && b == 1.0 {
                    1.0
                } else {
                    f64::INFINITY
                }
            }
            Marginal::Cosine { a } => 1.0 + a.abs(),
            Marginal::Gaussian { sigma } => 1.0 / (sigma * std::f64::consts::TAU.sqrt()),
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Marginal::Uniform => rng.random::<f64>(),
            Marginal::Gaussian { sigma } => {
                Normal::new(0.0, sigma).expect("sigma validated").sample(rng)
            }
            _ => {
                let u: f64 = rng.random();
                invert_cdf(|x| self.cdf(x), |x| self.pdf(x), u, 0.0, 1.0)
            }
        }
    }
}

/// Safeguarded Newton inversion of a continuous CDF on `[lo, hi]`.
fn invert_cdf<F: Fn(f64) -> f64, P: Fn(f64) -> f64>(cdf: F, pdf: P, u: f64, lo: f64, hi: f64) -> f64 {
    let (mut a, mut b) = (lo, hi);
    let mut x = lo + u * (hi - lo);
    for _ in 0..100 {
        let r = cdf(x) - u;
        if r.abs() < 1e-15 {
            return x;
        }
        if r > 0.0 {
            b = x;
        } else {
            a = x;
        }
        let dens = pdf(x);
        let step = if dens > 0.0 { x - r / dens } else { f64::NAN };
        x = if step.is_finite() && step > a && step < b { step } else { 0.5 * (a + b) };
        if b - a < 1e-15 {
            break;
        }
    }
    x
}

// Quartic bump template and its derivatives/CDF on [0, 1].
#[inline]
fn bump(u: f64) -> f64 {
    if (0.0..=1.0).contains(&u) {
        let v = u * (1.0 - u);
        30.0 * v * v
    } else {
        0.0
    }
}

#[inline]
fn bump_d1(u: f64) -> f64 {
    if (0.0..=1.0).contains(&u) {
        60.0 * u * (1.0 - u) * (1.0 - 2.0 * u)
    } else {
        0.0
    }
}

#[inline]
fn bump_d2(u: f64) -> f64 {
    if (0.0..=1.0).contains(&u) {
        60.0 * (1.0 - 6.0 * u + 6.0 * u * u)
    } else {
        0.0
    }
}

#[inline]
fn bump_cdf(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    u * u * u * (10.0 + u * (-15.0 + 6.0 * u))
}

/// Sup of the 1-d quartic bump, attained at 1/2.
pub const BUMP_SUP: f64 = 1.875;

/// Entropy of the 1-d quartic bump: `47/15 - ln 30`.
pub fn bump_entropy() -> f64 {
    47.0 / 15.0 - 30f64.ln()
}

#[derive(Debug, Clone)]
struct BumpMixture {
    d: usize,
    edge: f64,
    cells: usize,
    weights: Vec<f64>,
    background: f64,
    frame_cells: Vec<Vec<usize>>,
}

impl BumpMixture {
    fn new(spec: &BumpMixtureSpec) -> Result<Self> {
        if spec.d == 0 {
            return Err(Error::InvalidDensity("dimension must be positive".into()));
        }
        let cells = spec.cells_per_axis()?;
        let s = cells.pow(spec.d as u32);
        if spec.weights.len() != s {
            return Err(Error::InvalidDensity(format!(
                "expected S = {s} weights for h = {}, d = {}, got {}",
                spec.edge,
                spec.d,
                spec.weights.len()
            )));
        }
        if spec.weights.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidDensity("bump weights must be finite and nonnegative".into()));
        }
        let alpha = spec.alpha();
        let s_alpha = s as f64 * alpha;
        if !(alpha >= 0.0) || s_alpha > 1.0 + 1e-12 {
            return Err(Error::InvalidDensity(format!(
                "S·α = {s_alpha} exceeds 1; background weight would be negative"
            )));
        }
        let frame_cells = frame_cells(spec.d);
        Ok(Self {
            d: spec.d,
            edge: spec.edge,
            cells,
            weights: spec.weights.clone(),
            background: (1.0 - s_alpha).max(0.0),
            frame_cells,
        })
    }

    fn corner(&self, index: usize) -> Vec<f64> {
        let mut rem = index;
        let mut out = vec![0.0; self.d];
        for axis in (0..self.d).rev() {
            out[axis] = 0.25 + self.edge * (rem % self.cells) as f64;
            rem /= self.cells;
        }
        out
    }

    fn inner_index(&self, x: &[f64]) -> Option<(usize, Vec<f64>)> {
        let mut idx = 0usize;
        let mut local = Vec::with_capacity(self.d);
        for &v in x {
            if !(0.25..=0.75).contains(&v) {
                return None;
            }
            let c = (((v - 0.25) / self.edge).floor() as usize).min(self.cells - 1);
            idx = idx * self.cells + c;
            local.push((v - 0.25 - c as f64 * self.edge) / self.edge);
        }
        Some((idx, local))
    }

    fn frame_local(&self, x: &[f64]) -> Option<Vec<f64>> {
        if x.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return None;
        }
        let cell: Vec<usize> = x.iter().map(|&v| ((v * 4.0).floor() as usize).min(3)).collect();
        if cell.iter().all(|&c| c == 1 || c == 2) {
            return None;
        }
        Some(x.iter().zip(&cell).map(|(&v, &c)| 4.0 * v - c as f64).collect())
    }

    fn frame_norm(&self) -> f64 {
        4f64.powi(self.d as i32) / self.frame_cells.len() as f64
    }

    fn pdf(&self, x: &[f64]) -> f64 {
        let mut v = 0.0;
        if let Some((idx, local)) = self.inner_index(x) {
            let p = self.weights[idx];
            if p > 0.0 {
                v += p / self.edge.powi(self.d as i32) * local.iter().map(|&u| bump(u)).product::<f64>();
            }
        }
        if self.background > 0.0 {
            if let Some(local) = self.frame_local(x) {
                v += self.background * self.frame_norm() * local.iter().map(|&u| bump(u)).product::<f64>();
            }
        }
        v
    }

    /// Product-rule derivative: `order[i]` is the derivative order along axis i.
    fn derivative(&self, x: &[f64], order: &[u8]) -> f64 {
        let factor = |u: f64, o: u8| match o {
            0 => bump(u),
            1 => bump_d1(u),
            _ => bump_d2(u),
        };
        let mut v = 0.0;
        if let Some((idx, local)) = self.inner_index(x) {
            let p = self.weights[idx];
            if p > 0.0 {
                let scale: f64 = order.iter().map(|&o| self.edge.powi(-(o as i32))).product();
                v += p / self.edge.powi(self.d as i32)
                    * scale
                    * local.iter().zip(order).map(|(&u, &o)| factor(u, o)).product::<f64>();
            }
        }
        if self.background > 0.0 {
            if let Some(local) = self.frame_local(x) {
                let scale: f64 = order.iter().map(|&o| 4f64.powi(o as i32)).product();
                v += self.background
                    * self.frame_norm()
                    * scale
                    * local.iter().zip(order).map(|(&u, &o)| factor(u, o)).product::<f64>();
            }
        }
        v
    }

    fn box_mass(&self, lo: &[f64], hi: &[f64]) -> f64 {
        let piece = |corner: &[f64], scale: f64| -> f64 {
            lo.iter()
                .zip(hi)
                .zip(corner)
                .map(|((&a, &b), &c)| bump_cdf((b - c) / scale) - bump_cdf((a - c) / scale))
                .product()
        };
        let mut total = 0.0;
        for (i, &p) in self.weights.iter().enumerate() {
            if p > 0.0 {
                total += p * piece(&self.corner(i), self.edge);
            }
        }
        if self.background > 0.0 {
            let m = self.frame_cells.len() as f64;
            for cell in &self.frame_cells {
                let corner: Vec<f64> = cell.iter().map(|&c| c as f64 * 0.25).collect();
                total += self.background / m * piece(&corner, 0.25);
            }
        }
        total
    }

    fn sup(&self) -> f64 {
        let g = BUMP_SUP.powi(self.d as i32);
        let inner = self.weights.iter().fold(0.0_f64, |a, &p| a.max(p)) * g / self.edge.powi(self.d as i32);
        inner.max(self.background * self.frame_norm() * g)
    }

    fn mass(&self) -> f64 {
        self.weights.iter().sum::<f64>() + self.background
    }

    /// `C_0 + H(P) + (H(g) + d ln h) Σ p_i` with the background term `C_0`.
    fn entropy(&self) -> f64 {
        let d = self.d as f64;
        let h_g = d * bump_entropy();
        let h_p: f64 = self.weights.iter().map(|&p| crate::numeric::neg_xlogx(p)).sum();
        let sum_p: f64 = self.weights.iter().sum();
        let m = self.frame_cells.len() as f64;
        let h_w = h_g - d * 4f64.ln() + m.ln();
        let beta = self.background;
        let c0 = if beta > 0.0 { beta * (h_w - beta.ln()) } else { 0.0 };
        c0 + h_p + (h_g + d * self.edge.ln()) * sum_p
    }

    fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = (0..=self.cells).map(|i| 0.25 + i as f64 * self.edge).collect();
        b.extend([0.0, 0.25, 0.5, 0.75, 1.0]);
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }
}

fn frame_cells(d: usize) -> Vec<Vec<usize>> {
    let total = 4usize.pow(d as u32);
    (0..total)
        .map(|mut i| {
            let mut c = vec![0usize; d];
            for axis in (0..d).rev() {
                c[axis] = i % 4;
                i /= 4;
            }
            c
        })
        .filter(|c| !c.iter().all(|&v| v == 1 || v == 2))
        .collect()
}

#[derive(Debug, Clone)]
enum Shape {
    Product { marginal: Marginal, d: usize },
    Bumps(BumpMixture),
    Scaled { base: Box<DensityModel>, factor: f64 },
}

/// An evaluable probability density with sampler and ground-truth entropy.
///
/// Immutable after construction and `Sync`; samplers take the random
/// stream explicitly.
#[derive(Debug, Clone)]
pub struct DensityModel {
    spec: DensitySpec,
    shape: Shape,
    entropy_truth: f64,
    provenance: EntropyProvenance,
    declared_class: Option<LipschitzSpec>,
}

/// Builds a zoo density from its specification.
pub fn make_density(spec: &DensitySpec) -> Result<DensityModel> {
    let product = |marginal: Marginal, d: usize| -> Result<Shape> {
        if d == 0 {
            return Err(Error::InvalidDensity("dimension must be positive".into()));
        }
        Ok(Shape::Product { marginal, d })
    };
    let shape = match spec {
        DensitySpec::UniformCube { d } => product(Marginal::Uniform, *d)?,
        DensitySpec::BetaProduct { alpha, beta, d } => {
            if !(*alpha > 0.0 && *beta > 0.0) {
                return Err(Error::InvalidDensity(format!(
                    "beta parameters must be positive, got ({alpha}, {beta})"
                )));
            }
            product(Marginal::Beta { a: *alpha, b: *beta, ln_norm: ln_beta(*alpha, *beta) }, *d)?
        }
        DensitySpec::CosineBump { amplitude, d } => {
            if !(amplitude.abs() < 1.0) {
                return Err(Error::InvalidDensity(format!(
                    "cosine amplitude {amplitude} must satisfy |a| < 1 for a positive density"
                )));
            }
            product(Marginal::Cosine { a: *amplitude }, *d)?
        }
        DensitySpec::Gaussian { sigma, d } => {
            if !(*sigma > 0.0) {
                return Err(Error::InvalidDensity(format!("sigma {sigma} must be positive")));
            }
            product(Marginal::Gaussian { sigma: *sigma }, *d)?
        }
        DensitySpec::BumpMixture(b) => Shape::Bumps(BumpMixture::new(b)?),
        DensitySpec::Scaled { base, factor } => {
            if !(*factor > 0.0 && factor.is_finite()) {
                return Err(Error::InvalidDensity(format!("scale factor {factor} must be positive")));
            }
            Shape::Scaled { base: Box::new(make_density(base)?), factor: *factor }
        }
    };
    let entropy_truth = match &shape {
        Shape::Product { marginal, d } => *d as f64 * marginal.entropy(),
        Shape::Bumps(b) => b.entropy(),
        Shape::Scaled { base, factor } => base.entropy_truth + base.dim() as f64 * factor.ln(),
    };
    Ok(DensityModel {
        spec: spec.clone(),
        shape,
        entropy_truth,
        provenance: EntropyProvenance::ClosedForm,
        declared_class: None,
    })
}

impl DensityModel {
    pub fn spec(&self) -> &DensitySpec {
        &self.spec
    }

    pub fn id(&self) -> String {
        self.spec.id()
    }

    pub fn dim(&self) -> usize {
        match &self.shape {
            Shape::Product { d, .. } => *d,
            Shape::Bumps(b) => b.d,
            Shape::Scaled { base, .. } => base.dim(),
        }
    }

    pub fn support(&self) -> Support {
        match &self.shape {
            Shape::Product { marginal: Marginal::Gaussian { .. }, .. } => Support::Whole,
            Shape::Product { .. } | Shape::Bumps(_) => Support::Cube { lo: 0.0, hi: 1.0 },
            Shape::Scaled { base, factor } => match base.support() {
                Support::Cube { lo, hi } => Support::Cube { lo: lo * factor, hi: hi * factor },
                Support::Whole => Support::Whole,
            },
        }
    }

    pub fn entropy_truth(&self) -> f64 {
        self.entropy_truth
    }

    pub fn provenance(&self) -> EntropyProvenance {
        self.provenance
    }

    pub fn declared_class(&self) -> Option<LipschitzSpec> {
        self.declared_class
    }

    pub fn with_declared_class(mut self, class: LipschitzSpec) -> Self {
        self.declared_class = Some(class);
        self
    }

    /// Total mass; 1 for everything except un-normalised bump mixtures.
    pub fn mass(&self) -> f64 {
        match &self.shape {
            Shape::Bumps(b) => b.mass(),
            Shape::Scaled { base, .. } => base.mass(),
            Shape::Product { .. } => 1.0,
        }
    }

    pub fn pdf(&self, x: &[f64]) -> f64 {
        match &self.shape {
            Shape::Product { marginal, .. } => x.iter().map(|&v| marginal.pdf(v)).product(),
            Shape::Bumps(b) => b.pdf(x),
            Shape::Scaled { base, factor } => {
                let y: Vec<f64> = x.iter().map(|v| v / factor).collect();
                base.pdf(&y) / factor.powi(x.len() as i32)
            }
        }
    }

    /// Density of the periodic extension `f(x mod 1)`.
    pub fn pdf_periodic(&self, x: &[f64]) -> f64 {
        let y: Vec<f64> = x.iter().map(|v| v.rem_euclid(1.0)).collect();
        self.pdf(&y)
    }

    /// Partial derivative with per-axis orders in {0, 1, 2}.
    fn derivative(&self, x: &[f64], order: &[u8]) -> f64 {
        match &self.shape {
            Shape::Product { marginal, .. } => x
                .iter()
                .zip(order)
                .map(|(&v, &o)| match o {
                    0 => marginal.pdf(v),
                    1 => marginal.d1(v),
                    _ => marginal.d2(v),
                })
                .product(),
            Shape::Bumps(b) => b.derivative(x, order),
            Shape::Scaled { base, factor } => {
                let y: Vec<f64> = x.iter().map(|v| v / factor).collect();
                let total: i32 = order.iter().map(|&o| o as i32).sum();
                base.derivative(&y, order) / factor.powi(x.len() as i32 + total)
            }
        }
    }

    /// Analytic gradient.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (0..x.len())
            .map(|i| {
                let mut order = vec![0u8; x.len()];
                order[i] = 1;
                self.derivative(x, &order)
            })
            .collect()
    }

    /// Analytic pure second derivatives `∂_ii f`.
    pub fn hessian_diag(&self, x: &[f64]) -> Vec<f64> {
        (0..x.len())
            .map(|i| {
                let mut order = vec![0u8; x.len()];
                order[i] = 2;
                self.derivative(x, &order)
            })
            .collect()
    }

    /// Exact mass of the box `[lo, hi]` for the closed-form families.
    pub fn box_mass(&self, lo: &[f64], hi: &[f64]) -> Option<f64> {
        match &self.shape {
            Shape::Product { marginal, .. } => Some(
                lo.iter()
                    .zip(hi)
                    .map(|(&a, &b)| (marginal.cdf(b) - marginal.cdf(a)).max(0.0))
                    .product(),
            ),
            Shape::Bumps(b) => Some(b.box_mass(lo, hi)),
            Shape::Scaled { base, factor } => {
                let l: Vec<f64> = lo.iter().map(|v| v / factor).collect();
                let h: Vec<f64> = hi.iter().map(|v| v / factor).collect();
                base.box_mass(&l, &h)
            }
        }
    }

    /// Coordinates (per axis) where the density or one of its first two
    /// derivatives is not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.shape {
            Shape::Product { marginal: Marginal::Gaussian { .. }, .. } => vec![],
            Shape::Product { .. } => vec![0.0, 1.0],
            Shape::Bumps(b) => b.breakpoints(),
            Shape::Scaled { base, factor } => base.breakpoints().iter().map(|v| v * factor).collect(),
        }
    }

    /// Sup-norm envelope.
    pub fn sup_norm(&self) -> f64 {
        match &self.shape {
            Shape::Product { marginal, d } => marginal.sup().powi(*d as i32),
            Shape::Bumps(b) => b.sup(),
            Shape::Scaled { base, factor } => base.sup_norm() / factor.powi(base.dim() as i32),
        }
    }

    /// Draws `n` iid points.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<PointSet> {
        let d = self.dim();
        let mut coords = Vec::with_capacity(n * d);
        match &self.shape {
            Shape::Product { marginal, .. } => {
                for _ in 0..n * d {
                    coords.push(marginal.sample(rng));
                }
            }
            Shape::Bumps(b) => {
                let envelope = b.sup();
                let rate = b.mass() / envelope;
                if !(rate >= 1e-4) {
                    return Err(Error::EnvelopeTooLoose { rate, envelope });
                }
                let mut x = vec![0.0; d];
                let mut accepted = 0usize;
                while accepted < n {
                    for v in x.iter_mut() {
                        *v = rng.random::<f64>();
                    }
                    let u: f64 = rng.random::<f64>() * envelope;
                    if u < b.pdf(&x) {
                        coords.extend_from_slice(&x);
                        accepted += 1;
                    }
                }
            }
            Shape::Scaled { base, factor } => {
                let inner = base.sample(n, rng)?;
                coords = inner.coords().iter().map(|v| v * factor).collect();
            }
        }
        PointSet::new(d, coords)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::integrate;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn integral_1d(m: &DensityModel) -> f64 {
        let bp = m.breakpoints();
        integrate(|x| m.pdf(&[x]), 0.0, 1.0, &bp, 1e-11).unwrap().0
    }

    #[test]
    fn uniform_has_zero_entropy() {
        let m = make_density(&DensitySpec::UniformCube { d: 1 }).unwrap();
        assert_eq!(m.entropy_truth(), 0.0);
    }

    #[test]
    fn beta_22_entropy_matches_digamma_form() {
        let m = make_density(&DensitySpec::BetaProduct { alpha: 2.0, beta: 2.0, d: 1 }).unwrap();
        // -ln 6 + 5/3
        let expected = -(6f64.ln()) + 5.0 / 3.0;
        assert!((m.entropy_truth() - expected).abs() < 1e-12);
        assert!((m.entropy_truth() + 0.125_092_8).abs() < 1e-6);
    }

    #[test]
    fn densities_integrate_to_one() {
        let specs = [
            DensitySpec::UniformCube { d: 1 },
            DensitySpec::BetaProduct { alpha: 2.0, beta: 3.0, d: 1 },
            DensitySpec::CosineBump { amplitude: 0.7, d: 1 },
            DensitySpec::BumpMixture(BumpMixtureSpec {
                weights: vec![0.1, 0.0, 0.3, 0.05],
                edge: 0.125,
                alpha: None,
                d: 1,
            }),
        ];
        for s in &specs {
            let m = make_density(s).unwrap();
            assert!((integral_1d(&m) - 1.0).abs() < 1e-6, "{s:?}");
        }
    }

    #[test]
    fn amplitude_one_rejected() {
        assert!(make_density(&DensitySpec::CosineBump { amplitude: 1.0, d: 1 }).is_err());
    }

    #[test]
    fn overweight_bump_mixture_rejected() {
        let spec = BumpMixtureSpec { weights: vec![0.6, 0.6], edge: 0.25, alpha: None, d: 1 };
        assert!(matches!(
            make_density(&DensitySpec::BumpMixture(spec)),
            Err(Error::InvalidDensity(_))
        ));
    }

    #[test]
    fn non_tiling_edge_rejected() {
        let spec = BumpMixtureSpec { weights: vec![0.1; 3], edge: 0.3, alpha: None, d: 1 };
        assert!(make_density(&DensitySpec::BumpMixture(spec)).is_err());
    }

    #[test]
    fn zero_weights_leave_only_background() {
        let spec = BumpMixtureSpec { weights: vec![0.0; 4], edge: 0.125, alpha: Some(0.1), d: 1 };
        let m = make_density(&DensitySpec::BumpMixture(spec)).unwrap();
        let w = make_density(&DensitySpec::BumpMixture(BumpMixtureSpec {
            weights: vec![0.0; 4],
            edge: 0.125,
            alpha: Some(0.0),
            d: 1,
        }))
        .unwrap();
        for i in 0..=200 {
            let x = i as f64 / 200.0;
            assert!((m.pdf(&[x]) - 0.6 * w.pdf(&[x])).abs() < 1e-14);
        }
    }

    #[test]
    fn bump_derivatives_match_finite_differences() {
        let spec = BumpMixtureSpec { weights: vec![0.2, 0.1, 0.0, 0.2], edge: 0.25 / 2.0, alpha: None, d: 1 };
        let m = make_density(&DensitySpec::BumpMixture(spec)).unwrap();
        let eps = 1e-6;
        for &x in &[0.1, 0.3, 0.41, 0.66, 0.9] {
            let fd = (m.pdf(&[x + eps]) - m.pdf(&[x - eps])) / (2.0 * eps);
            assert!((m.gradient(&[x])[0] - fd).abs() < 1e-5 * (1.0 + fd.abs()));
            let fd2 = (m.gradient(&[x + eps])[0] - m.gradient(&[x - eps])[0]) / (2.0 * eps);
            assert!((m.hessian_diag(&[x])[0] - fd2).abs() < 1e-4 * (1.0 + fd2.abs()));
        }
    }

    #[test]
    fn box_mass_matches_quadrature() {
        let spec = BumpMixtureSpec { weights: vec![0.3, 0.1, 0.0, 0.1], edge: 0.125, alpha: None, d: 1 };
        let m = make_density(&DensitySpec::BumpMixture(spec)).unwrap();
        let bp = m.breakpoints();
        for &(a, b) in &[(0.0, 1.0), (0.2, 0.33), (0.4, 0.41), (0.7, 0.95)] {
            let q = integrate(|x| m.pdf(&[x]), a, b, &bp, 1e-12).unwrap().0;
            assert!((m.box_mass(&[a], &[b]).unwrap() - q).abs() < 1e-10);
        }
    }

    #[test]
    fn uniform_samples_lie_in_unit_square() {
        let m = make_density(&DensitySpec::UniformCube { d: 2 }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pts = m.sample(4, &mut rng).unwrap();
        assert_eq!(pts.len(), 4);
        assert!(pts.iter().all(|p| p.iter().all(|&v| (0.0..=1.0).contains(&v))));
    }

    #[test]
    fn beta_sample_mean_is_one_half() {
        let m = make_density(&DensitySpec::BetaProduct { alpha: 2.0, beta: 2.0, d: 1 }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let pts = m.sample(n, &mut rng).unwrap();
        let mean = pts.coords().iter().sum::<f64>() / n as f64;
        // Var Beta(2,2) = 1/20.
        let se = (0.05 / n as f64).sqrt();
        assert!((mean - 0.5).abs() < 3.0 * se);
    }

    #[test]
    fn scaled_density_shifts_entropy() {
        let base = DensitySpec::BetaProduct { alpha: 2.0, beta: 2.0, d: 1 };
        let m = make_density(&DensitySpec::Scaled { base: Box::new(base.clone()), factor: 0.5 }).unwrap();
        let b = make_density(&base).unwrap();
        assert!((m.entropy_truth() - (b.entropy_truth() - 2f64.ln())).abs() < 1e-14);
        assert!((m.pdf(&[0.25]) - 2.0 * b.pdf(&[0.5])).abs() < 1e-14);
    }
}

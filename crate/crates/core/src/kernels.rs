//! Non-negative compactly supported smoothing kernels, kernel density
//! evaluation with a neighbour index, and the exact smoothed density `f_h`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::densities::{DensityModel, PointSet};
use crate::error::{Error, Result};
use crate::numeric::integrate_box;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    /// Indicator of `[-1/2, 1/2]^d`.
    #[default]
    Box,
    /// `Π (1 - |t_i|)_+`.
    TriangleProduct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryMode {
    #[default]
    ZeroExtension,
    /// Every coordinate is taken modulo 1.
    Periodic,
}

/// Unscaled kernel shape. Implemented by [`Kernel`] and by test fixtures
/// that want to run [`check_kernel_assumptions`] on something else.
pub trait KernelProfile: Sync {
    fn dim(&self) -> usize;
    /// `K(t)` at bandwidth 1.
    fn profile(&self, t: &[f64]) -> f64;
    /// Claimed per-axis radius outside which `K` vanishes.
    fn support_radius(&self) -> f64;
    /// Per-axis points where `K` is not smooth (used to guide quadrature).
    fn kinks(&self) -> Vec<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Kernel {
    pub kind: KernelKind,
    pub d: usize,
}

impl Kernel {
    pub fn new(kind: KernelKind, d: usize) -> Self {
        Self { kind, d }
    }

    pub fn sup_norm(&self) -> f64 {
        1.0
    }

    pub fn support_radius(&self) -> f64 {
        match self.kind {
            KernelKind::Box => 0.5,
            KernelKind::TriangleProduct => 1.0,
        }
    }

    /// `h^{-d} K(t / h)`.
    pub fn at(&self, h: f64, t: &[f64]) -> f64 {
        let inv = 1.0 / h;
        let scale = inv.powi(t.len() as i32);
        match self.kind {
            KernelKind::Box => {
                if t.iter().all(|&v| v.abs() <= 0.5 * h) {
                    scale
                } else {
                    0.0
                }
            }
            KernelKind::TriangleProduct => {
                let mut prod = scale;
                for &v in t {
                    let w = 1.0 - (v * inv).abs();
                    if w <= 0.0 {
                        return 0.0;
                    }
                    prod *= w;
                }
                prod
            }
        }
    }
}

impl KernelProfile for Kernel {
    fn dim(&self) -> usize {
        self.d
    }

    fn profile(&self, t: &[f64]) -> f64 {
        self.at(1.0, t)
    }

    fn support_radius(&self) -> f64 {
        Kernel::support_radius(self)
    }

    fn kinks(&self) -> Vec<f64> {
        match self.kind {
            KernelKind::Box => vec![-0.5, 0.5],
            KernelKind::TriangleProduct => vec![-1.0, 0.0, 1.0],
        }
    }
}

/// `h^{-d} K(t/h)`.
pub fn kernel_at(kernel: &Kernel, h: f64, t: &[f64]) -> f64 {
    kernel.at(h, t)
}

/// Wraps a displacement coordinate into `[-1/2, 1/2)`.
#[inline]
pub fn wrap_displacement(v: f64) -> f64 {
    v - (v + 0.5).floor()
}

/// Spatial index over a sample for repeated kernel evaluations at many `x`.
///
/// In periodic mode, the points are reduced modulo 1 and those near the
/// boundary are duplicated with unit shifts, so plain Euclidean
/// displacements are exact on the torus as long as the kernel reach is
/// below 1/2.
#[derive(Debug, Clone)]
pub struct KernelIndex {
    kernel: Kernel,
    h: f64,
    n: usize,
    reach: f64,
    layout: Layout,
}

#[derive(Debug, Clone)]
enum Layout {
    /// Sorted coordinates (d = 1).
    Sorted(Vec<f64>),
    /// Hash grid with cell edge `reach` (d ≥ 2).
    Grid { d: usize, points: Vec<f64>, cells: HashMap<Vec<i64>, Vec<usize>> },
}

impl KernelIndex {
    pub fn new(samples: &PointSet, kernel: Kernel, h: f64, boundary: BoundaryMode) -> Result<Self> {
        Self::with_population(samples, samples.len(), kernel, h, boundary)
    }

    /// Index whose averages divide by `population` rather than the number
    /// of stored points; the missing points are treated as out of reach.
    pub fn with_population(
        samples: &PointSet,
        population: usize,
        kernel: Kernel,
        h: f64,
        boundary: BoundaryMode,
    ) -> Result<Self> {
        if population < samples.len() {
            return Err(Error::Data(format!(
                "population {population} smaller than the {} stored points",
                samples.len()
            )));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidParameter(format!("bandwidth h = {h} must be positive")));
        }
        if samples.dim() != kernel.d {
            return Err(Error::Data(format!(
                "sample dimension {} differs from kernel dimension {}",
                samples.dim(),
                kernel.d
            )));
        }
        let d = kernel.d;
        let reach = h * kernel.support_radius();
        let mut coords: Vec<f64> = Vec::with_capacity(samples.coords().len());
        match boundary {
            BoundaryMode::ZeroExtension => coords.extend_from_slice(samples.coords()),
            BoundaryMode::Periodic => {
                if reach >= 0.5 {
                    return Err(Error::InvalidParameter(format!(
                        "periodic mode needs kernel reach {reach} < 1/2"
                    )));
                }
                let shifts = 3usize.pow(d as u32);
                for p in samples.iter() {
                    let base: Vec<f64> = p.iter().map(|v| v.rem_euclid(1.0)).collect();
                    for code in 0..shifts {
                        let mut c = code;
                        let mut ok = true;
                        let mut shifted = base.clone();
                        for v in shifted.iter_mut() {
                            let s = (c % 3) as f64 - 1.0;
                            c /= 3;
                            *v += s;
                            if *v < -reach || *v > 1.0 + reach {
                                ok = false;
                            }
                        }
                        if ok {
                            coords.extend_from_slice(&shifted);
                        }
                    }
                }
            }
        }
        let layout = if d == 1 {
            coords.sort_by(f64::total_cmp);
            Layout::Sorted(coords)
        } else {
            let mut cells: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
            for (i, p) in coords.chunks_exact(d).enumerate() {
                let key: Vec<i64> = p.iter().map(|v| (v / reach).floor() as i64).collect();
                cells.entry(key).or_default().push(i);
            }
            Layout::Grid { d, points: coords, cells }
        };
        Ok(Self { kernel, h, n: population, reach, layout })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    /// Calls `visit` with every indexed point within kernel reach of `x`.
    fn for_neighbours<F: FnMut(&[f64])>(&self, x: &[f64], mut visit: F) {
        match &self.layout {
            Layout::Sorted(v) => {
                let lo = v.partition_point(|&p| p < x[0] - self.reach);
                let hi = v.partition_point(|&p| p <= x[0] + self.reach);
                for p in &v[lo..hi] {
                    visit(std::slice::from_ref(p));
                }
            }
            Layout::Grid { d, points, cells } => {
                let base: Vec<i64> = x.iter().map(|v| (v / self.reach).floor() as i64).collect();
                let total = 3usize.pow(*d as u32);
                let mut key = vec![0i64; *d];
                for code in 0..total {
                    let mut c = code;
                    for (k, b) in key.iter_mut().zip(&base) {
                        *k = b + (c % 3) as i64 - 1;
                        c /= 3;
                    }
                    if let Some(ids) = cells.get(&key) {
                        for &i in ids {
                            visit(&points[i * d..(i + 1) * d]);
                        }
                    }
                }
            }
        }
    }

    /// Non-zero kernel values `K_h(x - X_j)` in a fixed order. The remaining
    /// `n - len` values are zero.
    pub fn values(&self, x: &[f64]) -> Vec<f64> {
        let mut out = Vec::new();
        let mut t = vec![0.0; x.len()];
        self.for_neighbours(x, |p| {
            for ((ti, &xi), &pi) in t.iter_mut().zip(x).zip(p) {
                *ti = xi - pi;
            }
            let v = self.kernel.at(self.h, &t);
            if v > 0.0 {
                out.push(v);
            }
        });
        out
    }

    /// Number of sample points with `K_h(x - X_j) > 0`. For the box kernel
    /// this is the count `Z_x`.
    pub fn count(&self, x: &[f64]) -> usize {
        let mut c = 0;
        let mut t = vec![0.0; x.len()];
        self.for_neighbours(x, |p| {
            for ((ti, &xi), &pi) in t.iter_mut().zip(x).zip(p) {
                *ti = xi - pi;
            }
            if self.kernel.at(self.h, &t) > 0.0 {
                c += 1;
            }
        });
        c
    }

    /// `f̂_h(x)`.
    pub fn kde(&self, x: &[f64]) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        self.values(x).iter().sum::<f64>() / self.n as f64
    }
}

/// Kernel density estimate at one point. Builds a throwaway index; use
/// [`KernelIndex`] for many evaluations.
pub fn kde(samples: &PointSet, kernel: &Kernel, h: f64, x: &[f64], boundary: BoundaryMode) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Data("kde needs at least one sample".into()));
    }
    if x.len() != samples.dim() {
        return Err(Error::Data("evaluation point dimension mismatch".into()));
    }
    let xs: Vec<f64> = match boundary {
        BoundaryMode::Periodic => x.iter().map(|v| v.rem_euclid(1.0)).collect(),
        BoundaryMode::ZeroExtension => x.to_vec(),
    };
    Ok(KernelIndex::new(samples, *kernel, h, boundary)?.kde(&xs))
}

/// Splits `[a, b]` (length < 1) into sub-intervals of `[0, 1]` modulo 1.
fn wrap_interval(a: f64, b: f64) -> Vec<(f64, f64)> {
    let shift = a.floor();
    let (a, b) = (a - shift, b - shift);
    if b <= 1.0 {
        vec![(a, b)]
    } else {
        vec![(a, 1.0), (0.0, b - 1.0)]
    }
}

/// `f_h(x) = ∫ K_h(x - y) f(y) dy`, exact for the box kernel on densities
/// with closed-form cell masses, adaptive quadrature otherwise.
pub fn smoothed_density(
    density: &DensityModel,
    kernel: &Kernel,
    h: f64,
    x: &[f64],
    boundary: BoundaryMode,
) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!("bandwidth h = {h} must be positive")));
    }
    let d = x.len();
    if kernel.kind == KernelKind::Box {
        let vol = h.powi(d as i32);
        match boundary {
            BoundaryMode::ZeroExtension => {
                let lo: Vec<f64> = x.iter().map(|v| v - 0.5 * h).collect();
                let hi: Vec<f64> = x.iter().map(|v| v + 0.5 * h).collect();
                if let Some(m) = density.box_mass(&lo, &hi) {
                    return Ok(m / vol);
                }
            }
            BoundaryMode::Periodic if h < 1.0 => {
                let pieces: Vec<Vec<(f64, f64)>> =
                    x.iter().map(|v| wrap_interval(v - 0.5 * h, v + 0.5 * h)).collect();
                let mut total = 0.0;
                let mut ok = true;
                let combos: usize = pieces.iter().map(Vec::len).product();
                for code in 0..combos {
                    let mut c = code;
                    let mut lo = Vec::with_capacity(d);
                    let mut hi = Vec::with_capacity(d);
                    for p in &pieces {
                        let (a, b) = p[c % p.len()];
                        c /= p.len();
                        lo.push(a);
                        hi.push(b);
                    }
                    match density.box_mass(&lo, &hi) {
                        Some(m) => total += m,
                        None => {
                            ok = false;
                            break;
                        }
                    }
                }
                if ok {
                    return Ok(total / vol);
                }
            }
            BoundaryMode::Periodic => {}
        }
    }
    let r = h * kernel.support_radius();
    let lo: Vec<f64> = x.iter().map(|v| v - r).collect();
    let hi: Vec<f64> = x.iter().map(|v| v + r).collect();
    let dens_breaks = density.breakpoints();
    let breaks: Vec<Vec<f64>> = x
        .iter()
        .map(|&xi| {
            let mut b: Vec<f64> = kernel.kinks().iter().map(|k| xi + h * k).collect();
            match boundary {
                BoundaryMode::ZeroExtension => b.extend(dens_breaks.iter().copied()),
                BoundaryMode::Periodic => {
                    for s in [-1.0, 0.0, 1.0] {
                        b.extend(dens_breaks.iter().map(|v| v + s));
                    }
                }
            }
            b
        })
        .collect();
    let integrand = |y: &[f64]| {
        let t: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        let k = kernel.at(h, &t);
        if k == 0.0 {
            return 0.0;
        }
        k * match boundary {
            BoundaryMode::ZeroExtension => density.pdf(y),
            BoundaryMode::Periodic => density.pdf_periodic(y),
        }
    };
    let scale = density.sup_norm().clamp(1.0, 1e6);
    integrate_box(integrand, &lo, &hi, &breaks, 1e-10 * scale)
}

/// Outcome of one numerical check on a kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionCheck {
    pub name: &'static str,
    pub passed: bool,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelReport {
    pub checks: Vec<AssumptionCheck>,
    /// `∫ |t|^2 K(t) dt`.
    pub second_moment: f64,
}

impl KernelReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Tensor Gauss–Kronrod-style integration of `g(t)·K(t)` over the kernel's
/// claimed support plus a margin, for `d ≤ 2` adaptive, otherwise a dense
/// midpoint grid.
fn kernel_moment<K: KernelProfile + ?Sized, G: Fn(&[f64]) -> f64>(k: &K, g: G, margin: f64) -> Result<f64> {
    let d = k.dim();
    let r = k.support_radius() + margin;
    if d <= 2 {
        let lo = vec![-r; d];
        let hi = vec![r; d];
        let breaks = vec![k.kinks(); d];
        integrate_box(|t| g(t) * k.profile(t), &lo, &hi, &breaks, 1e-12)
    } else {
        let m = 40usize;
        let step = 2.0 * r / m as f64;
        let total = m.pow(d as u32);
        let mut t = vec![0.0; d];
        let mut acc = 0.0;
        for code in 0..total {
            let mut c = code;
            for v in t.iter_mut() {
                *v = -r + step * ((c % m) as f64 + 0.5);
                c /= m;
            }
            acc += g(&t) * k.profile(&t);
        }
        Ok(acc * step.powi(d as i32))
    }
}

/// Numerically verifies non-negativity, unit mass, zero mean, finite
/// second moment and compact support.
pub fn check_kernel_assumptions<K: KernelProfile + ?Sized>(kernel: &K, tol: f64) -> Result<KernelReport> {
    let d = kernel.dim();
    let r = kernel.support_radius();
    let margin = 0.25 * r.max(0.1);

    // Non-negativity on a grid covering support plus margin.
    let m: usize = if d == 1 { 2001 } else if d == 2 { 201 } else { 21 };
    let span = r + margin;
    let mut min_val = f64::INFINITY;
    let mut max_outside = 0.0_f64;
    let mut t = vec![0.0; d];
    for code in 0..m.pow(d as u32) {
        let mut c = code;
        for v in t.iter_mut() {
            *v = -span + 2.0 * span * (c % m) as f64 / (m - 1) as f64;
            c /= m;
        }
        let k = kernel.profile(&t);
        min_val = min_val.min(k);
        if t.iter().any(|v| v.abs() > r * (1.0 + 1e-12)) {
            max_outside = max_outside.max(k.abs());
        }
    }
    let mass = kernel_moment(kernel, |_| 1.0, margin)?;
    let mut mean_res = 0.0_f64;
    for axis in 0..d {
        let mu = kernel_moment(kernel, |t| t[axis], margin)?;
        mean_res = mean_res.max(mu.abs());
    }
    let second = kernel_moment(kernel, |t| t.iter().map(|v| v * v).sum(), margin)?;

    let checks = vec![
        AssumptionCheck { name: "non_negativity", passed: min_val >= -tol, residual: (-min_val).max(0.0) },
        AssumptionCheck { name: "unit_mass", passed: (mass - 1.0).abs() <= tol, residual: (mass - 1.0).abs() },
        AssumptionCheck { name: "zero_mean", passed: mean_res <= tol, residual: mean_res },
        AssumptionCheck { name: "finite_second_moment", passed: second.is_finite(), residual: second },
        AssumptionCheck { name: "compact_support", passed: max_outside <= tol, residual: max_outside },
    ];
    Ok(KernelReport { checks, second_moment: second })
}

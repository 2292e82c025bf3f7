//! Best uniform polynomial approximation of `φ(t) = -t ln t` on `[0, Δ]`.
//!
//! The exchange runs on the rescaled target `g(u) = -Δu ln(Δu)`, `u ∈ [0,1]`,
//! with the polynomial held in the Chebyshev basis of `x = 2u - 1` for
//! conditioning. Monomial coefficients `b_l` in `u` are derived from the
//! Chebyshev form; they are what the U-statistic pairing consumes.
//!
//! Grid scans and refinement are done in the angle `θ` with
//! `u = sin²(θ/2)`, which keeps full relative precision near `u = 0` where
//! the target has its square-root-like singularity in the derivative.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::neg_xlogx;

pub const MAX_DEGREE: usize = 64;
const MAX_ITERATIONS: usize = 100;
const MAX_RESTARTS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyApprox {
    delta: f64,
    degree: usize,
    /// Chebyshev coefficients in `x = 2t/Δ - 1`.
    cheb: Vec<f64>,
    /// Monomial coefficients in `u = t/Δ`.
    scaled: Vec<f64>,
    sup_error: f64,
    /// Smallest error magnitude over the alternation set (the de la
    /// Vallée-Poussin lower bound on the minimax error).
    levelled_error: f64,
    /// Alternation points in `t`.
    alternation: Vec<f64>,
    /// Signed errors at the alternation points.
    alternation_errors: Vec<f64>,
    iterations: usize,
}

impl PolyApprox {
    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn sup_error(&self) -> f64 {
        self.sup_error
    }

    pub fn levelled_error(&self) -> f64 {
        self.levelled_error
    }

    pub fn alternation_points(&self) -> &[f64] {
        &self.alternation
    }

    pub fn alternation_errors(&self) -> &[f64] {
        &self.alternation_errors
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// `b_0, …, b_k`: coefficients in `u = t/Δ`.
    pub fn scaled_coefficients(&self) -> &[f64] {
        &self.scaled
    }

    pub fn chebyshev_coefficients(&self) -> &[f64] {
        &self.cheb
    }

    /// `a_l = b_l / Δ^l`. May overflow for small `Δ` and large `l`.
    pub fn unscaled_coefficients(&self) -> Vec<f64> {
        self.scaled
            .iter()
            .enumerate()
            .map(|(l, b)| b / self.delta.powi(l as i32))
            .collect()
    }

    /// `Q(t)`, evaluated by Clenshaw recurrence in the Chebyshev form.
    pub fn eval(&self, t: f64) -> f64 {
        clenshaw(&self.cheb, 2.0 * t / self.delta - 1.0)
    }

    /// `Q(Δu)`.
    pub fn eval_scaled(&self, u: f64) -> f64 {
        clenshaw(&self.cheb, 2.0 * u - 1.0)
    }

    /// Horner evaluation with the monomial coefficients `b_l`. Matches
    /// [`PolyApprox::eval`] up to the conditioning of the monomial basis.
    pub fn eval_monomial(&self, t: f64) -> f64 {
        let u = t / self.delta;
        self.scaled.iter().rev().fold(0.0, |acc, &b| acc * u + b)
    }

    /// Indices `l` whose coefficient violates `|a_l| ≤ 2^{3k} Δ^{1-l}`
    /// (or `|a_1| ≤ 2^{3k} - ln Δ` for `l = 1`). Compared in scaled form so
    /// nothing overflows.
    pub fn coefficient_bound_violations(&self) -> Vec<usize> {
        let cap = 2f64.powi(3 * self.degree as i32);
        self.scaled
            .iter()
            .enumerate()
            .filter(|&(l, &b)| {
                if l == 1 {
                    (b / self.delta).abs() > cap - self.delta.ln()
                } else {
                    b.abs() > cap * self.delta
                }
            })
            .map(|(l, _)| l)
            .collect()
    }
}

/// `Q(t)` for a certified approximation.
pub fn eval_poly(poly: &PolyApprox, t: f64) -> f64 {
    poly.eval(t)
}

fn clenshaw(c: &[f64], x: f64) -> f64 {
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &cj in c.iter().skip(1).rev() {
        let b0 = 2.0 * x * b1 - b2 + cj;
        b2 = b1;
        b1 = b0;
    }
    x * b1 - b2 + c[0]
}

fn chebyshev_row(x: f64, k: usize, out: &mut [f64]) {
    out[0] = 1.0;
    if k >= 1 {
        out[1] = x;
    }
    for j in 2..=k {
        out[j] = 2.0 * x * out[j - 1] - out[j - 2];
    }
}

/// Converts Chebyshev coefficients in `x = 2u - 1` to monomials in `u`.
fn chebyshev_to_monomial(c: &[f64]) -> Vec<f64> {
    let k = c.len() - 1;
    let mut out = vec![0.0; k + 1];
    let mut prev = vec![0.0; k + 1];
    let mut cur = vec![0.0; k + 1];
    prev[0] = 1.0;
    out[0] += c[0];
    if k >= 1 {
        cur[0] = -1.0;
        cur[1] = 2.0;
        for (o, v) in out.iter_mut().zip(&cur) {
            *o += c[1] * v;
        }
    }
    for cj in c.iter().skip(2) {
        // T_{j+1} = 2(2u - 1) T_j - T_{j-1}
        let mut next = vec![0.0; k + 1];
        for i in 0..=k {
            let mut v = -2.0 * cur[i] - prev[i];
            if i > 0 {
                v += 4.0 * cur[i - 1];
            }
            next[i] = v;
        }
        for (o, v) in out.iter_mut().zip(&next) {
            *o += cj * v;
        }
        prev = std::mem::replace(&mut cur, next);
    }
    out
}

#[inline]
fn u_of(theta: f64) -> f64 {
    let s = (0.5 * theta).sin();
    s * s
}

struct Problem {
    delta: f64,
    k: usize,
}

impl Problem {
    fn target(&self, u: f64) -> f64 {
        neg_xlogx(self.delta * u)
    }

    fn error(&self, c: &[f64], theta: f64) -> f64 {
        let u = u_of(theta);
        self.target(u) - clenshaw(c, -theta.cos())
    }

    /// Solves the levelled interpolation on the reference set.
    fn level(&self, refs: &[f64]) -> Result<(Vec<f64>, f64)> {
        let m = self.k + 2;
        let mut a = DMatrix::zeros(m, m);
        let mut rhs = DVector::zeros(m);
        let mut row = vec![0.0; self.k + 1];
        for (i, &theta) in refs.iter().enumerate() {
            chebyshev_row(-theta.cos(), self.k, &mut row);
            for j in 0..=self.k {
                a[(i, j)] = row[j];
            }
            a[(i, m - 1)] = if i % 2 == 0 { 1.0 } else { -1.0 };
            rhs[i] = self.target(u_of(theta));
        }
        let sol = a
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Remez("reference points collide (singular system)".into()))?;
        Ok((sol.iter().take(self.k + 1).copied().collect(), sol[m - 1]))
    }

    /// Local extrema of the error in `θ`, refined by golden-section search.
    fn extrema(&self, c: &[f64]) -> Vec<(f64, f64)> {
        let n = (200 * (self.k + 2)).max(4000);
        let step = std::f64::consts::PI / n as f64;
        let thetas: Vec<f64> = (0..=n).map(|j| j as f64 * step).collect();
        let errs: Vec<f64> = thetas.iter().map(|&t| self.error(c, t)).collect();
        let mut out = Vec::new();
        for j in 0..=n {
            let e = errs[j];
            let left = if j > 0 { errs[j - 1] } else { f64::NAN };
            let right = if j < n { errs[j + 1] } else { f64::NAN };
            let is_max = e >= 0.0 && !(left > e) && !(right > e);
            let is_min = e <= 0.0 && !(left < e) && !(right < e);
            if !(is_max || is_min) {
                continue;
            }
            if j == 0 || j == n {
                out.push((thetas[j], e));
                continue;
            }
            let sign = if e >= 0.0 { 1.0 } else { -1.0 };
            let a = thetas[j.saturating_sub(1)];
            let b = thetas[(j + 1).min(n)];
            let (t, v) = golden_max(|t| sign * self.error(c, t), a, b, thetas[j], sign * e);
            out.push((t, sign * v));
        }
        out.sort_by(|x, y| x.0.total_cmp(&y.0));
        out
    }
}

/// Maximises `f` on `[a, b]`, starting from a known good point.
fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, x0: f64, f0: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut best = (x0, f0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..80 {
        if fc > best.1 {
            best = (c, fc);
        }
        if fd > best.1 {
            best = (d, fd);
        }
        if b - a < 1e-15 {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    for (x, v) in [(a, f(a)), (b, f(b))] {
        if v > best.1 {
            best = (x, v);
        }
    }
    best
}

/// Collapses same-sign runs to their largest member, then trims from the
/// ends until `want` points remain. Returns `None` if fewer alternate.
fn select_alternating(extrema: &[(f64, f64)], want: usize) -> Option<Vec<(f64, f64)>> {
    let mut alt: Vec<(f64, f64)> = Vec::new();
    for &(t, e) in extrema {
        // An exact zero may stand in for either sign.
        let e = match alt.last() {
            Some(last) if e == 0.0 => -last.1.signum() * 0.0,
            _ => e,
        };
        match alt.last_mut() {
            Some(last) if last.1.is_sign_positive() == e.is_sign_positive() => {
                if e.abs() > last.1.abs() {
                    *last = (t, e);
                }
            }
            _ => alt.push((t, e)),
        }
    }
    if alt.len() < want {
        return None;
    }
    while alt.len() > want {
        if alt[0].1.abs() < alt[alt.len() - 1].1.abs() {
            alt.remove(0);
        } else {
            alt.pop();
        }
    }
    Some(alt)
}

/// Minimax polynomial of degree `k` for `-t ln t` on `[0, Δ]`.
pub fn remez_minimax(delta: f64, k: usize) -> Result<PolyApprox> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter(format!("interval end Δ = {delta} must be positive")));
    }
    if k > MAX_DEGREE {
        return Err(Error::InvalidParameter(format!("degree {k} exceeds {MAX_DEGREE}")));
    }
    let problem = Problem { delta, k };
    let mut trace = Vec::new();
    for restart in 0..=MAX_RESTARTS {
        match run_exchange(&problem, restart, &mut trace) {
            Ok(p) => return Ok(p),
            Err(Error::Remez(msg)) if restart < MAX_RESTARTS => {
                trace.push(format!("restart {}: {msg}", restart + 1));
            }
            Err(e) => return Err(e),
        }
    }
    Err(Error::Remez(format!("no convergence; trace: {}", trace.join("; "))))
}

fn run_exchange(p: &Problem, restart: usize, trace: &mut Vec<String>) -> Result<PolyApprox> {
    let m = p.k + 2;
    let pi = std::f64::consts::PI;
    // Chebyshev extrema of degree k+1, optionally perturbed on restart.
    let mut refs: Vec<f64> = (0..m)
        .map(|i| {
            let base = pi * i as f64 / (m - 1) as f64;
            if restart == 0 || i == 0 || i == m - 1 {
                base
            } else {
                let jitter = ((i * 7919 + restart * 104_729) % 1000) as f64 / 1000.0 - 0.5;
                base + 0.3 * jitter * pi / (m - 1) as f64
            }
        })
        .collect();

    let mut prev_sup = f64::INFINITY;
    for iter in 1..=MAX_ITERATIONS {
        let (c, level) = p.level(&refs)?;
        let extrema = p.extrema(&c);
        let sup = extrema.iter().fold(0.0_f64, |a, e| a.max(e.1.abs()));
        let Some(alt) = select_alternating(&extrema, m) else {
            return Err(Error::Remez(format!(
                "only {} alternating extrema found at iteration {iter} (need {m})",
                extrema.len()
            )));
        };
        let levelled = alt.iter().fold(f64::INFINITY, |a, e| a.min(e.1.abs()));
        trace.push(format!("it{iter}: level {:.3e} sup {sup:.6e}", level.abs()));
        let spread_ok = sup - levelled <= 1e-12 * sup.max(f64::MIN_POSITIVE);
        let stalled = (sup - prev_sup).abs() <= 1e-10 * sup && sup - levelled <= 1e-8 * sup;
        if spread_ok || stalled || sup == 0.0 {
            let delta = p.delta;
            return Ok(PolyApprox {
                delta,
                degree: p.k,
                scaled: chebyshev_to_monomial(&c),
                cheb: c,
                sup_error: sup,
                levelled_error: levelled,
                alternation: alt.iter().map(|e| delta * u_of(e.0)).collect(),
                alternation_errors: alt.iter().map(|e| e.1).collect(),
                iterations: iter,
            });
        }
        prev_sup = sup;
        refs = alt.iter().map(|e| e.0).collect();
        for w in refs.windows(2) {
            if w[1] - w[0] <= 1e-14 {
                return Err(Error::Remez(format!("reference points collide at iteration {iter}")));
            }
        }
    }
    Err(Error::Remez(format!("no convergence after {MAX_ITERATIONS} iterations")))
}

/// Writes one CSV row per coefficient: `delta,degree,sup_error,l,b_l`.
pub fn write_coefficients_csv<W: Write>(polys: &[PolyApprox], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(["delta", "degree", "sup_error", "l", "b_l", "chebyshev_l"])?;
    for p in polys {
        for (l, (b, c)) in p.scaled.iter().zip(&p.cheb).enumerate() {
            w.write_record([
                format!("{:e}", p.delta),
                p.degree.to_string(),
                format!("{:e}", p.sup_error),
                l.to_string(),
                format!("{b:e}"),
                format!("{c:e}"),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

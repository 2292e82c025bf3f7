//! Unbiased estimators of `f_h(x)^l` built from the kernel values
//! `v_j = K_h(x - X_j)`: power sums, Newton's identities, the order-`l`
//! U-statistic, and the falling-factorial form for the box kernel.

use crate::error::{Error, Result};
use crate::numeric::compensated_sum;
use crate::poly_approx::PolyApprox;

/// Kernel values at one evaluation point. Only non-zero values need to be
/// stored; `n` counts all sample points, the missing ones being zero.
#[derive(Debug, Clone, PartialEq)]
pub struct UStatInput {
    values: Vec<f64>,
    n: usize,
}

impl UStatInput {
    pub fn new(values: Vec<f64>) -> Self {
        let n = values.len();
        Self { values, n }
    }

    /// `values` padded with `n - values.len()` zeros.
    pub fn with_zeros(values: Vec<f64>, n: usize) -> Result<Self> {
        if values.len() > n {
            return Err(Error::Data(format!("{} values exceed population size {n}", values.len())));
        }
        Ok(Self { values, n })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

/// `p_l = Σ_i v_i^l` for `l = 1..=k`.
pub fn power_sums(values: &[f64], k: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(k);
    let mut pw: Vec<f64> = values.to_vec();
    for l in 1..=k {
        if l > 1 {
            for (p, &v) in pw.iter_mut().zip(values) {
                *p *= v;
            }
        }
        out.push(compensated_sum(pw.iter().copied()));
    }
    out
}

/// `e_0..e_k` from `p_1..p_k` by Newton's identities
/// `l e_l = Σ_{i=1}^{l} (-1)^{i-1} e_{l-i} p_i`.
pub fn elementary_symmetric(power_sums: &[f64]) -> Vec<f64> {
    let k = power_sums.len();
    let mut e = Vec::with_capacity(k + 1);
    e.push(1.0);
    for l in 1..=k {
        let terms = (1..=l).map(|i| {
            let s = if i % 2 == 1 { 1.0 } else { -1.0 };
            s * e[l - i] * power_sums[i - 1]
        });
        e.push(compensated_sum(terms) / l as f64);
    }
    e
}

/// `C(n, l)` as a float.
pub fn binomial(n: usize, l: usize) -> f64 {
    if l > n {
        return 0.0;
    }
    let l = l.min(n - l);
    (0..l).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// `e_l / C(n, l)`, unbiased for `(E v)^l` under iid values.
pub fn u_statistic(input: &UStatInput, l: usize) -> Result<f64> {
    if l > input.n {
        return Err(Error::InsufficientData(format!("order {l} exceeds n = {}", input.n)));
    }
    if l == 0 {
        return Ok(1.0);
    }
    let e = elementary_symmetric(&power_sums(&input.values, l));
    Ok(e[l] / binomial(input.n, l))
}

/// `U_l / s^l` for `l = 0..=k`, with the values pre-divided by `n s` so
/// intermediate quantities stay O(1).
fn scaled_u_statistics(input: &UStatInput, k: usize, s: f64) -> Vec<f64> {
    let n = input.n as f64;
    let w: Vec<f64> = input.values.iter().map(|v| v / (n * s)).collect();
    let e = elementary_symmetric(&power_sums(&w, k));
    // e_l(w) n^l / C(n,l) = e_l(w) Π_{j<l} n / (n - j) · l!
    let mut out = Vec::with_capacity(k + 1);
    out.push(1.0);
    let mut factor = 1.0;
    for l in 1..=k {
        factor *= n / (n - (l - 1) as f64) * l as f64;
        out.push(e[l] * factor);
    }
    out
}

/// Unbiased estimator of `Q(f_h(x))`: `Σ_l b_l U_l / Δ^l`.
pub fn h1_nonsmooth(input: &UStatInput, poly: &PolyApprox) -> Result<f64> {
    let k = poly.degree();
    if k > input.n {
        return Err(Error::InsufficientData(format!("degree {k} exceeds n = {}", input.n)));
    }
    let u = scaled_u_statistics(input, k, poly.delta());
    Ok(compensated_sum(poly.scaled_coefficients().iter().zip(&u).map(|(b, v)| b * v)))
}

/// Box-kernel form of [`h1_nonsmooth`]: with `Z` sample points in the
/// cube around `x`, `U_l = Z(Z-1)…(Z-l+1) / (h^{dl} n(n-1)…(n-l+1))`.
pub fn h1_box_fastpath(z: usize, n: usize, h: f64, d: usize, poly: &PolyApprox) -> Result<f64> {
    if z > n {
        return Err(Error::Data(format!("count Z = {z} exceeds n = {n}")));
    }
    let hd = h.powi(d as i32);
    let b = poly.scaled_coefficients();
    let mut ratio = 1.0;
    let mut terms = Vec::with_capacity(b.len());
    terms.push(b[0]);
    for (l, &bl) in b.iter().enumerate().skip(1) {
        let j = l - 1;
        if j >= z {
            break;
        }
        ratio *= (z - j) as f64 / ((n - j) as f64 * hd * poly.delta());
        terms.push(bl * ratio);
    }
    Ok(compensated_sum(terms))
}

/// `(2 / (n(n-1))) Σ_{i<j} v_i v_j`, unbiased for `(E v)^2`.
pub fn second_order_u(input: &UStatInput) -> Result<f64> {
    let n = input.n;
    if n < 2 {
        return Err(Error::InsufficientData(format!("second-order U-statistic needs n ≥ 2, got {n}")));
    }
    let p = power_sums(&input.values, 2);
    Ok((p[0] * p[0] - p[1]) / (n as f64 * (n - 1) as f64))
}

//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use entroscope::linprog::{maximize, LinearProgram};
use nalgebra::{DMatrix, DVector};

/// Chebyshev-distributed points on `[0, 1]` (`u = sin²(θ/2)` on a uniform
/// angle grid).
pub fn chebyshev_grid(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let s = (0.5 * std::f64::consts::PI * i as f64 / (n - 1) as f64).sin();
            s * s
        })
        .collect()
}

/// Discretised minimax error of the best degree-`k` fit to `g` on the
/// points `us` (given in `[0,1]`), via the dual linear program
/// `max Σ g_i w_i` s.t. `Σ w_i T_j(2u_i - 1) = 0`, `Σ |w_i| = 1`.
pub fn discrete_minimax_lp<G: Fn(f64) -> f64>(g: G, us: &[f64], k: usize) -> f64 {
    let n = us.len();
    let rows = k + 2;
    let mut a = DMatrix::zeros(rows, 2 * n);
    let mut c = DVector::zeros(2 * n);
    for (i, &u) in us.iter().enumerate() {
        let x = 2.0 * u - 1.0;
        let (mut t0, mut t1) = (1.0, x);
        for j in 0..=k {
            let tj = if j == 0 {
                t0
            } else if j == 1 {
                t1
            } else {
                let t2 = 2.0 * x * t1 - t0;
                t0 = t1;
                t1 = t2;
                t2
            };
            a[(j, i)] = tj;
            a[(j, n + i)] = -tj;
        }
        a[(k + 1, i)] = 1.0;
        a[(k + 1, n + i)] = 1.0;
        c[i] = g(u);
        c[n + i] = -g(u);
    }
    let mut b = DVector::zeros(rows);
    b[k + 1] = 1.0;
    maximize(&LinearProgram { a, b, c }).expect("minimax LP").objective
}

pub fn neg_xlogx(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        -t * t.ln()
    }
}

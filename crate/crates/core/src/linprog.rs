//! Dense two-phase revised simplex for small equality-form linear programs:
//! maximize `c·x` subject to `A x = b`, `x ≥ 0`.
//!
//! Sized for the problems this crate needs (tens of rows, up to a few ten
//! thousand columns). The basis is refactored from scratch every iteration,
//! which is cheap at these row counts and avoids drift from product-form
//! updates. Dantzig pricing is used until a run of degenerate pivots, after
//! which Bland's rule takes over to rule out cycling.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: DVector<f64>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

const PIVOT_TOL: f64 = 1e-11;
const MAX_ITERATIONS: usize = 100_000;
const DEGENERATE_SWITCH: usize = 40;

struct Tableau {
    a: DMatrix<f64>,
    b: DVector<f64>,
    basis: Vec<usize>,
    iterations: usize,
}

impl Tableau {
    fn basis_matrix(&self) -> DMatrix<f64> {
        let m = self.a.nrows();
        DMatrix::from_fn(m, m, |i, k| self.a[(i, self.basis[k])])
    }

    /// Runs simplex iterations with the given costs; columns for which
    /// `enterable` is false never enter the basis.
    fn optimize(&mut self, cost: &[f64], enterable: &dyn Fn(usize) -> bool) -> Result<()> {
        let m = self.a.nrows();
        let ncols = self.a.ncols();
        let cost_scale = cost.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
        let dual_tol = 1e-10 * cost_scale;
        let mut degenerate_run = 0usize;
        let mut is_basic = vec![false; ncols];
        loop {
            if self.iterations > MAX_ITERATIONS {
                return Err(Error::LinearProgram(format!(
                    "exceeded {MAX_ITERATIONS} iterations"
                )));
            }
            is_basic.iter_mut().for_each(|v| *v = false);
            for &j in &self.basis {
                is_basic[j] = true;
            }
            let bmat = self.basis_matrix();
            let lu = bmat.clone().lu();
            let x_b = lu
                .solve(&self.b)
                .ok_or_else(|| Error::LinearProgram("singular basis".into()))?;
            let c_b = DVector::from_iterator(m, self.basis.iter().map(|&j| cost[j]));
            let y = bmat
                .transpose()
                .lu()
                .solve(&c_b)
                .ok_or_else(|| Error::LinearProgram("singular basis transpose".into()))?;

            let use_bland = degenerate_run >= DEGENERATE_SWITCH;
            let mut entering: Option<(usize, f64)> = None;
            for j in 0..ncols {
                if is_basic[j] || !enterable(j) {
                    continue;
                }
                let col = self.a.column(j);
                let d = cost[j] - y.dot(&col);
                if d > dual_tol {
                    if use_bland {
                        entering = Some((j, d));
                        break;
                    }
                    if entering.is_none_or(|(_, best)| d > best) {
                        entering = Some((j, d));
                    }
                }
            }
            let Some((enter, _)) = entering else {
                return Ok(());
            };

            let u = lu
                .solve(&self.a.column(enter).into_owned())
                .ok_or_else(|| Error::LinearProgram("singular basis".into()))?;
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..m {
                if u[i] > PIVOT_TOL {
                    let theta = x_b[i].max(0.0) / u[i];
                    let better = match leave {
                        None => true,
                        Some((r, best)) => {
                            theta < best - 1e-14
                                || (theta <= best + 1e-14 && self.basis[i] < self.basis[r])
                        }
                    };
                    if better {
                        leave = Some((i, theta));
                    }
                }
            }
            let Some((row, theta)) = leave else {
                return Err(Error::LinearProgram("is unbounded".into()));
            };
            if theta <= 1e-14 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.basis[row] = enter;
            self.iterations += 1;
        }
    }

    fn primal(&self) -> Result<DVector<f64>> {
        self.basis_matrix()
            .lu()
            .solve(&self.b)
            .ok_or_else(|| Error::LinearProgram("singular final basis".into()))
    }
}

/// Solves the program to optimality.
pub fn maximize(lp: &LinearProgram) -> Result<LpSolution> {
    let m = lp.a.nrows();
    let n = lp.a.ncols();
    if lp.b.len() != m || lp.c.len() != n {
        return Err(Error::LinearProgram("dimension mismatch".into()));
    }
    // Row-normalise so b >= 0 and rows have unit max-norm.
    let mut a = lp.a.clone();
    let mut b = lp.b.clone();
    for i in 0..m {
        let scale = a.row(i).iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        let s = if scale > 0.0 { sign / scale } else { sign };
        a.row_mut(i).scale_mut(s);
        b[i] *= s;
    }

    // Phase I: append identity artificials.
    let mut ext = DMatrix::zeros(m, n + m);
    ext.view_mut((0, 0), (m, n)).copy_from(&a);
    for i in 0..m {
        ext[(i, n + i)] = 1.0;
    }
    let mut tab = Tableau { a: ext, b, basis: (n..n + m).collect(), iterations: 0 };
    let phase1: Vec<f64> = (0..n + m).map(|j| if j >= n { -1.0 } else { 0.0 }).collect();
    tab.optimize(&phase1, &|j| j < n)?;
    let x = tab.primal()?;
    let infeasibility: f64 = tab
        .basis
        .iter()
        .zip(x.iter())
        .filter(|(&j, _)| j >= n)
        .map(|(_, &v)| v.abs())
        .sum();
    let b_scale = tab.b.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
    if infeasibility > 1e-9 * b_scale {
        return Err(Error::LinearProgram(format!(
            "is infeasible (phase I residual {infeasibility:.3e})"
        )));
    }

    // Drive artificials out of the basis; drop rows that turn out redundant.
    let mut redundant_rows = Vec::new();
    for pos in 0..m {
        if tab.basis[pos] < n {
            continue;
        }
        let bmat = tab.basis_matrix();
        let lu = bmat.lu();
        let mut replaced = false;
        for j in 0..n {
            if tab.basis.contains(&j) {
                continue;
            }
            if let Some(u) = lu.solve(&tab.a.column(j).into_owned()) {
                if u[pos].abs() > 1e-9 {
                    tab.basis[pos] = j;
                    replaced = true;
                    break;
                }
            }
        }
        if !replaced {
            redundant_rows.push(pos);
        }
    }
    if !redundant_rows.is_empty() {
        let keep: Vec<usize> = (0..m).filter(|i| !redundant_rows.contains(i)).collect();
        let a2 = DMatrix::from_fn(keep.len(), n + m, |r, j| tab.a[(keep[r], j)]);
        let b2 = DVector::from_iterator(keep.len(), keep.iter().map(|&r| tab.b[r]));
        let basis2: Vec<usize> = keep.iter().map(|&r| tab.basis[r]).collect();
        tab = Tableau { a: a2, b: b2, basis: basis2, iterations: tab.iterations };
    }

    let phase2: Vec<f64> = (0..n + m).map(|j| if j < n { lp.c[j] } else { 0.0 }).collect();
    tab.optimize(&phase2, &|j| j < n)?;
    let x_b = tab.primal()?;
    let mut x = vec![0.0; n];
    for (k, &j) in tab.basis.iter().enumerate() {
        if j < n {
            x[j] = x_b[k].max(0.0);
        }
    }
    let objective = crate::numeric::compensated_sum(x.iter().zip(lp.c.iter()).map(|(a, b)| a * b));
    Ok(LpSolution { x, objective, iterations: tab.iterations })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_problem() {
        // max 3x + 5y s.t. x + s1 = 4, 2y + s2 = 12, 3x + 2y + s3 = 18
        let a = DMatrix::from_row_slice(
            3,
            5,
            &[1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 2.0, 0.0, 1.0, 0.0, 3.0, 2.0, 0.0, 0.0, 1.0],
        );
        let lp = LinearProgram {
            a,
            b: DVector::from_vec(vec![4.0, 12.0, 18.0]),
            c: DVector::from_vec(vec![3.0, 5.0, 0.0, 0.0, 0.0]),
        };
        let sol = maximize(&lp).unwrap();
        assert!((sol.objective - 36.0).abs() < 1e-10);
        assert!((sol.x[0] - 2.0).abs() < 1e-10);
        assert!((sol.x[1] - 6.0).abs() < 1e-10);
    }

    #[test]
    fn detects_infeasibility() {
        // x + y = 1 and x + y = 2
        let lp = LinearProgram {
            a: DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]),
            b: DVector::from_vec(vec![1.0, 2.0]),
            c: DVector::from_vec(vec![1.0, 0.0]),
        };
        assert!(matches!(maximize(&lp), Err(Error::LinearProgram(_))));
    }

    #[test]
    fn tolerates_redundant_rows() {
        let lp = LinearProgram {
            a: DMatrix::from_row_slice(2, 3, &[1.0, 1.0, 1.0, 2.0, 2.0, 2.0]),
            b: DVector::from_vec(vec![1.0, 2.0]),
            c: DVector::from_vec(vec![1.0, 2.0, 0.5]),
        };
        let sol = maximize(&lp).unwrap();
        assert!((sol.objective - 2.0).abs() < 1e-12);
    }

    #[test]
    fn detects_unbounded() {
        let lp = LinearProgram {
            a: DMatrix::from_row_slice(1, 2, &[1.0, -1.0]),
            b: DVector::from_vec(vec![0.0]),
            c: DVector::from_vec(vec![1.0, 0.0]),
        };
        assert!(maximize(&lp).is_err());
    }
}

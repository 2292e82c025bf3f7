//! Small numerical kernels shared by the estimators and the oracles:
//! compensated and pairwise summation, `-t ln t` with its continuous
//! extension at zero, and adaptive Gauss–Kronrod quadrature.

use crate::error::{Error, Result};

/// `-t ln t` with `φ(0) = 0`.
#[inline]
pub fn neg_xlogx(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        -t * t.ln()
    }
}

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Pairwise summation in fixed index order. The result depends only on the
/// slice contents, never on how the slice was produced.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        let mut s = 0.0;
        for &v in values {
            s += v;
        }
        return s;
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

// Gauss–Kronrod 7/15 nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let hw = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = hw * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * hw, ((kronrod - gauss) * hw).abs())
}

/// Adaptive Gauss–Kronrod integration of `f` over `[a, b]`, splitting first
/// at the supplied interior breakpoints. Returns `(value, error_estimate)`.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    abs_tol: f64,
) -> Result<(f64, f64)> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Quadrature(format!("non-finite interval [{a}, {b}]")));
    }
    if b <= a {
        return Ok((0.0, 0.0));
    }
    let mut edges: Vec<f64> = std::iter::once(a)
        .chain(breakpoints.iter().copied().filter(|&p| p > a && p < b))
        .chain(std::iter::once(b))
        .collect();
    edges.sort_by(f64::total_cmp);
    edges.dedup();

    const MAX_INTERVALS: usize = 4000;
    // Work list of (a, b, value, err).
    let mut pieces: Vec<(f64, f64, f64, f64)> = edges
        .windows(2)
        .map(|w| {
            let (v, e) = gk15(&mut f, w[0], w[1]);
            (w[0], w[1], v, e)
        })
        .collect();
    loop {
        let total_err: f64 = pieces.iter().map(|p| p.3).sum();
        if total_err <= abs_tol {
            break;
        }
        if pieces.len() >= MAX_INTERVALS {
            let total: f64 = compensated_sum(pieces.iter().map(|p| p.2));
            return Err(Error::Quadrature(format!(
                "error estimate {total_err:.3e} above tolerance {abs_tol:.3e} after {MAX_INTERVALS} subintervals (value {total})"
            )));
        }
        let (idx, _) = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("nonempty");
        let (pa, pb, _, _) = pieces.swap_remove(idx);
        let m = 0.5 * (pa + pb);
        if m <= pa || m >= pb {
            // Interval no longer splittable in floating point.
            pieces.push((pa, pb, gk15(&mut f, pa, pb).0, 0.0));
            continue;
        }
        let (v1, e1) = gk15(&mut f, pa, m);
        let (v2, e2) = gk15(&mut f, m, pb);
        pieces.push((pa, m, v1, e1));
        pieces.push((m, pb, v2, e2));
    }
    pieces.sort_by(|x, y| x.0.total_cmp(&y.0));
    let value = compensated_sum(pieces.iter().map(|p| p.2));
    let err = pieces.iter().map(|p| p.3).sum();
    Ok((value, err))
}

/// Nested adaptive quadrature over an axis-aligned box in one or two
/// dimensions. `breaks[i]` lists interior breakpoints along axis `i`.
pub fn integrate_box<F: Fn(&[f64]) -> f64>(
    f: F,
    lo: &[f64],
    hi: &[f64],
    breaks: &[Vec<f64>],
    abs_tol: f64,
) -> Result<f64> {
    match lo.len() {
        1 => integrate(|x| f(&[x]), lo[0], hi[0], &breaks[0], abs_tol).map(|r| r.0),
        2 => {
            let width = (hi[0] - lo[0]).max(f64::MIN_POSITIVE);
            let inner_tol = abs_tol / (4.0 * width);
            let mut failure: Option<Error> = None;
            let (v, _) = integrate(
                |x| match integrate(|y| f(&[x, y]), lo[1], hi[1], &breaks[1], inner_tol) {
                    Ok((v, _)) => v,
                    Err(e) => {
                        failure.get_or_insert(e);
                        0.0
                    }
                },
                lo[0],
                hi[0],
                &breaks[0],
                abs_tol,
            )?;
            match failure {
                Some(e) => Err(e),
                None => Ok(v),
            }
        }
        d => Err(Error::Quadrature(format!(
            "adaptive quadrature supports d <= 2, got d = {d}"
        ))),
    }
}

/// Bisection root finder for a sign change of `f` on `[a, b]`.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gk_integrates_polynomials_exactly() {
        let (v, e) = integrate(|x| x.powi(5) - 3.0 * x * x, 0.0, 2.0, &[], 1e-12).unwrap();
        assert!((v - (64.0 / 6.0 - 8.0)).abs() < 1e-12);
        assert!(e < 1e-12);
    }

    #[test]
    fn adaptive_handles_log_singularity() {
        let (v, _) = integrate(neg_xlogx, 0.0, 1.0, &[], 1e-12).unwrap();
        assert!((v - 0.25).abs() < 1e-11);
    }

    #[test]
    fn breakpoints_resolve_discontinuity() {
        let (v, _) = integrate(|x| if x < 0.3 { 1.0 } else { 0.0 }, 0.0, 1.0, &[0.3], 1e-12).unwrap();
        assert!((v - 0.3).abs() < 1e-14);
    }

    #[test]
    fn two_dimensional_box() {
        let v = integrate_box(|p| p[0] * p[1], &[0.0, 0.0], &[1.0, 2.0], &[vec![], vec![]], 1e-12)
            .unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pairwise_matches_naive_on_small_input() {
        let v: Vec<f64> = (0..100).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 4950.0);
        assert_eq!(compensated_sum(v.iter().copied()), 4950.0);
    }
}

//! Adaptive 15-point Gauss–Kronrod quadrature on finite intervals.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// 7-point Gauss weights at XGK[1], XGK[3], XGK[5], XGK[7].
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_94,
    0.417_959_183_673_469_4,
];

const MAX_DEPTH: u32 = 60;

/// Tolerances for [`integrate`]: a panel is accepted once its error
/// estimate is below `max(abs_tol, rel_tol * |estimate|)`.
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs_tol: f64,
    pub rel_tol: f64,
}

impl Tolerance {
    pub fn absolute(abs_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol: 0.0,
        }
    }

    pub fn relative(rel_tol: f64) -> Self {
        Self {
            abs_tol: 0.0,
            rel_tol,
        }
    }
}

fn kronrod_panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

fn adapt<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    whole: (f64, f64),
    tol: Tolerance,
    depth: u32,
) -> Result<f64> {
    let (estimate, err) = whole;
    let target = f64::max(tol.abs_tol, tol.rel_tol * estimate.abs());
    if err <= target || err <= 50.0 * f64::EPSILON * estimate.abs() {
        return Ok(estimate);
    }
    let mid = 0.5 * (a + b);
    if depth >= MAX_DEPTH || mid <= a || mid >= b {
        return Err(Error::Quadrature {
            a,
            b,
            tol: target,
            err,
        });
    }
    let half_tol = Tolerance {
        abs_tol: 0.5 * tol.abs_tol,
        rel_tol: tol.rel_tol,
    };
    let left = kronrod_panel(f, a, mid);
    let right = kronrod_panel(f, mid, b);
    Ok(
        adapt(f, a, mid, left, half_tol, depth + 1)?
            + adapt(f, mid, b, right, half_tol, depth + 1)?,
    )
}

/// Integral of `f` over `[a, b]` (either orientation).
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if b < a {
        return integrate(f, b, a, tol).map(|v| -v);
    }
    let whole = kronrod_panel(&f, a, b);
    adapt(&f, a, b, whole, tol, 0)
}

/// Integral over `[a, b]` where `f` is smooth between consecutive
/// `breaks`; each piece is integrated separately.
pub fn integrate_pieces<F: Fn(f64) -> f64>(f: F, breaks: &[f64], tol: Tolerance) -> Result<f64> {
    let pieces = breaks.len().saturating_sub(1).max(1) as f64;
    let per_piece = Tolerance {
        abs_tol: tol.abs_tol / pieces,
        rel_tol: tol.rel_tol,
    };
    let mut acc = crate::sum::CompensatedSum::new();
    for w in breaks.windows(2) {
        acc.add(integrate(&f, w[0], w[1], per_piece)?);
    }
    Ok(acc.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomials_are_exact() {
        let v = integrate(
            |x| x.powi(7) - 3.0 * x * x,
            -1.0,
            2.0,
            Tolerance::absolute(1e-14),
        )
        .unwrap();
        assert_relative_eq!(v, (256.0 - 1.0) / 8.0 - 9.0, max_relative = 1e-14);
    }

    #[test]
    fn oscillatory_and_peaked() {
        let v = integrate(|x| (20.0 * x).sin(), 0.0, 3.0, Tolerance::absolute(1e-13)).unwrap();
        assert_relative_eq!(v, (1.0 - (60.0f64).cos()) / 20.0, epsilon = 1e-13);
        let v = integrate(
            |x| 1.0 / (1e-4 + x * x),
            -1.0,
            1.0,
            Tolerance::relative(1e-12),
        )
        .unwrap();
        assert_relative_eq!(v, 2.0 * 100.0 * (100.0f64).atan(), max_relative = 1e-11);
    }

    #[test]
    fn reversed_and_empty_intervals() {
        assert_eq!(
            integrate(|x| x, 1.0, 1.0, Tolerance::absolute(1e-12)).unwrap(),
            0.0
        );
        let v = integrate(|x| x, 1.0, 0.0, Tolerance::absolute(1e-12)).unwrap();
        assert_relative_eq!(v, -0.5, max_relative = 1e-15);
    }

    #[test]
    fn kink_handled_by_pieces() {
        let v = integrate_pieces(
            |x: f64| x.abs(),
            &[-1.0, 0.0, 2.0],
            Tolerance::absolute(1e-14),
        )
        .unwrap();
        assert_relative_eq!(v, 2.5, max_relative = 1e-15);
    }

    #[test]
    fn non_integrable_reports_error() {
        let r = integrate(
            |x: f64| 1.0 / x.abs().sqrt().powi(3),
            -1.0,
            1.0,
            Tolerance::absolute(1e-12),
        );
        assert!(matches!(r, Err(Error::Quadrature { .. })));
    }
}

//! Standard normal primitives with attention to the tails.
//!
//! The central quantity is the scaled tail
//!
//! ```text
//! T(w) = sqrt(2 pi) * exp(w^2 / 2) * (1 - Phi(w))
//! ```
//!
//! which is the Mills ratio `(1 - Phi(w)) / phi(w)`. Everything that would
//! otherwise multiply a huge `exp(w^2/2)` by a tiny `1 - Phi(w)` goes through
//! it. For `w >= 4` it is evaluated by a continued fraction; on `[0, 4)` by
//! Cody's rational approximations to `erfcx`; negative arguments use the
//! reflection `T(-w) = sqrt(2 pi) exp(w^2/2) - T(w)`, which has no
//! cancellation because both terms are positive and the first dominates.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::bounds::BoundCheck;
use crate::error::{Error, Result};

/// `sqrt(2 pi)`
pub const SQRT_2PI: f64 = 2.506_628_274_631_000_5;
/// `1 / sqrt(2 pi)`
pub const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

const CF_THRESHOLD: f64 = 4.0;
const CF_MAX_TERMS: usize = 5000;

/// `exp(-w^2/2)` with the square split exactly, so the exponent carries no
/// rounding error even for `|w|` near 38.
#[inline]
fn exp_neg_half_square(w: f64) -> f64 {
    let hi = w * w;
    let lo = w.mul_add(w, -hi);
    (-0.5 * hi).exp() * (1.0 - 0.5 * lo)
}

#[inline]
fn exp_half_square(w: f64) -> f64 {
    let hi = w * w;
    let lo = w.mul_add(w, -hi);
    (0.5 * hi).exp() * (1.0 + 0.5 * lo)
}

/// Standard normal density.
pub fn phi(w: f64) -> f64 {
    FRAC_1_SQRT_2PI * exp_neg_half_square(w)
}

/// Standard normal CDF.
#[allow(non_snake_case)]
pub fn Phi(w: f64) -> f64 {
    if w < 0.0 {
        lower_tail(w)
    } else {
        1.0 - lower_tail(-w)
    }
}

/// `1 - Phi(w)` without forming the difference.
pub fn upper_tail(w: f64) -> f64 {
    if w > 0.0 {
        lower_tail(-w)
    } else {
        1.0 - lower_tail(w)
    }
}

/// `Phi(w)` for `w <= 0`, accurate in relative terms.
#[inline]
fn lower_tail(w: f64) -> f64 {
    debug_assert!(w <= 0.0);
    phi(w) * scaled_tail(-w)
}

/// Tail of the Laplace continued fraction for the Mills ratio:
///
/// ```text
/// F_a(x) = 1 / (x + a / (x + (a+1) / (x + (a+2) / ...)))
/// ```
///
/// `F_1` is the Mills ratio itself and `F_a = 1 / (x + a F_{a+1})`.
/// Modified Lentz evaluation; intended for `x >= 4`.
fn mills_fraction(x: f64, a: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = TINY;
    let mut c = f;
    let mut d = 0.0;
    for j in 0..CF_MAX_TERMS {
        let num = if j == 0 { 1.0 } else { a + (j - 1) as f64 };
        d = x + num * d;
        if d == 0.0 {
            d = TINY;
        }
        c = x + num / c;
        if c == 0.0 {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() <= f64::EPSILON * 0.5 {
            break;
        }
    }
    f
}

// Cody (1969) rational approximations, as used in CALERF. The published
// digits are kept verbatim.
#[allow(clippy::excessive_precision)]
const ERF_A: [f64; 5] = [
    3.161_123_743_870_565_6,
    113.864_154_151_050_16,
    377.485_237_685_302_02,
    3_209.377_589_138_469_5,
    0.185_777_706_184_603_15,
];
#[allow(clippy::excessive_precision)]
const ERF_B: [f64; 4] = [
    23.601_290_952_344_12,
    244.024_637_934_444_17,
    1_282.616_526_077_372_3,
    2_844.236_833_439_170_6,
];
#[allow(clippy::excessive_precision)]
const ERFC_C: [f64; 9] = [
    0.564_188_496_988_670_1,
    8.883_149_794_388_376,
    66.119_190_637_141_63,
    298.635_138_197_400_13,
    881.952_221_241_769_1,
    1_712.047_612_634_070_6,
    2_051.078_377_826_071_5,
    1_230.339_354_797_997_2,
    2.153_115_354_744_038_5e-8,
];
#[allow(clippy::excessive_precision)]
const ERFC_D: [f64; 8] = [
    15.744_926_110_709_835,
    117.693_950_891_312_5,
    537.181_101_862_009_9,
    1_621.389_574_566_690_2,
    3_290.799_235_733_459_6,
    4_362.619_090_143_247,
    3_439.367_674_143_721_6,
    1_230.339_354_803_749_4,
];

/// `erfcx(y) = exp(y^2) erfc(y)` for `0 <= y <= 4`.
fn erfcx_small(y: f64) -> f64 {
    debug_assert!((0.0..=4.0).contains(&y));
    if y <= 0.468_75 {
        let z = y * y;
        let num = (((ERF_A[4] * z + ERF_A[0]) * z + ERF_A[1]) * z + ERF_A[2]) * z + ERF_A[3];
        let den = (((z + ERF_B[0]) * z + ERF_B[1]) * z + ERF_B[2]) * z + ERF_B[3];
        z.exp() * (1.0 - y * num / den)
    } else {
        let mut num = ERFC_C[8] * y;
        let mut den = y;
        for i in 0..7 {
            num = (num + ERFC_C[i]) * y;
            den = (den + ERFC_D[i]) * y;
        }
        (num + ERFC_C[7]) / (den + ERFC_D[7])
    }
}

/// Scaled upper tail `T(w) = sqrt(2 pi) exp(w^2/2) (1 - Phi(w))`.
///
/// Positive everywhere; `~ 1/w` as `w -> inf`. Overflows to `+inf` for
/// `w < -37.5` where the true value exceeds `f64::MAX`.
pub fn scaled_tail(w: f64) -> f64 {
    if w >= CF_THRESHOLD {
        mills_fraction(w, 1.0)
    } else if w >= 0.0 {
        (PI / 2.0).sqrt() * erfcx_small(w * FRAC_1_SQRT_2)
    } else {
        SQRT_2PI * exp_half_square(w) - scaled_tail(-w)
    }
}

/// `(1 + w^2) T(w) - w`, the bracket that appears in the Stein solution
/// for the indicator test functions. Positive for all `w`.
///
/// For large `w` both terms approach `w` and the difference is `~ 2/w^3`;
/// there the continued fraction gives it directly as `2 F_1 F_2 F_3`.
pub fn stein_tail_gap(w: f64) -> f64 {
    if w >= CF_THRESHOLD {
        2.0 * mills_fraction(w, 1.0) * mills_fraction(w, 2.0) * mills_fraction(w, 3.0)
    } else {
        (1.0 + w * w) * scaled_tail(w) - w
    }
}

/// `J(w) = integral of Phi over (-inf, w] = w Phi(w) + phi(w)`.
pub fn phi_antideriv(w: f64) -> f64 {
    if w > 0.0 {
        w + phi_antideriv(-w)
    } else {
        let x = -w;
        // J(-x) = phi(x) (1 - x T(x)) and 1 - x F_1 = F_1 F_2.
        let bracket = if x >= CF_THRESHOLD {
            mills_fraction(x, 1.0) * mills_fraction(x, 2.0)
        } else {
            1.0 - x * scaled_tail(x)
        };
        phi(x) * bracket
    }
}

/// `integral of (1 - Phi) over [w, inf) = J(-w)`.
pub fn upper_tail_antideriv(w: f64) -> f64 {
    phi_antideriv(-w)
}

// Acklam's rational approximation, relative error about 1.2e-9.
const ACKLAM_A: [f64; 6] = [
    -3.969_683_028_665_376e1,
    2.209_460_984_245_205e2,
    -2.759_285_104_469_687e2,
    1.383_577_518_672_69e2,
    -3.066_479_806_614_716e1,
    2.506_628_277_459_239,
];
const ACKLAM_B: [f64; 5] = [
    -5.447_609_879_822_406e1,
    1.615_858_368_580_409e2,
    -1.556_989_798_598_866e2,
    6.680_131_188_771_972e1,
    -1.328_068_155_288_572e1,
];
const ACKLAM_C: [f64; 6] = [
    -7.784_894_002_430_293e-3,
    -3.223_964_580_411_365e-1,
    -2.400_758_277_161_838,
    -2.549_671_010_228_2,
    4.374_664_141_464_968,
    2.938_163_982_698_783,
];
const ACKLAM_D: [f64; 4] = [
    7.784_695_709_041_462e-3,
    3.224_671_290_700_398e-1,
    2.445_134_137_142_996,
    3.754_408_661_907_416,
];

fn acklam_lower(p: f64) -> f64 {
    const P_LOW: f64 = 0.024_25;
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        let c = &ACKLAM_C;
        let d = &ACKLAM_D;
        (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5])
            / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        let a = &ACKLAM_A;
        let b = &ACKLAM_B;
        (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q
            / (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0)
    }
}

/// Quantile for `p <= 1/2`: rational guess plus two Newton steps.
fn lower_quantile(p: f64) -> f64 {
    let mut x = acklam_lower(p);
    for _ in 0..2 {
        // (Phi(x) - p) / phi(x) = (1 - p / Phi(x)) T(-x)
        let cdf = Phi(x);
        x -= (1.0 - p / cdf) * scaled_tail(-x);
    }
    x
}

/// Standard normal quantile function.
#[allow(non_snake_case)]
pub fn Phi_inv(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain {
            op: "Phi_inv",
            value: p,
            expected: "0 < p < 1",
        });
    }
    if p == 0.5 {
        Ok(0.0)
    } else if p < 0.5 {
        Ok(lower_quantile(p))
    } else {
        // 1 - p is exact for p >= 1/2.
        Ok(-lower_quantile(1.0 - p))
    }
}

/// Quantile of an upper-tail probability: `x` with `1 - Phi(x) = q`.
pub fn upper_quantile(q: f64) -> Result<f64> {
    Phi_inv(q).map(|x| -x)
}

fn require_positive(op: &'static str, w: f64) -> Result<()> {
    if w > 0.0 && w.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            op,
            value: w,
            expected: "finite w > 0",
        })
    }
}

/// `w T(w) <= (w^2 + 2) / (w^2 + 3)` for `w > 0`.
pub fn mills_inequality_1(w: f64) -> Result<BoundCheck> {
    require_positive("mills_inequality_1", w)?;
    let w2 = w * w;
    Ok(BoundCheck::new(
        "mills1",
        None,
        w * scaled_tail(w),
        (w2 + 2.0) / (w2 + 3.0),
    ))
}

/// `0 < (1 + w^2) T(w) - w <= 3 / (1 + w)^3` for `w > 0`.
///
/// The strict lower half is folded into `passed`; the returned margin is the
/// upper one.
pub fn mills_inequality_2(w: f64) -> Result<BoundCheck> {
    require_positive("mills_inequality_2", w)?;
    let gap = stein_tail_gap(w);
    let check = BoundCheck::new("mills2", None, gap, 3.0 / (1.0 + w).powi(3));
    Ok(if gap > 0.0 { check } else { check.fail() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    // Backward (bottom-up) evaluation of the Mills continued fraction with a
    // fixed, generous depth; independent of the Lentz path above.
    fn mills_backward(x: f64, depth: usize) -> f64 {
        let mut tail = 0.0;
        for k in (1..=depth).rev() {
            tail = k as f64 / (x + tail);
        }
        1.0 / (x + tail)
    }

    #[test]
    fn density_values() {
        assert_eq!(phi(0.0), 0.398_942_280_401_432_7);
        assert_relative_eq!(phi(1.0), 0.241_970_724_519_143_37, max_relative = 1e-15);
        for w in [0.5, 3.0, 10.0] {
            assert_eq!(phi(w), phi(-w));
        }
    }

    #[test]
    fn cdf_values() {
        assert_eq!(Phi(0.0), 0.5);
        assert_relative_eq!(
            Phi(-std::f64::consts::FRAC_1_SQRT_2),
            0.239_750_061_093_476_7,
            max_relative = 1e-14
        );
        assert_eq!(Phi(40.0), 1.0);
        assert!(upper_tail(37.0) > 0.0);
    }

    #[test]
    fn cdf_symmetry() {
        let mut w = -12.0;
        while w <= 12.0 {
            assert!((Phi(w) + Phi(-w) - 1.0).abs() <= 1e-15, "w = {w}");
            w += 0.0137;
        }
    }

    #[test]
    fn quantile_values() {
        assert_eq!(Phi_inv(0.5).unwrap(), 0.0);
        assert_relative_eq!(Phi_inv(Phi(1.3)).unwrap(), 1.3, epsilon = 1e-12);
        assert_relative_eq!(
            Phi_inv(1.0 / 3.0).unwrap(),
            -0.430_727_299_295_457_5,
            max_relative = 1e-14
        );
    }

    #[test]
    fn quantile_domain() {
        for p in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(Phi_inv(p), Err(Error::Domain { .. })));
        }
    }

    #[test]
    fn quantile_round_trip_in_probability() {
        let mut p = 1e-300;
        while p < 0.5 {
            let x = Phi_inv(p).unwrap();
            assert!((Phi(x) - p).abs() <= 1e-14);
            // Relative resolution is limited by the spacing of doubles near x:
            // d(log Phi) = (phi / Phi) dx ~ |x| dx.
            assert!(
                ((Phi(x) - p) / p).abs() <= 1e-14 * (1.0 + x * x),
                "p = {p:e}"
            );
            p *= 3.7;
        }
        for p in [0.5 + 1e-9, 0.75, 0.99, 1.0 - 1e-10, 1.0 - 1e-16] {
            let x = Phi_inv(p).unwrap();
            assert!((Phi(x) - p).abs() <= 1e-14, "p = {p}");
        }
    }

    #[test]
    fn scaled_tail_values() {
        assert_relative_eq!(
            scaled_tail(0.0),
            1.253_314_137_315_500_3,
            max_relative = 1e-15
        );
        // Reference values from a 60-digit evaluation of
        // sqrt(pi/2) exp(w^2/2) erfc(w/sqrt 2).
        let reference = [
            (0.5, 0.876_364_456_453_692_3),
            (1.0, 0.655_679_542_418_798_5),
            (2.0, 0.421_369_229_288_054_5),
            (3.9, 0.242_109_334_721_059_87),
            (4.0, 0.236_652_382_913_560_67),
            (4.1, 0.231_426_432_869_754_07),
            (10.0, 0.099_028_596_471_731_92),
            (20.0, 0.049_875_925_981_836_78),
            (35.0, 0.028_548_161_843_509_27),
            (40.0, 0.024_984_404_205_720_57),
            (-1.0, 3.477_051_811_703_694_5),
            (-5.0, 672_621.636_722_879_3),
            (-20.0, 1.811_283_015_892_591_6e87),
            (-37.0, 4.716_966_555_036_580_5e297),
        ];
        for (w, t) in reference {
            assert_relative_eq!(scaled_tail(w), t, max_relative = 1e-13);
        }
    }

    #[test]
    fn scaled_tail_matches_backward_fraction_and_asymptotics() {
        for w in [4.0, 5.5, 10.0, 17.0, 25.0, 40.0] {
            assert_relative_eq!(
                scaled_tail(w),
                mills_backward(w, 2000),
                max_relative = 1e-14
            );
        }
        // 1/w - 1/w^3 + 3/w^5 - 15/w^7 + 105/w^9, error below 945/w^11.
        let w: f64 = 40.0;
        let series =
            1.0 / w - 1.0 / w.powi(3) + 3.0 / w.powi(5) - 15.0 / w.powi(7) + 105.0 / w.powi(9);
        assert!((scaled_tail(w) - series).abs() < 945.0 / w.powi(11) * 2.0);
    }

    #[test]
    fn scaled_tail_consistent_with_cdf_where_direct_is_safe() {
        let mut w = -5.0;
        while w <= 5.0 {
            let direct = scaled_tail(w) * FRAC_1_SQRT_2PI * (-0.5 * w * w).exp();
            let tail = upper_tail(w);
            assert!(((direct - tail) / tail).abs() <= 1e-13, "w = {w}");
            w += 0.01;
        }
    }

    #[test]
    fn scaled_tail_branch_seam_is_smooth() {
        let below = scaled_tail(4.0 - 4.0 * f64::EPSILON);
        let above = scaled_tail(4.0);
        assert_relative_eq!(below, above, max_relative = 1e-13);
    }

    #[test]
    fn antiderivative() {
        assert_relative_eq!(phi_antideriv(0.0), phi(0.0), max_relative = 1e-15);
        assert!(phi_antideriv(-30.0).abs() < 1e-15);
        assert_relative_eq!(
            phi_antideriv(-30.0),
            1.631_956_734_091_401_2e-199,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            phi_antideriv(-10.0),
            7.474_560_254_589_328e-25,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            phi_antideriv(-5.0),
            5.346_165_533_832_815e-8,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            phi_antideriv(0.7),
            0.842_879_376_810_610_1,
            max_relative = 1e-15
        );
        let h = 1e-5;
        let fd = (phi_antideriv(0.7 + h) - phi_antideriv(0.7 - h)) / (2.0 * h);
        assert!((fd - Phi(0.7)).abs() < 1e-8);
    }

    #[test]
    fn antiderivative_approaches_positive_part() {
        for w in [-40.0, -20.0, 20.0, 40.0] {
            assert!((phi_antideriv(w) - f64::max(w, 0.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn mills_inequality_examples() {
        let c = mills_inequality_1(1.0).unwrap();
        assert!(c.passed && c.margin > 0.0);
        let c = mills_inequality_1(1e-8).unwrap();
        assert!(c.passed);
        assert!(c.lhs < 2e-8 && (c.rhs - 2.0 / 3.0).abs() < 1e-15);
        let c = mills_inequality_1(35.0).unwrap();
        assert!(c.passed && c.margin > 0.0 && c.margin < 1e-8);

        assert!(mills_inequality_2(1.0).unwrap().passed);
        let c = mills_inequality_2(1e-8).unwrap();
        assert!(c.passed);
        assert_relative_eq!(c.lhs, 1.253_314_117_315_500_4, max_relative = 1e-14);
        assert_relative_eq!(c.rhs, 3.0, max_relative = 1e-7);
        let c = mills_inequality_2(20.0).unwrap();
        assert!(c.passed);
        assert_relative_eq!(c.lhs, 2.463_187_165_502_469_5e-4, max_relative = 1e-12);
    }

    #[test]
    fn mills_inequality_domain() {
        for w in [0.0, -1.0, f64::NAN] {
            assert!(mills_inequality_1(w).is_err());
            assert!(mills_inequality_2(w).is_err());
        }
    }

    #[test]
    fn gap_matches_direct_evaluation_near_seam() {
        for w in [3.5, 3.99, 4.0, 4.5] {
            let direct = (1.0 + w * w) * scaled_tail(w) - w;
            assert_relative_eq!(stein_tail_gap(w), direct, max_relative = 1e-11);
        }
    }
}

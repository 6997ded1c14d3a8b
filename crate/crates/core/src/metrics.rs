//! Kolmogorov and Wasserstein-1 distances between the empirical measure
//! `P_N` (mass `1/N` at each `x_n`) and the standard Gaussian.
//!
//! Both are exact up to the accuracy of the Gaussian primitives. On the
//! positive half-line every quantity is expressed through the upper tail
//! `1 - Phi` and the complementary level `(N - k)/N`, so nothing is computed
//! as a difference of two numbers close to one.

use serde::Serialize;

use crate::gaussians::{
    phi_antideriv, upper_quantile, upper_tail, upper_tail_antideriv, Phi, Phi_inv,
};
use crate::ground_state::Configuration;
use crate::sum::CompensatedSum;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceReport {
    pub n_worlds: usize,
    pub d_k: f64,
    pub d_w: f64,
    pub x1: f64,
    /// `N d_K`
    pub scaled_dk: f64,
    /// `N d_W / sqrt(ln N)`
    pub scaled_dw: f64,
}

/// Exact `sup_z |F_N(z) - Phi(z)|`, attained at one of the atoms.
pub fn kolmogorov(cfg: &Configuration) -> f64 {
    let n = cfg.n_worlds();
    let nf = n as f64;
    let mut best = 0.0f64;
    for (i, a) in cfg.ascending().enumerate() {
        let k = (i + 1) as f64;
        // F jumps from (k-1)/N to k/N at a.
        let (above, below) = if a <= 0.0 {
            let p = Phi(a);
            (p - (k - 1.0) / nf, k / nf - p)
        } else {
            let q = upper_tail(a);
            ((nf - k + 1.0) / nf - q, q - (nf - k) / nf)
        };
        best = best.max(above).max(below);
    }
    best
}

/// `integral_a^b (L - Phi(t)) dt` for a constant level `L = k/N`, with
/// `a <= b` on one side of zero.
fn level_piece(a: f64, b: f64, k: usize, n: usize) -> f64 {
    if b <= 0.0 {
        let level = k as f64 / n as f64;
        level * (b - a) - (phi_antideriv(b) - phi_antideriv(a))
    } else {
        // L - Phi = (1 - Phi) - (1 - L)
        let co_level = (n - k) as f64 / n as f64;
        (upper_tail_antideriv(a) - upper_tail_antideriv(b)) - co_level * (b - a)
    }
}

/// Point where `Phi` crosses `k/N`.
fn crossing(k: usize, n: usize) -> f64 {
    let result = if 2 * k <= n {
        Phi_inv(k as f64 / n as f64)
    } else {
        upper_quantile((n - k) as f64 / n as f64)
    };
    // 0 < k < n here, so the level is strictly inside (0, 1).
    result.expect("level strictly between 0 and 1")
}

/// `(integral |F_N - Phi|, integral (F_N - Phi))`.
fn cdf_differences(cfg: &Configuration) -> (f64, f64) {
    let n = cfg.n_worlds();
    let atoms: Vec<f64> = cfg.ascending().collect();
    let mut abs = CompensatedSum::new();
    let mut signed = CompensatedSum::new();

    // Tails: F = 0 below the smallest atom, 1 above the largest.
    let lower = phi_antideriv(atoms[0]);
    let upper = upper_tail_antideriv(atoms[n - 1]);
    abs.add(lower);
    abs.add(upper);
    signed.add(-lower);
    signed.add(upper);

    for (i, w) in atoms.windows(2).enumerate() {
        let k = i + 1;
        let (a, b) = (w[0], w[1]);
        let c = crossing(k, n).clamp(a, b);
        // L - Phi >= 0 left of the crossing and <= 0 right of it.
        for (lo, hi, sign) in [(a, c, 1.0), (c, b, -1.0)] {
            let mut piece = 0.0;
            if lo < 0.0 && hi > 0.0 {
                piece += level_piece(lo, 0.0, k, n) + level_piece(0.0, hi, k, n);
            } else if lo < hi {
                piece += level_piece(lo, hi, k, n);
            }
            abs.add(sign * piece);
            signed.add(piece);
        }
    }
    (abs.value(), signed.value())
}

/// Exact `d_W(P_N, gamma) = integral |F_N - Phi|`.
pub fn wasserstein(cfg: &Configuration) -> f64 {
    cdf_differences(cfg).0
}

/// `integral (F_N - Phi)`; zero up to rounding because both means vanish.
pub fn signed_cdf_integral(cfg: &Configuration) -> f64 {
    cdf_differences(cfg).1
}

pub fn report(cfg: &Configuration) -> DistanceReport {
    let n = cfg.n_worlds();
    let nf = n as f64;
    let d_k = kolmogorov(cfg);
    let d_w = wasserstein(cfg);
    DistanceReport {
        n_worlds: n,
        d_k,
        d_w,
        x1: cfg.x(1),
        scaled_dk: nf * d_k,
        scaled_dw: nf * d_w / nf.ln().sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ground_state::{solve, DEFAULT_TOL};
    use crate::oracle;
    use approx::assert_relative_eq;

    #[test]
    fn kolmogorov_small_n() {
        let cfg = solve(2, DEFAULT_TOL).unwrap();
        assert_relative_eq!(
            kolmogorov(&cfg),
            0.260_249_938_906_523_27,
            max_relative = 1e-12
        );
        let cfg = solve(3, DEFAULT_TOL).unwrap();
        assert_relative_eq!(
            kolmogorov(&cfg),
            0.174_678_079_401_876_28,
            max_relative = 1e-12
        );
    }

    #[test]
    fn report_small_n() {
        let r = report(&solve(3, DEFAULT_TOL).unwrap());
        assert_eq!(r.n_worlds, 3);
        assert_relative_eq!(
            r.scaled_dk,
            3.0 * 0.174_678_079_401_876_28,
            max_relative = 1e-12
        );
        assert_relative_eq!(r.x1, 1.0, epsilon = 1e-12);
        let r = report(&solve(2, DEFAULT_TOL).unwrap());
        assert_relative_eq!(r.scaled_dk, 0.520_499_877_813_046_5, max_relative = 1e-12);
        assert_relative_eq!(
            r.scaled_dw,
            2.0 * r.d_w / 2f64.ln().sqrt(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn wasserstein_two_worlds_closed_form() {
        // d_W = 2 [J(-x1) + integral_{-x1}^0 |1/2 - Phi|] with x1 = 1/sqrt 2.
        let x1 = std::f64::consts::FRAC_1_SQRT_2;
        let inner = 0.5 * x1 - (phi_antideriv(0.0) - phi_antideriv(-x1));
        let expected = 2.0 * (phi_antideriv(-x1) + inner);
        let cfg = solve(2, DEFAULT_TOL).unwrap();
        assert_relative_eq!(wasserstein(&cfg), expected, max_relative = 1e-12);
    }

    #[test]
    fn wasserstein_matches_quadrature() {
        for n in [2, 3, 4, 10, 100] {
            let cfg = solve(n, DEFAULT_TOL).unwrap();
            let exact = wasserstein(&cfg);
            let quad = oracle::wasserstein_quadrature(&cfg).unwrap();
            assert!((exact - quad).abs() <= 1e-9, "N = {n}: {exact} vs {quad}");
        }
    }

    #[test]
    fn kolmogorov_matches_grid_scan() {
        for n in [2, 3, 4, 10, 100] {
            let cfg = solve(n, DEFAULT_TOL).unwrap();
            let exact = kolmogorov(&cfg);
            let scan = oracle::kolmogorov_grid_scan(&cfg, oracle::DK_SCAN_POINTS);
            assert!(scan <= exact + 1e-15);
            assert!(exact - scan <= 2e-6, "N = {n}: {exact} vs {scan}");
        }
    }

    #[test]
    fn signed_integral_vanishes() {
        for n in [2, 3, 4, 7, 10, 100, 1001, 10_000] {
            let cfg = solve(n, DEFAULT_TOL).unwrap();
            assert!(signed_cdf_integral(&cfg).abs() < 1e-10);
        }
    }

    #[test]
    fn theorem_windows_hold() {
        for n in [2, 3, 4, 10, 100, 101, 1000, 10_000] {
            let r = report(&solve(n, DEFAULT_TOL).unwrap());
            assert!(r.scaled_dk >= 0.5 && r.scaled_dk <= 55.0, "{r:?}");
            let nf = n as f64;
            assert!(r.d_w <= 16.0 * nf.ln().sqrt() / nf, "{r:?}");
            assert!(r.d_k <= 1.0 && r.d_w >= 0.0);
        }
    }
}

//! Independent reference evaluations used to cross-check the closed forms:
//! adaptive quadrature and brute-force grid scans. They are slower and less
//! accurate than the main code paths and exist only for validation.

use crate::coupling::sawtooth_segments;
use crate::error::Result;
use crate::gaussians::{scaled_tail, Phi};
use crate::ground_state::Configuration;
use crate::quad::{self, Tolerance};
use crate::sum::CompensatedSum;

/// Grid size for [`kolmogorov_grid_scan`].
pub const DK_SCAN_POINTS: usize = 1_000_000;

/// How far beyond the extreme atoms the tails are integrated; the
/// neglected mass `J(-12)` is below `1e-34`.
const TAIL_REACH: f64 = 12.0;

fn empirical_cdf(atoms: &[f64], t: f64) -> f64 {
    atoms.partition_point(|&a| a <= t) as f64 / atoms.len() as f64
}

/// Where `Phi` crosses `level` inside `[a, b]`, by bisection on `Phi`
/// alone; `None` if it does not cross.
fn bisect_crossing(a: f64, b: f64, level: f64) -> Option<f64> {
    if !(Phi(a) < level && level < Phi(b)) {
        return None;
    }
    let (mut lo, mut hi) = (a, b);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Some(lo);
        }
        if Phi(mid) < level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// `integral |F_N - Phi|` by adaptive quadrature between the atoms and the
/// points where `Phi` crosses each step of `F_N` (located by bisection, so
/// the integrand is smooth on every piece).
pub fn wasserstein_quadrature(cfg: &Configuration) -> Result<f64> {
    let atoms: Vec<f64> = cfg.ascending().collect();
    let n = atoms.len();
    let mut breaks = Vec::with_capacity(2 * n + 2);
    breaks.push(atoms[0] - TAIL_REACH);
    breaks.push(atoms[0]);
    for (i, w) in atoms.windows(2).enumerate() {
        if let Some(c) = bisect_crossing(w[0], w[1], (i + 1) as f64 / n as f64) {
            breaks.push(c);
        }
        breaks.push(w[1]);
    }
    breaks.push(atoms[n - 1] + TAIL_REACH);
    quad::integrate_pieces(
        |t| (empirical_cdf(&atoms, t) - Phi(t)).abs(),
        &breaks,
        Tolerance::absolute(1e-13),
    )
}

/// `max |F_N(t) - Phi(t)|` over `points` equispaced `t` in
/// `[x_N - 1, x_1 + 1]`. Never exceeds the true supremum.
pub fn kolmogorov_grid_scan(cfg: &Configuration, points: usize) -> f64 {
    let atoms: Vec<f64> = cfg.ascending().collect();
    let lo = atoms[0] - 1.0;
    let hi = atoms[atoms.len() - 1] + 1.0;
    let step = (hi - lo) / (points - 1) as f64;
    (0..points)
        .map(|i| {
            let t = lo + i as f64 * step;
            (empirical_cdf(&atoms, t) - Phi(t)).abs()
        })
        .fold(0.0, f64::max)
}

/// The sawtooth Stein solution evaluated literally as
///
/// ```text
/// (w - (1+w^2) T(w)) int_{-inf}^w h' Phi  -  (w + (1+w^2) T(-w)) int_w^inf h' (1 - Phi)
/// ```
///
/// with both integrals by adaptive quadrature over the linear pieces of `h`.
pub fn g_h_quadrature(cfg: &Configuration, w: f64) -> Result<f64> {
    let tol = Tolerance::absolute(1e-15);
    let mut below = CompensatedSum::new();
    let mut above = CompensatedSum::new();
    for (a, b, slope) in sawtooth_segments(cfg) {
        if a < w {
            below.add(slope * quad::integrate(Phi, a, b.min(w), tol)?);
        }
        if b > w {
            above.add(slope * quad::integrate(|t| 1.0 - Phi(t), a.max(w), b, tol)?);
        }
    }
    let (i1, i2) = (below.value(), above.value());
    let w2 = 1.0 + w * w;
    let mut g = 0.0;
    if i1 != 0.0 {
        g += (w - w2 * scaled_tail(w)) * i1;
    }
    if i2 != 0.0 {
        g -= (w + w2 * scaled_tail(-w)) * i2;
    }
    Ok(g)
}

//! The zero-median, strictly decreasing solution of
//!
//! ```text
//! x_{n+1} = x_n - 1 / (x_1 + ... + x_n),    1 <= n <= N - 1,
//! ```
//!
//! found by shooting on `x_1`. Only `x_1 ..= x_m` come out of the recursion;
//! the lower half is the mirror image `x_{N+1-n} = -x_n`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sum::{CompensatedSum, DoubleDouble};

pub const DEFAULT_TOL: f64 = 1e-13;
const MAX_EXPANSIONS: usize = 60;

/// Arithmetic used for the forward recursion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    /// f64 locations with compensated partial sums.
    #[default]
    Double,
    /// Double-double locations and partial sums.
    DoubleDouble,
}

impl Precision {
    pub fn as_str(self) -> &'static str {
        match self {
            Precision::Double => "double",
            Precision::DoubleDouble => "dd",
        }
    }
}

impl std::str::FromStr for Precision {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "double" => Ok(Precision::Double),
            "dd" | "double-double" => Ok(Precision::DoubleDouble),
            other => Err(format!(
                "unknown precision '{other}' (expected double or dd)"
            )),
        }
    }
}

/// Median index `m`: `(N+1)/2` for odd `N`, `N/2` for even.
pub fn median_index(n_worlds: usize) -> usize {
    n_worlds.div_ceil(2)
}

/// Value of the shooting objective at one trial `x_1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective {
    /// Recursion reached the median index.
    Value(f64),
    /// Some partial sum `S_n` with `n < m` went non-positive: `x_1` is too
    /// small. Ordered below every finite value.
    DivergedLow,
}

impl Objective {
    /// `-inf` for [`Objective::DivergedLow`].
    pub fn as_f64(self) -> f64 {
        match self {
            Objective::Value(v) => v,
            Objective::DivergedLow => f64::NEG_INFINITY,
        }
    }
}

trait Recurrence {
    type Value: Copy;
    fn start(x1: f64) -> Self;
    fn x(&self) -> Self::Value;
    fn to_f64(v: Self::Value) -> f64;
    fn sum_positive(&self) -> bool;
    /// `x <- x - 1/S`, then `S <- S + x`.
    fn step(&mut self);
    /// `x_m - 1 / (2 S_m)`.
    fn even_objective(&self) -> f64;
    fn finite(&self) -> bool;
}

struct DoubleRecurrence {
    x: f64,
    sum: CompensatedSum,
}

impl Recurrence for DoubleRecurrence {
    type Value = f64;

    fn start(x1: f64) -> Self {
        let mut sum = CompensatedSum::new();
        sum.add(x1);
        Self { x: x1, sum }
    }

    fn x(&self) -> f64 {
        self.x
    }

    fn to_f64(v: f64) -> f64 {
        v
    }

    fn sum_positive(&self) -> bool {
        self.sum.value() > 0.0
    }

    #[inline]
    fn step(&mut self) {
        self.x -= 1.0 / self.sum.value();
        self.sum.add(self.x);
    }

    fn even_objective(&self) -> f64 {
        self.x - 0.5 / self.sum.value()
    }

    fn finite(&self) -> bool {
        self.x.is_finite()
    }
}

struct DoubleDoubleRecurrence {
    x: DoubleDouble,
    sum: DoubleDouble,
}

impl Recurrence for DoubleDoubleRecurrence {
    type Value = DoubleDouble;

    fn start(x1: f64) -> Self {
        Self {
            x: x1.into(),
            sum: x1.into(),
        }
    }

    fn x(&self) -> DoubleDouble {
        self.x
    }

    fn to_f64(v: DoubleDouble) -> f64 {
        v.to_f64()
    }

    fn sum_positive(&self) -> bool {
        self.sum > DoubleDouble::ZERO
    }

    #[inline]
    fn step(&mut self) {
        self.x = self.x - self.sum.recip();
        self.sum = self.sum + self.x;
    }

    fn even_objective(&self) -> f64 {
        (self.x - DoubleDouble::from_f64(0.5) / self.sum).to_f64()
    }

    fn finite(&self) -> bool {
        self.x.is_finite()
    }
}

fn run<R: Recurrence>(
    x1: f64,
    n_worlds: usize,
    mut half: Option<&mut Vec<f64>>,
) -> Result<Objective> {
    let m = median_index(n_worlds);
    let mut state = R::start(x1);
    if let Some(h) = half.as_deref_mut() {
        h.clear();
        h.reserve(m);
        h.push(x1);
    }
    for step in 1..m {
        if !state.sum_positive() {
            return Ok(Objective::DivergedLow);
        }
        state.step();
        if !state.finite() {
            return Err(Error::Diverged { step, x1 });
        }
        if let Some(h) = half.as_deref_mut() {
            h.push(R::to_f64(state.x()));
        }
    }
    if n_worlds % 2 == 1 {
        Ok(Objective::Value(R::to_f64(state.x())))
    } else if !state.sum_positive() {
        Ok(Objective::DivergedLow)
    } else {
        Ok(Objective::Value(state.even_objective()))
    }
}

fn objective(x1: f64, n_worlds: usize, precision: Precision) -> Result<Objective> {
    match precision {
        Precision::Double => run::<DoubleRecurrence>(x1, n_worlds, None),
        Precision::DoubleDouble => run::<DoubleDoubleRecurrence>(x1, n_worlds, None),
    }
}

fn check_worlds(n_worlds: usize) -> Result<()> {
    if n_worlds < 2 {
        Err(Error::TooFewWorlds(n_worlds))
    } else {
        Ok(())
    }
}

/// Runs the recursion from `x1` up to the median index and returns the
/// shooting objective with `x_1 ..= x_m`.
///
/// The objective is `x_m` for odd `N` and `x_m - 1/(2 S_m)` for even `N`
/// (the latter vanishes exactly when `x_{m+1} = -x_m`).
pub fn forward_shoot(x1: f64, n_worlds: usize) -> Result<(Objective, Vec<f64>)> {
    forward_shoot_with(x1, n_worlds, Precision::Double)
}

pub fn forward_shoot_with(
    x1: f64,
    n_worlds: usize,
    precision: Precision,
) -> Result<(Objective, Vec<f64>)> {
    check_worlds(n_worlds)?;
    if !(x1 > 0.0 && x1.is_finite()) {
        return Err(Error::Domain {
            op: "forward_shoot",
            value: x1,
            expected: "finite x1 > 0",
        });
    }
    let mut half = Vec::new();
    let g = match precision {
        Precision::Double => run::<DoubleRecurrence>(x1, n_worlds, Some(&mut half))?,
        Precision::DoubleDouble => run::<DoubleDoubleRecurrence>(x1, n_worlds, Some(&mut half))?,
    };
    Ok((g, half))
}

/// A-posteriori diagnostics of a solved configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Residuals {
    /// `|S_N|`
    pub zero_mean: f64,
    /// `|sum x_n^2 - (N - 1)|`
    pub variance: f64,
    /// `max_n |x_{n+1} - x_n + 1/S_n|`
    pub recursion: f64,
    /// `|x_m|` (odd `N`) or `|x_m + x_{m+1}|` (even `N`) as produced by the
    /// recursion, before the mirror image is imposed.
    pub median: f64,
}

/// The solved ground state `x_1 > ... > x_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    n_worlds: usize,
    locations: Vec<f64>,
    partial_sums: Vec<f64>,
    shoot_value: f64,
    residuals: Residuals,
    tol: f64,
    precision: Precision,
}

impl Configuration {
    /// Rebuilds a configuration from its upper half `x_1 ..= x_m`.
    ///
    /// For odd `N` the median location is set to exactly zero. Partial sums
    /// and all residuals except `median_residual` are recomputed.
    // The negated comparison deliberately rejects NaN locations.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn from_half(
        n_worlds: usize,
        half: &[f64],
        median_residual: f64,
        tol: f64,
        precision: Precision,
    ) -> Result<Self> {
        check_worlds(n_worlds)?;
        let m = median_index(n_worlds);
        if half.len() != m {
            return Err(Error::InvalidConfiguration(format!(
                "expected {m} upper-half locations for N = {n_worlds}, got {}",
                half.len()
            )));
        }
        let mut locations = Vec::with_capacity(n_worlds);
        locations.extend_from_slice(half);
        if n_worlds % 2 == 1 {
            locations[m - 1] = 0.0;
        }
        let mirror_from = n_worlds - m;
        for i in (0..mirror_from).rev() {
            locations.push(-locations[i]);
        }
        debug_assert_eq!(locations.len(), n_worlds);

        if let Some(i) = locations.windows(2).position(|w| !(w[0] > w[1])) {
            return Err(Error::InvalidConfiguration(format!(
                "locations not strictly decreasing at n = {}",
                i + 1
            )));
        }

        let mut acc = CompensatedSum::new();
        let partial_sums: Vec<f64> = locations
            .iter()
            .map(|&x| {
                acc.add(x);
                acc.value()
            })
            .collect();

        let variance = (locations
            .iter()
            .map(|&x| x * x)
            .collect::<CompensatedSum>()
            .value()
            - (n_worlds - 1) as f64)
            .abs();
        let recursion = locations
            .windows(2)
            .zip(&partial_sums)
            .map(|(w, &s)| ((w[1] - w[0]) + 1.0 / s).abs())
            .fold(0.0, f64::max);

        let residuals = Residuals {
            zero_mean: partial_sums[n_worlds - 1].abs(),
            variance,
            recursion,
            median: median_residual,
        };
        Ok(Self {
            n_worlds,
            locations,
            partial_sums,
            shoot_value: half[0],
            residuals,
            tol,
            precision,
        })
    }

    pub fn n_worlds(&self) -> usize {
        self.n_worlds
    }

    pub fn median_index(&self) -> usize {
        median_index(self.n_worlds)
    }

    /// `x_1 > x_2 > ... > x_N`.
    pub fn locations(&self) -> &[f64] {
        &self.locations
    }

    /// `x_1 ..= x_m`.
    pub fn half_locations(&self) -> &[f64] {
        &self.locations[..self.median_index()]
    }

    /// `x_n`, 1-based.
    pub fn x(&self, n: usize) -> f64 {
        self.locations[n - 1]
    }

    /// `S_n = x_1 + ... + x_n`, 1-based.
    pub fn partial_sum(&self, n: usize) -> f64 {
        self.partial_sums[n - 1]
    }

    pub fn partial_sums(&self) -> &[f64] {
        &self.partial_sums
    }

    pub fn shoot_value(&self) -> f64 {
        self.shoot_value
    }

    pub fn residuals(&self) -> &Residuals {
        &self.residuals
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn precision(&self) -> Precision {
        self.precision
    }

    /// Atoms in increasing order: `x_N < ... < x_1`.
    pub fn ascending(&self) -> impl DoubleEndedIterator<Item = f64> + ExactSizeIterator + '_ {
        self.locations.iter().rev().copied()
    }

    /// Whether every residual is inside the tolerances the solver promises.
    pub fn residuals_within_bounds(&self) -> bool {
        let n = self.n_worlds as f64;
        let r = &self.residuals;
        r.zero_mean <= 1e-9 * n.sqrt()
            && r.variance <= 1e-8 * n
            && r.recursion <= 1e-10 * self.shoot_value
    }
}

#[derive(Debug, Clone, Copy)]
struct Endpoint {
    x1: f64,
    g: f64,
}

/// Solves for the ground state with default double precision.
pub fn solve(n_worlds: usize, tol: f64) -> Result<Configuration> {
    solve_with(n_worlds, tol, Precision::Double)
}

/// Shooting by bisection on `x_1`.
///
/// The starting bracket `[max(0.1, sqrt(log m)), sqrt(2 (1 + log m)) + 1]`
/// contains the root for large `N`; it is widened geometrically if the
/// objective has the same sign at both ends. Bisection stops once the
/// bracket is narrower than `tol * max(1, x_1)`.
pub fn solve_with(n_worlds: usize, tol: f64, precision: Precision) -> Result<Configuration> {
    check_worlds(n_worlds)?;
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::Domain {
            op: "solve",
            value: tol,
            expected: "finite tol > 0",
        });
    }
    let m = median_index(n_worlds) as f64;
    let log_m = m.ln();
    let eval = |x1: f64| -> Result<Endpoint> {
        Ok(Endpoint {
            x1,
            g: objective(x1, n_worlds, precision)?.as_f64(),
        })
    };

    let mut lo = eval(f64::max(0.1, log_m.sqrt()))?;
    let mut hi = eval((2.0 * (1.0 + log_m)).sqrt() + 1.0)?;
    let mut width = hi.x1 - lo.x1;
    let mut expansions = 0;
    while !(lo.g < 0.0 && hi.g > 0.0) {
        if expansions == MAX_EXPANSIONS || lo.g.is_nan() || hi.g.is_nan() {
            return Err(Error::Bracket {
                n: n_worlds,
                lo: lo.x1,
                hi: hi.x1,
                g_lo: lo.g,
                g_hi: hi.g,
                expansions,
            });
        }
        if lo.g >= 0.0 {
            lo = eval(f64::max(lo.x1 - width, 0.5 * lo.x1))?;
        }
        if hi.g <= 0.0 {
            hi = eval(hi.x1 + width)?;
        }
        width *= 2.0;
        expansions += 1;
    }

    let root = loop {
        if hi.x1 - lo.x1 <= tol * f64::max(1.0, hi.x1) {
            break if lo.g.abs() < hi.g.abs() { lo } else { hi };
        }
        let mid_x = lo.x1 + 0.5 * (hi.x1 - lo.x1);
        if mid_x <= lo.x1 || mid_x >= hi.x1 {
            break if lo.g.abs() < hi.g.abs() { lo } else { hi };
        }
        let mid = eval(mid_x)?;
        if mid.g.is_nan() {
            return Err(Error::BracketSign {
                x1: mid.x1,
                g: mid.g,
                lo: lo.x1,
                hi: hi.x1,
            });
        }
        if mid.g == 0.0 {
            break mid;
        } else if mid.g < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if !(lo.g < 0.0 && hi.g > 0.0) {
            return Err(Error::BracketSign {
                x1: mid.x1,
                g: mid.g,
                lo: lo.x1,
                hi: hi.x1,
            });
        }
    };

    let (g, half) = forward_shoot_with(root.x1, n_worlds, precision)?;
    let g = g.as_f64();
    debug_assert_eq!(g, root.g);
    let median_residual = if n_worlds % 2 == 1 {
        g.abs()
    } else {
        2.0 * g.abs()
    };
    Configuration::from_half(n_worlds, &half, median_residual, tol, precision)
}

/// `|sum x_n^2 - (N - 1)|`, compensated.
pub fn variance_check(cfg: &Configuration) -> f64 {
    cfg.residuals().variance
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn forward_shoot_examples() {
        let (g, half) = forward_shoot(1.0, 3).unwrap();
        assert_eq!(g, Objective::Value(0.0));
        assert_eq!(half, vec![1.0, 0.0]);

        let (g, half) = forward_shoot(FRAC_1_SQRT_2, 2).unwrap();
        assert!(g.as_f64().abs() < 1e-15);
        assert_eq!(half, vec![FRAC_1_SQRT_2]);

        let (g, _) = forward_shoot(2.0, 3).unwrap();
        assert_eq!(g, Objective::Value(1.5));
    }

    #[test]
    fn forward_shoot_signals_low_divergence() {
        // x1 = 0.5, N = 5: x2 = -1.5, S2 = -1 <= 0 before reaching m = 3.
        let (g, half) = forward_shoot(0.5, 5).unwrap();
        assert_eq!(g, Objective::DivergedLow);
        assert_eq!(g.as_f64(), f64::NEG_INFINITY);
        assert_eq!(half, vec![0.5, -1.5]);
    }

    #[test]
    fn forward_shoot_rejects_bad_input() {
        assert!(matches!(forward_shoot(0.0, 5), Err(Error::Domain { .. })));
        assert!(matches!(forward_shoot(1.0, 1), Err(Error::TooFewWorlds(1))));
    }

    #[test]
    fn closed_form_small_n() {
        let cfg = solve(3, DEFAULT_TOL).unwrap();
        assert_eq!(cfg.median_index(), 2);
        assert!((cfg.x(1) - 1.0).abs() < 1e-12);
        assert_eq!(cfg.x(2), 0.0);
        assert_eq!(cfg.x(3), -cfg.x(1));

        let cfg = solve(2, DEFAULT_TOL).unwrap();
        assert!((cfg.x(1) - FRAC_1_SQRT_2).abs() < 1e-12);
        assert_eq!(cfg.x(2), -cfg.x(1));

        let x1 = ((7.0 + 17f64.sqrt()) / 8.0).sqrt();
        let cfg = solve(4, DEFAULT_TOL).unwrap();
        assert!((cfg.x(1) - x1).abs() < 1e-12);
        assert_relative_eq!(cfg.x(2), 0.331_076_723_430_978_2, epsilon = 1e-12);
        assert_eq!(cfg.x(3), -cfg.x(2));
        assert_eq!(cfg.x(4), -cfg.x(1));
    }

    #[test]
    fn variance_check_small_n() {
        assert!(variance_check(&solve(3, DEFAULT_TOL).unwrap()) < 1e-12);
        assert!(variance_check(&solve(2, DEFAULT_TOL).unwrap()) < 1e-15 + 1e-12);
    }

    #[test]
    fn symmetry_is_exact_and_order_strict() {
        for n in [2, 3, 4, 5, 10, 11, 101, 1000] {
            let cfg = solve(n, DEFAULT_TOL).unwrap();
            let x = cfg.locations();
            for i in 0..n {
                assert_eq!(x[i], -x[n - 1 - i]);
            }
            assert!(x.windows(2).all(|w| w[0] > w[1]));
            assert!(cfg.partial_sums()[..n - 1].iter().all(|&s| s > 0.0));
            assert!(
                cfg.residuals_within_bounds(),
                "N = {n}: {:?}",
                cfg.residuals()
            );
        }
    }

    #[test]
    fn forward_reevaluation_reproduces_locations() {
        for n in [7, 64, 999] {
            let cfg = solve(n, DEFAULT_TOL).unwrap();
            let (_, half) = forward_shoot(cfg.shoot_value(), n).unwrap();
            let m = cfg.median_index();
            let upto = if n % 2 == 1 { m - 1 } else { m };
            assert_eq!(half[..upto], cfg.locations()[..upto]);
        }
    }

    fn assert_spacing(cfg: &Configuration, skip_median: bool) {
        let n = cfg.n_worlds();
        let m = cfg.median_index();
        for k in 1..n {
            let near_median = if n % 2 == 1 {
                k == m - 1 || k == m
            } else {
                k == m
            };
            if skip_median && near_median {
                continue;
            }
            let spacing = cfg.x(k) - cfg.x(k + 1);
            let expected = 1.0 / cfg.partial_sum(k);
            assert!(
                ((spacing - expected) / expected).abs() < 1e-12,
                "N = {n}, n = {k}: {spacing} vs {expected}"
            );
        }
    }

    #[test]
    fn spacing_identity() {
        // Away from the median the identity holds at any tolerance.
        for n in [5, 10, 33, 100, 1001, 10_000] {
            assert_spacing(&solve(n, DEFAULT_TOL).unwrap(), true);
        }
        // At the median it needs x1 resolved to the last bit.
        for n in [2, 3, 4, 5, 10, 33, 100, 1000] {
            assert_spacing(&solve(n, 1e-17).unwrap(), false);
        }
    }

    #[test]
    fn double_double_agrees_with_double() {
        let a = solve_with(501, DEFAULT_TOL, Precision::Double).unwrap();
        let b = solve_with(501, DEFAULT_TOL, Precision::DoubleDouble).unwrap();
        assert!((a.shoot_value() - b.shoot_value()).abs() < 1e-12);
        for (x, y) in a.locations().iter().zip(b.locations()) {
            assert!((x - y).abs() < 1e-11);
        }
    }

    #[test]
    fn from_half_validates() {
        assert!(Configuration::from_half(4, &[1.0], 0.0, DEFAULT_TOL, Precision::Double).is_err());
        assert!(
            Configuration::from_half(4, &[0.1, 0.5], 0.0, DEFAULT_TOL, Precision::Double).is_err()
        );
        assert!(Configuration::from_half(1, &[1.0], 0.0, DEFAULT_TOL, Precision::Double).is_err());
    }

    #[test]
    fn rejects_bad_tolerance() {
        assert!(solve(10, 0.0).is_err());
        assert!(solve(10, f64::NAN).is_err());
    }
}

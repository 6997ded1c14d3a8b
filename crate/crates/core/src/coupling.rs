//! Zero-bias coupling `(W, W*)` on `Omega = [x_N, x_1)`.
//!
//! `W*` is the identity on `Omega` with the piecewise-constant density
//! `p*_n = 1 / ((N-1)(x_n - x_{n+1}))` on `[x_{n+1}, x_n)`. Each interval is
//! cut at `y_n` so that `[y_n, x_n)` carries mass `L_n = (N-n)/(N(N-1))` and
//! `[x_{n+1}, y_n)` carries `R_{n+1} = n/(N(N-1))`; `W` maps
//! `[y_n, y_{n-1})` to `x_n`, which gives every atom mass exactly `1/N`.

use crate::error::{Error, Result};
use crate::ground_state::Configuration;
use crate::quad::{self, Tolerance};
use crate::sum::CompensatedSum;

/// Absolute tolerance for `E f'(W*)` in [`ZeroBiasCoupling::zero_bias_identity_check`].
pub const IDENTITY_QUAD_TOL: f64 = 1e-11;

#[derive(Debug, Clone)]
pub struct ZeroBiasCoupling<'a> {
    cfg: &'a Configuration,
    densities: Vec<f64>,
    splits: Vec<f64>,
}

impl<'a> ZeroBiasCoupling<'a> {
    pub fn build(cfg: &'a Configuration) -> Self {
        let n = cfg.n_worlds();
        let nf = n as f64;
        let x = cfg.locations();
        let mut densities = Vec::with_capacity(n - 1);
        let mut splits = Vec::with_capacity(n - 1);
        for (i, w) in x.windows(2).enumerate() {
            let spacing = w[0] - w[1];
            densities.push(1.0 / ((nf - 1.0) * spacing));
            // y_n = x_n - L_n / p*_n = x_n - (N - n) (x_n - x_{n+1}) / N
            let idx = (i + 1) as f64;
            splits.push(w[0] - (nf - idx) * spacing / nf);
        }
        Self {
            cfg,
            densities,
            splits,
        }
    }

    pub fn configuration(&self) -> &Configuration {
        self.cfg
    }

    /// `p*_n` for `n = 1 ..= N-1`.
    pub fn densities(&self) -> &[f64] {
        &self.densities
    }

    /// `y_n` for `n = 1 ..= N-1`.
    pub fn splits(&self) -> &[f64] {
        &self.splits
    }

    /// `L_n = (N - n) / (N (N - 1))`, `n = 1 ..= N-1`.
    pub fn left_mass(&self, n: usize) -> f64 {
        let nf = self.cfg.n_worlds() as f64;
        (nf - n as f64) / (nf * (nf - 1.0))
    }

    /// `R_n = (n - 1) / (N (N - 1))`, `n = 2 ..= N`.
    pub fn right_mass(&self, n: usize) -> f64 {
        let nf = self.cfg.n_worlds() as f64;
        (n as f64 - 1.0) / (nf * (nf - 1.0))
    }

    /// `Var W = (N - 1) / N`, taken from the variance identity rather than
    /// recomputed from the locations.
    pub fn variance(&self) -> f64 {
        let nf = self.cfg.n_worlds() as f64;
        (nf - 1.0) / nf
    }

    /// 1-based `n` with `x_{n+1} <= x < x_n`, if `x` is in `Omega`.
    fn interval_of(&self, x: f64) -> Option<usize> {
        let locs = self.cfg.locations();
        let above = locs.partition_point(|&v| v > x);
        (1..locs.len()).contains(&above).then_some(above)
    }

    /// Density of `W*` at `x`; zero outside `[x_N, x_1)`.
    pub fn density_at(&self, x: f64) -> f64 {
        self.interval_of(x).map_or(0.0, |n| self.densities[n - 1])
    }

    /// The coupling map `omega -> W(omega)`.
    pub fn w_of_omega(&self, omega: f64) -> Result<f64> {
        let n = self.interval_of(omega).ok_or(Error::Domain {
            op: "w_of_omega",
            value: omega,
            expected: "omega in [x_N, x_1)",
        })?;
        Ok(if omega >= self.splits[n - 1] {
            self.cfg.x(n)
        } else {
            self.cfg.x(n + 1)
        })
    }

    /// Total mass of `p*`.
    pub fn total_mass(&self) -> f64 {
        let x = self.cfg.locations();
        self.densities
            .iter()
            .zip(x.windows(2))
            .map(|(p, w)| p * (w[0] - w[1]))
            .collect::<CompensatedSum>()
            .value()
    }

    /// Mass of `W^{-1}(x_n)` for `n = 1 ..= N`, i.e. of `[y_1, x_1)`,
    /// `[y_n, y_{n-1})` and `[x_N, y_{N-1})`. Each should be `1/N`.
    pub fn atom_masses(&self) -> Vec<f64> {
        let x = self.cfg.locations();
        let n = x.len();
        (0..n)
            .map(|i| {
                let upper = if i == 0 {
                    0.0
                } else {
                    // [x_n, y_{n-1}) inside interval n-1
                    self.densities[i - 1] * (self.splits[i - 1] - x[i])
                };
                let lower = if i == n - 1 {
                    0.0
                } else {
                    // [y_n, x_n) inside interval n
                    self.densities[i] * (x[i] - self.splits[i])
                };
                upper + lower
            })
            .collect()
    }

    /// `|E W f(W) - sigma^2 E f'(W*)|`; `E f'(W*)` by adaptive quadrature on
    /// each interval.
    pub fn zero_bias_identity_check<F, G>(&self, f_prime: F, f: G) -> Result<f64>
    where
        F: Fn(f64) -> f64,
        G: Fn(f64) -> f64,
    {
        let x = self.cfg.locations();
        let nf = x.len() as f64;
        let lhs = x
            .iter()
            .map(|&v| v * f(v))
            .collect::<CompensatedSum>()
            .value()
            / nf;

        let per_interval = Tolerance::absolute(IDENTITY_QUAD_TOL / (nf - 1.0));
        let mut acc = CompensatedSum::new();
        for (p, w) in self.densities.iter().zip(x.windows(2)) {
            // p is ~1/(N-1) per unit spacing, so scale the tolerance by 1/p.
            let tol = Tolerance::absolute(per_interval.abs_tol / p);
            acc.add(p * quad::integrate(&f_prime, w[1], w[0], tol)?);
        }
        Ok((lhs - self.variance() * acc.value()).abs())
    }

    /// Exact `E|W - W*|`: on each interval `|omega - W(omega)|` is linear on
    /// both sides of the split, so each piece is a triangle.
    pub fn expected_coupling_gap(&self) -> f64 {
        let x = self.cfg.locations();
        self.densities
            .iter()
            .zip(&self.splits)
            .zip(x.windows(2))
            .map(|((p, y), w)| {
                let upper = w[0] - y;
                let lower = y - w[1];
                0.5 * p * (upper * upper + lower * lower)
            })
            .collect::<CompensatedSum>()
            .value()
    }

    /// `(E h(W), E h(W*))` for the sawtooth `h` that vanishes at every atom
    /// and peaks at the interval midpoints.
    pub fn sawtooth_expectation(&self) -> (f64, f64) {
        let x = self.cfg.locations();
        let nf = x.len() as f64;
        let eh_w = x
            .iter()
            .map(|&v| sawtooth(self.cfg, v))
            .collect::<CompensatedSum>()
            .value()
            / nf;
        // Each interval contributes p * (area of a triangle of base d and
        // height d/2) = p d^2 / 4.
        let eh_wstar = self
            .densities
            .iter()
            .zip(x.windows(2))
            .map(|(p, w)| {
                let d = w[0] - w[1];
                0.25 * p * d * d
            })
            .collect::<CompensatedSum>()
            .value();
        (eh_w, eh_wstar)
    }
}

/// The 1-Lipschitz sawtooth: zero outside `[x_N, x_1]` and at every atom,
/// rising with slope 1 from `x_{n+1}` to the midpoint `m_n` and falling back
/// to zero at `x_n`.
pub fn sawtooth(cfg: &Configuration, w: f64) -> f64 {
    let locs = cfg.locations();
    let above = locs.partition_point(|&v| v > w);
    if above == 0 || above == locs.len() {
        return 0.0;
    }
    let upper = locs[above - 1];
    let lower = locs[above];
    let mid = 0.5 * (upper + lower);
    if w < mid {
        w - lower
    } else {
        upper - w
    }
}

/// The linear pieces of the sawtooth in ascending order as
/// `(start, end, slope)`: slope `+1` on `[x_{n+1}, m_n)` and `-1` on
/// `[m_n, x_n)`.
pub fn sawtooth_segments(cfg: &Configuration) -> Vec<(f64, f64, f64)> {
    let atoms: Vec<f64> = cfg.ascending().collect();
    let mut out = Vec::with_capacity(2 * atoms.len().saturating_sub(1));
    for w in atoms.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        out.push((w[0], mid, 1.0));
        out.push((mid, w[1], -1.0));
    }
    out
}

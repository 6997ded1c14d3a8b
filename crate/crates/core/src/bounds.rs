//! Inequality checks against solved configurations and distance reports,
//! and the sweep that runs them over a grid of `N`.
//!
//! Every inequality is stored as `lhs <= rhs` with `margin = rhs - lhs`.
//! Check names are `family` or `family.variant`; families are the units in
//! which results are aggregated.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ground_state::{self, median_index, Configuration};
use crate::metrics::{self, DistanceReport};
use crate::stein::k_star;

/// Relative slack used when deciding whether an inequality holds.
pub const PASS_SLACK: f64 = 1e-12;

/// The configuration inequality families, checked for `N > 100`.
pub const LEMMA_FAMILIES: [&str; 6] = ["lem31a", "lem31b", "lem31c", "lem31d", "cal07", "cal08"];
/// The distance bounds, checked for every `N`.
pub const THEOREM_FAMILIES: [&str; 2] = ["be1", "be2"];
/// Smallest `N` for which the configuration inequalities are claimed.
pub const LEMMA_MIN_WORLDS: usize = 101;
pub const LEMMA_SKIP_REASON: &str = "N ≤ 100";

/// Above this median index the pair family is subsampled.
const PAIR_FULL_MAX_MEDIAN: usize = 2000;
/// Target number of pairs when subsampling.
const PAIR_BUDGET: usize = 100_000;

/// One evaluated inequality `lhs <= rhs`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheck {
    pub name: &'static str,
    pub n_index: Option<usize>,
    /// Second index for two-index inequalities.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pair_index: Option<usize>,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub passed: bool,
}

impl BoundCheck {
    pub fn new(name: &'static str, n_index: Option<usize>, lhs: f64, rhs: f64) -> Self {
        let margin = rhs - lhs;
        let passed = margin >= -PASS_SLACK * f64::max(1.0, rhs.abs());
        Self {
            name,
            n_index,
            pair_index: None,
            lhs,
            rhs,
            margin,
            passed,
        }
    }

    fn with_pair(mut self, j: usize) -> Self {
        self.pair_index = Some(j);
        self
    }

    pub(crate) fn fail(mut self) -> Self {
        self.passed = false;
        self
    }

    /// The part of the name before the first `.`.
    pub fn family(&self) -> &'static str {
        family_of(self.name)
    }
}

pub fn family_of(name: &'static str) -> &'static str {
    name.split_once('.').map_or(name, |(f, _)| f)
}

/// `sqrt(2 (1 + ln(m/n)))`
fn log_envelope(m: f64, n: f64) -> f64 {
    (2.0 * (1.0 + (m / n).ln())).sqrt()
}

/// Index pairs `l < j <= k` for the pair family: all of them when the
/// median index is at most 2000 or when there are few enough, otherwise all
/// pairs among the smallest log-spaced index set (always containing 1 and
/// `k`) with at least `sqrt(2 * PAIR_BUDGET)` distinct elements.
pub fn pair_indices(m: usize, k: usize) -> Vec<(usize, usize)> {
    let all_pairs = k * k.saturating_sub(1) / 2;
    let idx: Vec<usize> = if m <= PAIR_FULL_MAX_MEDIAN || all_pairs <= PAIR_BUDGET {
        (1..=k).collect()
    } else {
        let target = ((2 * PAIR_BUDGET) as f64).sqrt() as usize;
        let mut points = target;
        loop {
            let mut v: Vec<usize> = (0..points)
                .map(|i| {
                    let t = i as f64 / (points - 1) as f64;
                    ((k as f64).powf(t).round() as usize).clamp(1, k)
                })
                .collect();
            v.dedup();
            if v.len() >= target {
                break v;
            }
            points += target / 4;
        }
    };
    let mut pairs = Vec::with_capacity(idx.len() * idx.len().saturating_sub(1) / 2);
    for (a, &l) in idx.iter().enumerate() {
        for &j in &idx[a + 1..] {
            pairs.push((l, j));
        }
    }
    pairs
}

/// The configuration inequalities for `N > 100`.
pub fn check_lemma31(cfg: &Configuration) -> Result<Vec<BoundCheck>> {
    let n_worlds = cfg.n_worlds();
    if n_worlds < LEMMA_MIN_WORLDS {
        return Err(Error::InvalidConfiguration(format!(
            "configuration inequalities need N > 100, got N = {n_worlds}"
        )));
    }
    let m = median_index(n_worlds);
    let mf = m as f64;
    let k = k_star(n_worlds);
    let mut out = Vec::new();

    let xm = cfg.x(m);
    out.push(BoundCheck::new("lem31d.lower", Some(m), 0.0, xm));
    out.push(BoundCheck::new("lem31d.upper", Some(m), xm, 1.0 / mf));

    for n in 1..m {
        let nf = n as f64;
        let env = log_envelope(mf, nf);
        let s = cfg.partial_sum(n);
        out.push(BoundCheck::new("lem31a", Some(n), cfg.x(n), env));
        out.push(BoundCheck::new(
            "lem31b.lower",
            Some(n),
            (nf * (nf + 1.0) / 2.0).sqrt(),
            s,
        ));
        out.push(BoundCheck::new("lem31b.upper", Some(n), s, 1.5 * nf * env));
    }

    for n in 1..=k {
        let nf = n as f64;
        let env = log_envelope(mf, nf);
        out.push(BoundCheck::new("lem31c.x", Some(n), env / 3.0, cfg.x(n)));
        out.push(BoundCheck::new(
            "lem31c.s",
            Some(n),
            nf * env / 3.0,
            cfg.partial_sum(n),
        ));
    }

    for (l, j) in pair_indices(m, k) {
        let (xl, xj) = (cfg.x(l), cfg.x(j));
        let lhs = 4.0 * (j as f64 / l as f64).ln() / 9.0;
        out.push(BoundCheck::new("cal08", Some(l), lhs, (xl - xj) * (xl + xj)).with_pair(j));
    }

    out.push(BoundCheck::new("cal07", Some(1), mf.ln().sqrt(), cfg.x(1)));
    Ok(out)
}

/// `sqrt(ln(N/2)) / (2N) - d_W`, scaled by `N`: how far `d_W` falls short
/// of the leading lower-bound term.
pub fn wasserstein_deficit(report: &DistanceReport) -> f64 {
    let nf = report.n_worlds as f64;
    ((nf / 2.0).ln().sqrt() / (2.0 * nf) - report.d_w) * nf
}

/// Smallest `C >= 0` with `d_W >= sqrt(ln(N/2))/(2N) - C/N` for every report.
pub fn estimate_constant_from(reports: &[DistanceReport]) -> f64 {
    reports.iter().map(wasserstein_deficit).fold(0.0, f64::max)
}

pub fn estimate_wasserstein_constant(sweep: &SweepResult) -> f64 {
    estimate_constant_from(&sweep.reports)
}

/// The two-sided distance bounds with lower-bound constant `c`.
pub fn check_theorem(report: &DistanceReport, c: f64) -> Vec<BoundCheck> {
    let n = report.n_worlds;
    let nf = n as f64;
    let idx = Some(n);
    vec![
        BoundCheck::new("be1.lower", idx, 1.0 / (2.0 * nf), report.d_k),
        BoundCheck::new("be1.upper", idx, report.d_k, 55.0 / nf),
        BoundCheck::new(
            "be2.lower",
            idx,
            (nf / 2.0).ln().sqrt() / (2.0 * nf) - c / nf,
            report.d_w,
        ),
        BoundCheck::new("be2.upper", idx, report.d_w, 16.0 * nf.ln().sqrt() / nf),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedFamily {
    pub family: &'static str,
    pub reason: &'static str,
}

/// Everything checked for one `N`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorldChecks {
    pub n_worlds: usize,
    pub checks: Vec<BoundCheck>,
    pub skipped: Vec<SkippedFamily>,
}

impl WorldChecks {
    pub fn passed_count(&self) -> usize {
        self.checks.iter().filter(|c| c.passed).count()
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Per-family totals in a fixed family order.
    pub fn family_summaries(&self) -> Vec<FamilySummary> {
        let mut map: BTreeMap<&'static str, FamilySummary> = BTreeMap::new();
        for c in &self.checks {
            let e = map.entry(c.family()).or_insert_with(|| FamilySummary {
                family: c.family(),
                total: 0,
                passed: 0,
                worst: c.clone(),
            });
            e.total += 1;
            e.passed += usize::from(c.passed);
            if c.margin < e.worst.margin {
                e.worst = c.clone();
            }
        }
        map.into_values().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilySummary {
    pub family: &'static str,
    pub total: usize,
    pub passed: usize,
    /// The check with the smallest margin.
    pub worst: BoundCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorstMargin {
    pub n_worlds: usize,
    pub check: BoundCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepFailure {
    pub n_worlds: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    /// The requested `N`, in request order.
    pub n_values: Vec<usize>,
    /// One report per successfully solved `N`, in request order.
    pub reports: Vec<DistanceReport>,
    /// Parallel to `reports`.
    pub checks: Vec<WorldChecks>,
    /// Smallest margin per family over the whole sweep.
    pub worst_margins: BTreeMap<&'static str, WorstMargin>,
    /// The lower-bound constant used for `be2.lower`.
    pub wasserstein_constant: f64,
    pub failures: Vec<SweepFailure>,
}

impl SweepResult {
    pub fn all_passed(&self) -> bool {
        self.failures.is_empty() && self.checks.iter().all(WorldChecks::all_passed)
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = (usize, &BoundCheck)> {
        self.checks.iter().flat_map(|w| {
            w.checks
                .iter()
                .filter(|c| !c.passed)
                .map(move |c| (w.n_worlds, c))
        })
    }
}

/// Solves each `N` and runs every applicable check.
pub fn run_sweep(n_values: &[usize], tol: f64) -> SweepResult {
    run_sweep_with(n_values, |n| ground_state::solve(n, tol))
}

/// [`run_sweep`] with a caller-supplied way to obtain each configuration
/// (for example from a cache). Distinct `N` are processed concurrently; a
/// failure for one `N` is recorded and does not stop the others.
pub fn run_sweep_with<S>(n_values: &[usize], solver: S) -> SweepResult
where
    S: Fn(usize) -> Result<Configuration> + Sync,
{
    type Outcome = std::result::Result<(DistanceReport, WorldChecks), SweepFailure>;
    let outcomes: Vec<Outcome> = n_values
        .par_iter()
        .map(|&n| {
            let fail = |e: Error| SweepFailure {
                n_worlds: n,
                error: e.to_string(),
            };
            let cfg = solver(n).map_err(fail)?;
            let report = metrics::report(&cfg);
            let mut checks = Vec::new();
            let mut skipped = Vec::new();
            if n >= LEMMA_MIN_WORLDS {
                checks = check_lemma31(&cfg).map_err(fail)?;
            } else {
                skipped = LEMMA_FAMILIES
                    .iter()
                    .map(|&family| SkippedFamily {
                        family,
                        reason: LEMMA_SKIP_REASON,
                    })
                    .collect();
            }
            Ok((
                report,
                WorldChecks {
                    n_worlds: n,
                    checks,
                    skipped,
                },
            ))
        })
        .collect();

    let mut reports = Vec::new();
    let mut per_world = Vec::new();
    let mut failures = Vec::new();
    for o in outcomes {
        match o {
            Ok((r, w)) => {
                reports.push(r);
                per_world.push(w);
            }
            Err(f) => failures.push(f),
        }
    }

    let c = estimate_constant_from(&reports);
    for (r, w) in reports.iter().zip(per_world.iter_mut()) {
        w.checks.extend(check_theorem(r, c));
    }

    let mut worst_margins: BTreeMap<&'static str, WorstMargin> = BTreeMap::new();
    for w in &per_world {
        for check in &w.checks {
            let replace = worst_margins
                .get(check.family())
                .is_none_or(|cur| check.margin < cur.check.margin);
            if replace {
                worst_margins.insert(
                    check.family(),
                    WorstMargin {
                        n_worlds: w.n_worlds,
                        check: check.clone(),
                    },
                );
            }
        }
    }

    SweepResult {
        n_values: n_values.to_vec(),
        reports,
        checks: per_world,
        worst_margins,
        wasserstein_constant: c,
        failures,
    }
}

/// `count` values from `lo` to `hi` spaced evenly in `ln N`, rounded and
/// deduplicated.
pub fn geometric_grid(lo: usize, hi: usize, count: usize) -> Vec<usize> {
    if count == 0 || lo > hi {
        return Vec::new();
    }
    if count == 1 || lo == hi {
        return vec![lo];
    }
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    let mut v: Vec<usize> = (0..count)
        .map(|i| {
            let t = i as f64 / (count - 1) as f64;
            ((a + t * (b - a)).exp().round() as usize).clamp(lo, hi)
        })
        .collect();
    v.dedup();
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ground_state::{solve, DEFAULT_TOL};

    #[test]
    fn pass_slack() {
        assert!(BoundCheck::new("x", None, 1.0, 1.0).passed);
        assert!(BoundCheck::new("x", None, 1.0 + 1e-13, 1.0).passed);
        assert!(!BoundCheck::new("x", None, 1.0 + 1e-11, 1.0).passed);
        assert!(BoundCheck::new("x", None, 1e6 + 1e-7, 1e6).passed);
        assert!(!BoundCheck::new("x", None, 1e6 + 1e-5, 1e6).passed);
        assert!(!BoundCheck::new("x", None, 0.0, 1.0).fail().passed);
    }

    #[test]
    fn families() {
        assert_eq!(
            BoundCheck::new("lem31b.upper", None, 0.0, 1.0).family(),
            "lem31b"
        );
        assert_eq!(family_of("cal07"), "cal07");
    }

    #[test]
    fn lemma_battery_small_regime() {
        let cfg = solve(101, DEFAULT_TOL).unwrap();
        let checks = check_lemma31(&cfg).unwrap();
        let d = checks.iter().find(|c| c.name == "lem31d.lower").unwrap();
        assert_eq!(d.rhs, 0.0);
        assert!(d.passed);
        for f in LEMMA_FAMILIES {
            assert!(checks.iter().any(|c| c.family() == f), "{f}");
        }
        assert!(checks.iter().all(|c| c.passed));
        assert!(check_lemma31(&solve(100, DEFAULT_TOL).unwrap()).is_err());
    }

    #[test]
    fn lemma_battery_thousand() {
        let cfg = solve(1000, DEFAULT_TOL).unwrap();
        let checks = check_lemma31(&cfg).unwrap();
        let failed: Vec<_> = checks.iter().filter(|c| !c.passed).collect();
        assert!(failed.is_empty(), "{failed:?}");
        let cal07 = checks.iter().find(|c| c.name == "cal07").unwrap();
        assert!((cal07.lhs - 500f64.ln().sqrt()).abs() < 1e-15);
        // m = 500, k* = 24: every pair.
        assert_eq!(
            checks.iter().filter(|c| c.name == "cal08").count(),
            24 * 23 / 2
        );
    }

    #[test]
    fn pair_subsample_is_deterministic_and_bounded() {
        let a = pair_indices(500_000, 24_893);
        let b = pair_indices(500_000, 24_893);
        assert_eq!(a, b);
        assert!(
            a.len().abs_diff(PAIR_BUDGET) < PAIR_BUDGET / 20,
            "{}",
            a.len()
        );
        assert!(a.iter().all(|&(l, j)| l < j && j <= 24_893));
        assert!(a.contains(&(1, 24_893)));
        assert!(a.contains(&(1, 2)));
        assert_eq!(pair_indices(1500, 74).len(), 74 * 73 / 2);
    }

    #[test]
    fn theorem_checks() {
        let r = metrics::report(&solve(3, DEFAULT_TOL).unwrap());
        let checks = check_theorem(&r, 0.0);
        assert_eq!(checks.len(), 4);
        let lower = &checks[0];
        assert_eq!(lower.name, "be1.lower");
        assert!((lower.lhs - 1.0 / 6.0).abs() < 1e-16);
        assert!(checks.iter().all(|c| c.passed));
    }

    #[test]
    fn constant_estimate() {
        let mk = |n: usize, d_w: f64| DistanceReport {
            n_worlds: n,
            d_k: 0.0,
            d_w,
            x1: 0.0,
            scaled_dk: 0.0,
            scaled_dw: 0.0,
        };
        assert_eq!(estimate_constant_from(&[mk(1000, 1.0), mk(2000, 1.0)]), 0.0);
        let single = mk(1000, 0.0);
        let expected = 500f64.ln().sqrt() / 2.0;
        assert!((estimate_constant_from(std::slice::from_ref(&single)) - expected).abs() < 1e-14);
        assert_eq!(estimate_constant_from(&[]), 0.0);
    }

    #[test]
    fn sweep_regime_gate() {
        let s = run_sweep(&[2, 3, 4], DEFAULT_TOL);
        assert_eq!(s.reports.len(), 3);
        assert!(s.failures.is_empty());
        for w in &s.checks {
            assert_eq!(w.checks.len(), 4);
            assert_eq!(w.skipped.len(), LEMMA_FAMILIES.len());
            assert!(w.skipped.iter().all(|f| f.reason == "N ≤ 100"));
        }
        assert!(s.all_passed());
        assert_eq!(s.worst_margins.len(), 2);
    }

    #[test]
    fn sweep_full_battery_and_empty() {
        let s = run_sweep(&[101], DEFAULT_TOL);
        assert!(s.all_passed());
        assert!(s.checks[0].skipped.is_empty());
        assert_eq!(s.worst_margins.len(), 8);
        let fams: Vec<_> = s.checks[0]
            .family_summaries()
            .iter()
            .map(|f| f.family)
            .collect();
        assert_eq!(fams.len(), 8);

        let e = run_sweep(&[], DEFAULT_TOL);
        assert!(e.reports.is_empty() && e.failures.is_empty() && e.all_passed());
    }

    #[test]
    fn sweep_records_failures() {
        let s = run_sweep(&[1, 3], DEFAULT_TOL);
        assert_eq!(s.failures.len(), 1);
        assert_eq!(s.failures[0].n_worlds, 1);
        assert_eq!(s.reports.len(), 1);
        assert!(!s.all_passed());
    }

    #[test]
    fn grid() {
        assert_eq!(geometric_grid(2, 4, 3), vec![2, 3, 4]);
        assert_eq!(
            geometric_grid(100, 1_000_000, 5),
            vec![100, 1000, 10_000, 100_000, 1_000_000]
        );
        assert!(geometric_grid(5, 4, 3).is_empty());
        assert_eq!(geometric_grid(7, 7, 4), vec![7]);
    }
}

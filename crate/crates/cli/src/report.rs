//! Report formats for sweeps: CSV (one row per N), JSON (the same rows plus
//! per-family check detail) and a whitespace-separated plot table.

use std::fmt::Write as _;

use miw_core::bounds::{FamilySummary, SkippedFamily, SweepFailure, SweepResult, WorstMargin};
use serde::Serialize;

pub const CSV_HEADER: &str = "N,x1,d_K,d_W,N_dK,N_dW_scaled,checks_passed,checks_total";
pub const PLOT_HEADER: &str = "# N d_K d_W N_dK N_dW_scaled";
pub const JSON_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize)]
struct Row<'a> {
    #[serde(rename = "N")]
    n: usize,
    x1: f64,
    #[serde(rename = "d_K")]
    d_k: f64,
    #[serde(rename = "d_W")]
    d_w: f64,
    #[serde(rename = "N_dK")]
    n_dk: f64,
    #[serde(rename = "N_dW_scaled")]
    n_dw_scaled: f64,
    checks_passed: usize,
    checks_total: usize,
    families: Vec<FamilySummary>,
    skipped: &'a [SkippedFamily],
}

#[derive(Debug, Serialize)]
struct JsonReport<'a> {
    format_version: u32,
    wasserstein_constant: f64,
    all_passed: bool,
    rows: Vec<Row<'a>>,
    worst_margins: &'a std::collections::BTreeMap<&'static str, WorstMargin>,
    failures: &'a [SweepFailure],
}

fn rows(sweep: &SweepResult) -> Vec<Row<'_>> {
    sweep
        .reports
        .iter()
        .zip(&sweep.checks)
        .map(|(r, w)| Row {
            n: r.n_worlds,
            x1: r.x1,
            d_k: r.d_k,
            d_w: r.d_w,
            n_dk: r.scaled_dk,
            n_dw_scaled: r.scaled_dw,
            checks_passed: w.passed_count(),
            checks_total: w.checks.len(),
            families: w.family_summaries(),
            skipped: &w.skipped,
        })
        .collect()
}

pub fn csv(sweep: &SweepResult) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows(sweep) {
        let _ = writeln!(
            s,
            "{},{:?},{:?},{:?},{:?},{:?},{},{}",
            r.n, r.x1, r.d_k, r.d_w, r.n_dk, r.n_dw_scaled, r.checks_passed, r.checks_total
        );
    }
    s
}

pub fn json(sweep: &SweepResult) -> serde_json::Result<String> {
    let report = JsonReport {
        format_version: JSON_FORMAT_VERSION,
        wasserstein_constant: sweep.wasserstein_constant,
        all_passed: sweep.all_passed(),
        rows: rows(sweep),
        worst_margins: &sweep.worst_margins,
        failures: &sweep.failures,
    };
    let mut out = serde_json::to_string_pretty(&report)?;
    out.push('\n');
    Ok(out)
}

/// One row per N; every series is column 1 against one other column.
pub fn plot_table(sweep: &SweepResult) -> String {
    let mut s = String::from(PLOT_HEADER);
    s.push('\n');
    for r in &sweep.reports {
        let _ = writeln!(
            s,
            "{} {:?} {:?} {:?} {:?}",
            r.n_worlds, r.d_k, r.d_w, r.scaled_dk, r.scaled_dw
        );
    }
    s
}

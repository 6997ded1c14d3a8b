mod cache;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use miw_core::bounds::{geometric_grid, run_sweep_with, SweepResult};
use miw_core::gaussians::{mills_inequality_1, mills_inequality_2};
use miw_core::stein::{verify_gh_lemma41, verify_gz_properties, GridSpec, SawtoothSolution};
use miw_core::{oracle, Configuration, Precision, ZeroBiasCoupling};

use cache::{exact, Source};

/// Zero-bias identity tolerance for `coupling`.
const IDENTITY_TOL: f64 = 1e-9;
/// Closed form vs quadrature tolerance for the sawtooth solution.
const GH_ORACLE_TOL: f64 = 1e-9;

#[derive(Parser)]
#[command(
    name = "miw",
    version,
    about = "Ground states of the many-interacting-worlds oscillator and their distance to the Gaussian"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for one N and write the configuration.
    Solve(SolveArgs),
    /// Run every applicable inequality check over a geometric grid of N.
    Verify(VerifyArgs),
    /// Build the zero-bias coupling and check its identities.
    Coupling(CouplingArgs),
    /// Write d_K, d_W and their scaled versions over a grid of N as a text table.
    Plotdata(PlotArgs),
    /// Check the Stein solution envelopes, tail-ratio inequalities and the sawtooth solution.
    SteinCheck(SteinArgs),
}

#[derive(Args, Clone)]
struct SolverArgs {
    /// Bisection stops when the x_1 bracket is narrower than tol * max(1, x_1).
    #[arg(long, default_value = "1e-13")]
    tol: f64,
    #[arg(long, value_enum, default_value_t = PrecisionArg::Double)]
    precision: PrecisionArg,
    /// Directory for cached configurations (MIW_CACHE_DIR takes precedence).
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PrecisionArg {
    Double,
    Dd,
}

impl From<PrecisionArg> for Precision {
    fn from(p: PrecisionArg) -> Self {
        match p {
            PrecisionArg::Double => Precision::Double,
            PrecisionArg::Dd => Precision::DoubleDouble,
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    n: usize,
    /// Write the configuration file here as well.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args, Clone)]
struct GridArgs {
    #[arg(long)]
    n_min: usize,
    #[arg(long)]
    n_max: usize,
    /// Number of geometrically spaced N values (duplicates after rounding are dropped).
    #[arg(long)]
    steps: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Report path; standard output if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TestFunction {
    W,
    W2,
    W3,
    Sin,
    Tanh,
}

impl TestFunction {
    const ALL: [TestFunction; 5] = [Self::W, Self::W2, Self::W3, Self::Sin, Self::Tanh];

    fn label(self) -> &'static str {
        match self {
            Self::W => "w",
            Self::W2 => "w^2",
            Self::W3 => "w^3",
            Self::Sin => "sin w",
            Self::Tanh => "tanh w",
        }
    }

    fn f(self, w: f64) -> f64 {
        match self {
            Self::W => w,
            Self::W2 => w * w,
            Self::W3 => w * w * w,
            Self::Sin => w.sin(),
            Self::Tanh => w.tanh(),
        }
    }

    fn f_prime(self, w: f64) -> f64 {
        match self {
            Self::W => 1.0,
            Self::W2 => 2.0 * w,
            Self::W3 => 3.0 * w * w,
            Self::Sin => w.cos(),
            Self::Tanh => 1.0 / w.cosh().powi(2),
        }
    }
}

#[derive(Args)]
struct CouplingArgs {
    #[arg(long)]
    n: usize,
    /// Comma-separated test functions for the zero-bias identity (default: all).
    #[arg(long, value_enum, value_delimiter = ',')]
    identity_functions: Vec<TestFunction>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct PlotArgs {
    #[command(flatten)]
    grid: GridArgs,
    /// Output path; standard output if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct SteinArgs {
    /// Number of z values, log-spaced in [1e-3, 10].
    #[arg(long, default_value_t = 100)]
    z_count: usize,
    /// Grid points on [-40, 40] for the envelope checks.
    #[arg(long, default_value_t = 10_000)]
    points: usize,
    /// Grid points on (0, 40] for the tail-ratio inequalities.
    #[arg(long, default_value_t = 10_000)]
    mills_points: usize,
    /// N values for the sawtooth solution checks.
    #[arg(long, value_delimiter = ',', default_values_t = [3usize, 10, 101])]
    n: Vec<usize>,
    #[command(flatten)]
    solver: SolverArgs,
}

/// Failure classes with distinct exit codes.
enum Failure {
    /// Bad invocation: exit 2.
    Usage(String),
    /// A solver error or a failed check: exit 1.
    Run(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Run(e)
    }
}

impl From<miw_core::Error> for Failure {
    fn from(e: miw_core::Error) -> Self {
        Failure::Run(e.into())
    }
}

type CmdResult = Result<(), Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn check_solver_args(a: &SolverArgs) -> CmdResult {
    if !(a.tol > 0.0 && a.tol.is_finite()) {
        return Err(usage(format!(
            "--tol must be a positive number, got {}",
            a.tol
        )));
    }
    Ok(())
}

fn check_n(n: usize) -> CmdResult {
    if n < 2 {
        return Err(usage(format!("--n must be at least 2, got {n}")));
    }
    Ok(())
}

fn grid_values(g: &GridArgs) -> Result<Vec<usize>, Failure> {
    if g.n_min < 2 {
        return Err(usage(format!(
            "--n-min must be at least 2, got {}",
            g.n_min
        )));
    }
    if g.n_min > g.n_max {
        return Err(usage(format!(
            "--n-min ({}) is larger than --n-max ({})",
            g.n_min, g.n_max
        )));
    }
    if g.steps == 0 {
        return Err(usage("--steps must be at least 1"));
    }
    Ok(geometric_grid(g.n_min, g.n_max, g.steps))
}

fn obtain(a: &SolverArgs, n: usize) -> anyhow::Result<(Configuration, Source)> {
    let dir = cache::resolve_dir(a.cache_dir.as_deref());
    cache::load_or_solve(dir.as_deref(), n, a.tol, a.precision.into())
}

fn sweep(a: &SolverArgs, ns: &[usize]) -> SweepResult {
    let dir = cache::resolve_dir(a.cache_dir.as_deref());
    let precision: Precision = a.precision.into();
    run_sweep_with(ns, |n| {
        cache::load_or_solve(dir.as_deref(), n, a.tol, precision)
            .map(|(cfg, _)| cfg)
            .map_err(|e| miw_core::Error::InvalidConfiguration(format!("{e:#}")))
    })
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => cache::write_atomic(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_solve(a: SolveArgs) -> CmdResult {
    check_n(a.n)?;
    check_solver_args(&a.solver)?;
    let (cfg, source) = obtain(&a.solver, a.n)?;
    if let Some(out) = &a.out {
        cache::store(out, &cfg)?;
    }
    let r = cfg.residuals();
    println!("N = {}", cfg.n_worlds());
    println!("precision = {}", cfg.precision().as_str());
    println!("tol = {:e}", cfg.tol());
    println!("source = {}", source.as_str());
    println!("x_1 = {}", exact(cfg.x(1)));
    println!("zero_mean_residual = {:e}", r.zero_mean);
    println!("variance_residual = {:e}", r.variance);
    println!("recursion_residual = {:e}", r.recursion);
    println!("median_residual = {:e}", r.median);
    let ok = cfg.residuals_within_bounds();
    println!("residuals_within_bounds = {ok}");
    if ok {
        Ok(())
    } else {
        Err(Failure::Run(anyhow::anyhow!(
            "residuals exceed their bounds"
        )))
    }
}

fn print_sweep_summary(s: &SweepResult, to_stderr: bool) {
    let mut lines = Vec::new();
    lines.push(format!(
        "{} values of N, {} failed to solve; lower-bound constant C = {}",
        s.n_values.len(),
        s.failures.len(),
        s.wasserstein_constant
    ));
    for f in &s.failures {
        lines.push(format!("  N = {}: {}", f.n_worlds, f.error));
    }
    lines.push("worst margins:".to_string());
    for (family, w) in &s.worst_margins {
        let c = &w.check;
        lines.push(format!(
            "  {family:<7} {:>5}  N = {:<8} {:<13} index {:<8} margin {:e}",
            if c.passed { "ok" } else { "FAIL" },
            w.n_worlds,
            c.name,
            c.n_index.map_or("-".to_string(), |i| i.to_string()),
            c.margin
        ));
    }
    if let Some(w) = s.checks.iter().find(|w| !w.skipped.is_empty()) {
        lines.push(format!(
            "  configuration inequalities skipped for N = {} and below ({})",
            s.checks
                .iter()
                .filter(|c| !c.skipped.is_empty())
                .map(|c| c.n_worlds)
                .max()
                .unwrap_or(w.n_worlds),
            w.skipped[0].reason
        ));
    }
    for l in lines {
        if to_stderr {
            eprintln!("{l}");
        } else {
            println!("{l}");
        }
    }
}

fn cmd_verify(a: VerifyArgs) -> CmdResult {
    let ns = grid_values(&a.grid)?;
    check_solver_args(&a.solver)?;
    let s = sweep(&a.solver, &ns);
    let text = match a.format {
        Format::Csv => report::csv(&s),
        Format::Json => report::json(&s).context("serialising report")?,
    };
    emit(a.out.as_deref(), &text)?;
    print_sweep_summary(&s, a.out.is_none());
    if s.all_passed() {
        Ok(())
    } else {
        let failed = s.failed_checks().count();
        Err(Failure::Run(anyhow::anyhow!(
            "{failed} checks failed, {} values of N failed to solve",
            s.failures.len()
        )))
    }
}

fn cmd_coupling(a: CouplingArgs) -> CmdResult {
    check_n(a.n)?;
    check_solver_args(&a.solver)?;
    let (cfg, _) = obtain(&a.solver, a.n)?;
    let c = ZeroBiasCoupling::build(&cfg);
    let n = cfg.n_worlds() as f64;
    let x1 = cfg.x(1);
    let functions = if a.identity_functions.is_empty() {
        TestFunction::ALL.to_vec()
    } else {
        a.identity_functions.clone()
    };

    println!("N = {}", cfg.n_worlds());
    println!("x_1 = {}", exact(x1));
    println!("total mass of p* = {}", c.total_mass());
    println!("zero-bias identity |E W f(W) - sigma^2 E f'(W*)|:");
    let mut worst = 0.0f64;
    for f in functions {
        let r = c.zero_bias_identity_check(|w| f.f_prime(w), |w| f.f(w))?;
        worst = worst.max(r);
        println!("  f(w) = {:<8} {:e}", f.label(), r);
    }
    let (eh_w, eh_wstar) = c.sawtooth_expectation();
    println!("E h(W) = {eh_w}");
    println!("E h(W*) = {}", rounded(eh_wstar));
    println!("x_1/(2(N-1)) = {}", rounded(x1 / (2.0 * (n - 1.0))));
    println!("E|W - W*| = {}", rounded(c.expected_coupling_gap()));
    println!("2 x_1/(N-1) = {}", rounded(2.0 * x1 / (n - 1.0)));
    if worst <= IDENTITY_TOL {
        Ok(())
    } else {
        Err(Failure::Run(anyhow::anyhow!(
            "zero-bias identity residual {worst:e} exceeds {IDENTITY_TOL:e}"
        )))
    }
}

/// Twelve significant digits, printed in the shortest form.
fn rounded(v: f64) -> f64 {
    format!("{v:.11e}").parse().unwrap_or(v)
}

fn cmd_plotdata(a: PlotArgs) -> CmdResult {
    let ns = grid_values(&a.grid)?;
    check_solver_args(&a.solver)?;
    let s = sweep(&a.solver, &ns);
    emit(a.out.as_deref(), &report::plot_table(&s))?;
    if s.failures.is_empty() {
        Ok(())
    } else {
        for f in &s.failures {
            eprintln!("N = {}: {}", f.n_worlds, f.error);
        }
        Err(Failure::Run(anyhow::anyhow!(
            "{} values of N failed to solve",
            s.failures.len()
        )))
    }
}

fn cmd_stein_check(a: SteinArgs) -> CmdResult {
    check_solver_args(&a.solver)?;
    if a.points < 2 || a.mills_points < 2 || a.z_count == 0 {
        return Err(usage(
            "--points and --mills-points must be at least 2, --z-count at least 1",
        ));
    }
    for &n in &a.n {
        check_n(n)?;
    }
    let mut ok = true;

    let grid = GridSpec {
        points: a.points,
        ..GridSpec::default()
    };
    let mut violations = 0;
    let mut worst = 0.0f64;
    for i in 0..a.z_count {
        let t = if a.z_count == 1 {
            0.0
        } else {
            i as f64 / (a.z_count - 1) as f64
        };
        let z = 1e-3 * 1e4f64.powf(t);
        let r = verify_gz_properties(z, grid)?;
        violations += r.violations.len();
        worst = worst.max(r.max_violation);
        for v in r.violations.iter().take(3) {
            println!(
                "  z = {z:e}: {} at w = {}: {:e} > {:e}",
                v.property, v.w, v.lhs, v.rhs
            );
        }
    }
    println!(
        "g_z envelopes: {} z values x {} points, {violations} violations (worst excess {worst:e})",
        a.z_count, a.points
    );
    ok &= violations == 0;

    let mut min_margin = [f64::INFINITY; 2];
    let mut failed = 0;
    for i in 0..a.mills_points {
        let t = i as f64 / (a.mills_points - 1) as f64;
        let w = if i + 1 == a.mills_points {
            40.0
        } else {
            1e-8 * (40.0f64 / 1e-8).powf(t)
        };
        for (k, c) in [mills_inequality_1(w)?, mills_inequality_2(w)?]
            .iter()
            .enumerate()
        {
            failed += usize::from(!c.passed);
            min_margin[k] = min_margin[k].min(c.margin);
        }
    }
    println!(
        "tail-ratio inequalities: {} points, {failed} failures, min margins {:e} / {:e}",
        a.mills_points, min_margin[0], min_margin[1]
    );
    ok &= failed == 0;

    for &n in &a.n {
        let (cfg, _) = obtain(&a.solver, n)?;
        let sol = SawtoothSolution::new(&cfg);
        let (lo, hi) = (cfg.x(n) - 1.5, cfg.x(1) + 1.5);
        let mut diff = 0.0f64;
        for i in 0..100 {
            let w = lo + (hi - lo) * (i as f64 + 0.5) / 100.0;
            diff = diff.max((sol.g_h(w) - oracle::g_h_quadrature(&cfg, w)?).abs());
        }
        let pass = diff <= GH_ORACLE_TOL;
        ok &= pass;
        print!("g_h N = {n}: max |closed form - quadrature| = {diff:e}");
        if n > 100 {
            let r = verify_gh_lemma41(&cfg)?;
            print!(
                ", empirical constant {} over {} intervals",
                r.best_constant,
                r.table.len()
            );
        }
        println!("{}", if pass { "" } else { "  FAIL" });
    }

    if ok {
        Ok(())
    } else {
        Err(Failure::Run(anyhow::anyhow!("stein checks failed")))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Coupling(a) => cmd_coupling(a),
        Command::Plotdata(a) => cmd_plotdata(a),
        Command::SteinCheck(a) => cmd_stein_check(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

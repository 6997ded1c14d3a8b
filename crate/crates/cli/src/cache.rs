//! On-disk cache of solved configurations.
//!
//! One plain-text file per (N, tol, precision, format version). Each line is
//! `key=value`; numbers are written with 17 significant digits so they read
//! back bit-for-bit. Only the upper half `x_1 ..= x_m` is stored; the rest
//! is rebuilt by symmetry.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use miw_core::{Configuration, Precision, Residuals};

pub const FORMAT_VERSION: u32 = 1;
pub const CACHE_DIR_ENV: &str = "MIW_CACHE_DIR";

/// Full round-trip representation: 17 significant digits.
pub fn exact(v: f64) -> String {
    format!("{v:.16e}")
}

/// The cache directory to use: the environment variable wins over the flag.
pub fn resolve_dir(flag: Option<&Path>) -> Option<PathBuf> {
    match std::env::var_os(CACHE_DIR_ENV) {
        Some(v) if !v.is_empty() => Some(PathBuf::from(v)),
        _ => flag.map(Path::to_path_buf),
    }
}

pub fn file_name(n_worlds: usize, tol: f64, precision: Precision) -> String {
    format!(
        "miw-n{n_worlds}-tol{tol:e}-{}-v{FORMAT_VERSION}.txt",
        precision.as_str()
    )
}

pub fn render(cfg: &Configuration) -> String {
    let r = cfg.residuals();
    let mut s = String::new();
    let _ = writeln!(s, "format_version={FORMAT_VERSION}");
    let _ = writeln!(s, "n_worlds={}", cfg.n_worlds());
    let _ = writeln!(s, "tol={}", exact(cfg.tol()));
    let _ = writeln!(s, "precision={}", cfg.precision().as_str());
    let _ = writeln!(s, "shoot_value={}", exact(cfg.shoot_value()));
    let _ = writeln!(s, "zero_mean_residual={}", exact(r.zero_mean));
    let _ = writeln!(s, "variance_residual={}", exact(r.variance));
    let _ = writeln!(s, "recursion_residual={}", exact(r.recursion));
    let _ = writeln!(s, "median_residual={}", exact(r.median));
    let _ = writeln!(s, "half_len={}", cfg.half_locations().len());
    for (i, x) in cfg.half_locations().iter().enumerate() {
        let _ = writeln!(s, "x_{}={}", i + 1, exact(*x));
    }
    s
}

fn field<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>, key: &str) -> Result<&'a str> {
    let (no, line) = lines.next().with_context(|| format!("missing `{key}`"))?;
    match line.split_once('=') {
        Some((k, v)) if k == key => Ok(v),
        _ => bail!("line {}: expected `{key}=...`, found `{line}`", no + 1),
    }
}

fn number<T: std::str::FromStr>(v: &str, key: &str) -> Result<T>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    v.parse()
        .with_context(|| format!("bad value for `{key}`: `{v}`"))
}

/// Parses an entry and rebuilds the configuration. The stored residuals
/// must match the recomputed ones exactly.
pub fn parse(text: &str) -> Result<Configuration> {
    let mut lines = text.lines().enumerate();
    let version: u32 = number(field(&mut lines, "format_version")?, "format_version")?;
    if version != FORMAT_VERSION {
        bail!("unsupported cache format version {version}");
    }
    let n: usize = number(field(&mut lines, "n_worlds")?, "n_worlds")?;
    let tol: f64 = number(field(&mut lines, "tol")?, "tol")?;
    let precision: Precision = field(&mut lines, "precision")?
        .parse()
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    let shoot_value: f64 = number(field(&mut lines, "shoot_value")?, "shoot_value")?;
    let stored = Residuals {
        zero_mean: number(
            field(&mut lines, "zero_mean_residual")?,
            "zero_mean_residual",
        )?,
        variance: number(field(&mut lines, "variance_residual")?, "variance_residual")?,
        recursion: number(
            field(&mut lines, "recursion_residual")?,
            "recursion_residual",
        )?,
        median: number(field(&mut lines, "median_residual")?, "median_residual")?,
    };
    let half_len: usize = number(field(&mut lines, "half_len")?, "half_len")?;
    let mut half = Vec::with_capacity(half_len);
    for i in 1..=half_len {
        let key = format!("x_{i}");
        half.push(number(field(&mut lines, &key)?, &key)?);
    }
    if let Some((no, extra)) = lines.find(|(_, l)| !l.trim().is_empty()) {
        bail!("line {}: unexpected trailing content `{extra}`", no + 1);
    }
    let cfg = Configuration::from_half(n, &half, stored.median, tol, precision)?;
    if cfg.shoot_value().to_bits() != shoot_value.to_bits() {
        bail!("shoot_value does not match x_1");
    }
    if cfg.residuals() != &stored {
        bail!("stored residuals do not match the locations");
    }
    Ok(cfg)
}

/// Writes `contents` next to `path` and renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let name = path.file_name().context("output path has no file name")?;
    let tmp = dir.join(format!(
        ".{}.{}.tmp",
        name.to_string_lossy(),
        std::process::id()
    ));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.with_context(|| format!("writing {}", path.display()))
}

pub fn load(path: &Path) -> Result<Configuration> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn store(path: &Path, cfg: &Configuration) -> Result<()> {
    write_atomic(path, &render(cfg))
}

/// Where a configuration came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Cache,
    Solved,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Cache => "cache",
            Source::Solved => "solved",
        }
    }
}

/// Loads from the cache directory when a valid entry exists, otherwise
/// solves and stores. An unreadable entry is replaced.
pub fn load_or_solve(
    dir: Option<&Path>,
    n_worlds: usize,
    tol: f64,
    precision: Precision,
) -> Result<(Configuration, Source)> {
    let path = dir.map(|d| d.join(file_name(n_worlds, tol, precision)));
    if let Some(p) = &path {
        if p.exists() {
            if let Ok(cfg) = load(p) {
                if cfg.n_worlds() == n_worlds && cfg.tol() == tol && cfg.precision() == precision {
                    return Ok((cfg, Source::Cache));
                }
            }
        }
    }
    let cfg = miw_core::solve_with(n_worlds, tol, precision)?;
    if let Some(p) = &path {
        store(p, &cfg)?;
    }
    Ok((cfg, Source::Solved))
}

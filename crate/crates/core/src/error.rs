use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("argument {value} outside the domain of {op}: {expected}")]
    Domain {
        op: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("need at least 2 worlds, got {0}")]
    TooFewWorlds(usize),

    #[error("recursion diverged at step {step} (x1 = {x1})")]
    Diverged { step: usize, x1: f64 },

    #[error(
        "could not bracket the shooting root for N = {n}: g({lo}) = {g_lo}, g({hi}) = {g_hi} after {expansions} expansions"
    )]
    Bracket {
        n: usize,
        lo: f64,
        hi: f64,
        g_lo: f64,
        g_hi: f64,
        expansions: usize,
    },

    #[error(
        "shooting objective lost its bracket sign at x1 = {x1} (g = {g}, bracket [{lo}, {hi}])"
    )]
    BracketSign { x1: f64, g: f64, lo: f64, hi: f64 },

    #[error("quadrature did not reach tolerance {tol:e} on [{a}, {b}] (estimated error {err:e})")]
    Quadrature { a: f64, b: f64, tol: f64, err: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),
}

pub type Result<T> = std::result::Result<T, Error>;

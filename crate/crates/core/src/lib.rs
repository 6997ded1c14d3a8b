//! Ground state of the many-interacting-worlds harmonic oscillator, its
//! zero-bias coupling, exact distances to the standard Gaussian, and a
//! harness that checks the known inequalities against computed values.

pub mod bounds;
pub mod coupling;
pub mod error;
pub mod gaussians;
pub mod ground_state;
pub mod metrics;
pub mod oracle;
pub mod quad;
pub mod stein;
pub mod sum;

pub use bounds::{run_sweep, run_sweep_with, BoundCheck, SweepResult};
pub use coupling::ZeroBiasCoupling;
pub use error::{Error, Result};
pub use ground_state::{solve, solve_with, Configuration, Precision, Residuals, DEFAULT_TOL};
pub use metrics::DistanceReport;
pub use stein::{GridSpec, SawtoothSolution, SteinEnvelopeReport};

//! Independent slow-but-trusted reference solvers.
//!
//! These validate the fast variational path: an exhaustive min-plus scan,
//! a Godunov finite-volume entropy solver for the velocity, and a viscous
//! finite-difference solver for the ν → 0 limit. They deliberately share no
//! implementation with the fast paths beyond the grid type and the kernel
//! trait signature.

pub mod brute;
pub mod godunov;
pub mod suite;
pub mod viscous;

pub use suite::{run_oracle_suite, OracleReport};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("viscosity must be positive, got {0}")]
    BadViscosity(f64),
    #[error("viscous solver became unstable at t={time}: max |φ| = {magnitude:.3e}")]
    Instability { time: f64, magnitude: f64 },
    #[error("CFL step collapsed at t={time} (max |u| = {speed:.3e})")]
    StepCollapse { time: f64, speed: f64 },
    #[error(transparent)]
    Field(#[from] crate::field::FieldError),
    #[error(transparent)]
    Forcing(#[from] crate::forcing::ForcingError),
    #[error(transparent)]
    Solver(#[from] crate::solver::SolverError),
}

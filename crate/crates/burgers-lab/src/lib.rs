//! Numerical laboratory for the randomly kicked inviscid Burgers equation
//! on the circle, driven through its variational (Lax–Oleinik) solution
//! operator.
//!
//! The library evolves potentials φ of the Hamilton–Jacobi equation
//! φ_t + φ_x²/2 = F by alternating quadratic-kernel min-plus convolution
//! (free flight) with additive random kicks, records every argmin so that
//! action-minimising trajectories can be reconstructed exactly, and ships
//! the experiment battery that measures the exponential-contraction
//! behaviour of the flow: minimiser concentration, Ω-set diameter decay,
//! coupled-solution contraction in quotient-sup and L_p metrics, and a
//! coupling upper bound on the dual-Lipschitz distance between evolved
//! measures.
//!
//! Interchangeable strategies (min-plus kernels, initial-condition
//! samplers, experiment kinds) sit behind traits and are selected by name
//! at runtime; see [`kernel`], [`samplers`] and [`experiment`].

pub mod config;
pub mod contraction;
pub mod experiment;
pub mod field;
pub mod fit;
pub mod forcing;
pub mod kernel;
pub mod minimiser;
pub mod oracles;
pub mod output;
pub mod rng;
pub mod samplers;
pub mod solver;

pub use config::ExperimentConfig;
pub use field::{CircleSubset, FieldError, GridProfile, ProfileKind};
pub use fit::{DistanceSeries, MetricTag, RateFit};
pub use forcing::{ForcingPath, KickBasis, KickLaw};
pub use solver::{ArgminRecord, SolverState, Trajectory};

use thiserror::Error;

/// Top-level error for experiment orchestration.
#[derive(Debug, Error)]
pub enum LabError {
    #[error(transparent)]
    Field(#[from] field::FieldError),
    #[error(transparent)]
    Forcing(#[from] forcing::ForcingError),
    #[error(transparent)]
    Solver(#[from] solver::SolverError),
    #[error(transparent)]
    Minimiser(#[from] minimiser::MinimiserError),
    #[error(transparent)]
    Fit(#[from] fit::FitError),
    #[error(transparent)]
    Oracle(#[from] oracles::OracleError),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl LabError {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        LabError::Io {
            path: path.into(),
            source,
        }
    }
}

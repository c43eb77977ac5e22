//! Experiment kinds behind a common trait, registered by name and selected
//! from config/CLI.
//!
//! Each experiment turns a validated [`ExperimentConfig`] into a
//! deterministic set of artifacts (CSV series, JSON summaries, optional SVG
//! plots). Per-seed work runs on a worker pool of the configured size;
//! results are collected in task order and reduced sequentially, so the
//! artifact bytes do not depend on the worker count.

mod contract;
mod dual_lipschitz;
mod midpoint_gap;
mod omega;
mod oracle_check;
mod simulate;
mod stationary;

pub use contract::ContractExperiment;
pub use dual_lipschitz::DualLipschitzExperiment;
pub use midpoint_gap::MidpointGapExperiment;
pub use omega::OmegaExperiment;
pub use oracle_check::OracleCheckExperiment;
pub use simulate::SimulateExperiment;
pub use stationary::StationaryExperiment;

use crate::config::ExperimentConfig;
use crate::field::GridProfile;
use crate::output::{self, Artifact, Manifest};
use crate::LabError;
use rayon::prelude::*;

/// Everything an experiment hands back to the runner.
pub struct ExperimentResult {
    pub artifacts: Vec<Artifact>,
    pub summary: serde_json::Value,
    /// False when a validation-style experiment found failures
    /// (drives the oracle-failure exit code).
    pub ok: bool,
}

/// One experiment kind.
pub trait Experiment: Sync {
    fn kind(&self) -> &'static str;
    fn run(&self, cfg: &ExperimentConfig) -> Result<ExperimentResult, LabError>;
}

/// All registered experiment kinds.
pub fn registry() -> &'static [&'static dyn Experiment] {
    static EXPERIMENTS: [&dyn Experiment; 7] = [
        &SimulateExperiment,
        &ContractExperiment,
        &OmegaExperiment,
        &MidpointGapExperiment,
        &StationaryExperiment,
        &DualLipschitzExperiment,
        &OracleCheckExperiment,
    ];
    &EXPERIMENTS
}

pub fn by_kind(kind: &str) -> Option<&'static dyn Experiment> {
    registry().iter().copied().find(|e| e.kind() == kind)
}

/// Outcome of a full run including the written manifest.
pub struct RunOutcome {
    pub manifest: Manifest,
    pub all_ok: bool,
    pub warnings: Vec<String>,
}

/// Validate, dispatch, write artifacts and manifest.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutcome, LabError> {
    let validation = cfg.validate();
    if !validation.pass && !cfg.experiment.override_assumptions {
        return Err(LabError::Config(format!(
            "configuration rejected: {}",
            validation.failures.join("; ")
        )));
    }
    let exp = by_kind(&cfg.experiment.kind)
        .ok_or_else(|| LabError::Config(format!("unknown kind '{}'", cfg.experiment.kind)))?;
    let out_dir = std::path::PathBuf::from(&cfg.experiment.out_dir);
    let config_hash = cfg.config_hash();
    let resolved = cfg.to_toml();

    let result = match exp.run(cfg) {
        Ok(r) => r,
        Err(e) => {
            // Flush what we can: an incomplete manifest marking the failure.
            let _ = output::write_run(
                &out_dir,
                exp.kind(),
                &config_hash,
                &resolved,
                false,
                false,
                &[],
            );
            return Err(e);
        }
    };

    let scope = cfg.validation_scope_hash();
    let stamp = output::stamp_name(&scope);
    let oracle_validated = (exp.kind() == "oracle-check" && result.ok)
        || out_dir.join(&stamp).exists();

    let mut artifacts = result.artifacts;
    artifacts.push(Artifact::json("summary.json", &result.summary));
    if exp.kind() == "oracle-check" && result.ok {
        artifacts.push(Artifact::json(
            &stamp,
            &serde_json::json!({ "scope": scope, "config_hash": config_hash }),
        ));
    }

    let manifest = output::write_run(
        &out_dir,
        exp.kind(),
        &config_hash,
        &resolved,
        oracle_validated,
        true,
        &artifacts,
    )
    .map_err(|e| LabError::io(out_dir.display().to_string(), e))?;

    Ok(RunOutcome {
        manifest,
        all_ok: result.ok,
        warnings: validation.warnings,
    })
}

/// Deterministic fan-out over `count` tasks on a pool of `workers` threads:
/// results come back in task order regardless of scheduling.
pub fn run_parallel<T: Send>(
    workers: usize,
    count: u64,
    f: impl Fn(u64) -> Result<T, LabError> + Sync,
) -> Result<Vec<T>, LabError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| LabError::Config(format!("worker pool: {e}")))?;
    pool.install(|| (0..count).into_par_iter().map(&f).collect())
}

/// Draw the initial potential for a member: samplers cycle through the
/// configured list, and each (purpose, member) pair gets its own stream.
pub fn draw_initial(
    cfg: &ExperimentConfig,
    purpose: &str,
    member: u64,
    sampler_offset: usize,
) -> Result<GridProfile, LabError> {
    let specs = &cfg.initial.samplers;
    if specs.is_empty() {
        return Err(LabError::Config("no initial samplers configured".into()));
    }
    let spec = &specs[(member as usize + sampler_offset) % specs.len()];
    let sampler = crate::samplers::sampler_from_spec(spec).map_err(LabError::Config)?;
    let mut rng = crate::rng::rng_at(
        &crate::rng::derive_stream(cfg.forcing.seed, purpose, member),
        0,
    );
    Ok(sampler.sample(cfg.grid.n, &mut rng))
}

/// Median and interquartile range of a sample.
pub fn median_iqr(values: &[f64]) -> (f64, f64, f64) {
    assert!(!values.is_empty());
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let q = |frac: f64| -> f64 {
        let pos = frac * (sorted.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        let w = pos - lo as f64;
        sorted[lo] * (1.0 - w) + sorted[hi] * w
    };
    (q(0.5), q(0.25), q(0.75))
}

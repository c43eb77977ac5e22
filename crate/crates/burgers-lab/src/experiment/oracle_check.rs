//! Oracle validation run: the suite every configuration must pass before
//! its experiments count as validated.

use super::{Experiment, ExperimentResult};
use crate::config::ExperimentConfig;
use crate::oracles::suite;
use crate::output::Artifact;
use crate::LabError;

pub struct OracleCheckExperiment;

impl Experiment for OracleCheckExperiment {
    fn kind(&self) -> &'static str {
        "oracle-check"
    }

    fn run(&self, cfg: &ExperimentConfig) -> Result<ExperimentResult, LabError> {
        let kernel = cfg.kernel().map_err(LabError::Config)?;
        let mut reports = Vec::new();
        reports.push(suite::kernel_equivalence_report(
            kernel,
            cfg.grid.n.min(512),
            cfg.oracle_check.profiles,
            cfg.forcing.seed,
        ));
        reports.push(suite::semigroup_report(
            cfg.grid.n.min(512),
            10,
            cfg.forcing.seed,
        ));
        reports.push(suite::semiconcavity_report(
            cfg.grid.n.min(512),
            10,
            cfg.forcing.seed,
        ));
        reports.push(suite::cross_solver_report(
            cfg.grid.n.max(256),
            cfg.forcing.seed,
            0.05,
            kernel,
        )?);
        reports.push(suite::viscous_ladder_report(
            cfg.grid.n.min(512),
            cfg.forcing.seed,
            &[1e-2, 1e-3, 1e-4],
            kernel,
        )?);

        let mut jsonl = String::new();
        for r in &reports {
            jsonl.push_str(&serde_json::to_string(r).expect("report serializes"));
            jsonl.push('\n');
        }

        let all_pass = reports.iter().all(|r| r.pass);
        let summary = serde_json::json!({
            "kind": "oracle-check",
            "reports": reports,
            "all_pass": all_pass,
        });

        Ok(ExperimentResult {
            artifacts: vec![Artifact::text("oracle-reports.jsonl", jsonl)],
            summary,
            ok: all_pass,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_check_passes_and_stamps() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::default();
        cfg.experiment.kind = "oracle-check".into();
        cfg.experiment.out_dir = dir.path().to_string_lossy().into_owned();
        cfg.grid.n = 256;
        cfg.oracle_check.profiles = 5;
        let outcome = crate::experiment::run_experiment(&cfg).unwrap();
        assert!(outcome.all_ok);
        assert!(outcome.manifest.oracle_validated);
        let stamp = crate::output::stamp_name(&cfg.validation_scope_hash());
        assert!(dir.path().join(stamp).exists());

        // A later experiment in the same scope sees the stamp.
        let mut cfg2 = cfg.clone();
        cfg2.experiment.kind = "simulate".into();
        cfg2.run.horizon = 2.0;
        let outcome2 = crate::experiment::run_experiment(&cfg2).unwrap();
        assert!(outcome2.manifest.oracle_validated);
    }
}

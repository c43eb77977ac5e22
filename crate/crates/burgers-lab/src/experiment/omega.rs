//! Ω-set diameter decay experiment.

use super::{run_parallel, Experiment, ExperimentResult};
use crate::config::ExperimentConfig;
use crate::fit::fit_exponential;
use crate::minimiser::{omega_decay_for_seed, omega_resolution_floor};
use crate::output::Artifact;
use crate::solver::EvolveParams;
use crate::LabError;

pub struct OmegaExperiment;

impl Experiment for OmegaExperiment {
    fn kind(&self) -> &'static str {
        "omega"
    }

    fn run(&self, cfg: &ExperimentConfig) -> Result<ExperimentResult, LabError> {
        let basis = cfg.basis().map_err(LabError::Config)?;
        let kernel = cfg.kernel().map_err(LabError::Config)?;
        let n = cfg.grid.n;
        let floor = omega_resolution_floor(n);

        let outcomes = run_parallel(cfg.experiment.workers, cfg.omega.seeds, |seed| {
            // One φ⁰ per configured sampler; the series takes the max.
            let mut phi0s = Vec::new();
            for (i, _) in cfg.initial.samplers.iter().enumerate() {
                phi0s.push(super::draw_initial(
                    cfg,
                    &format!("omega-init-{i}"),
                    seed,
                    i,
                )?);
            }
            let path = cfg.forcing_path(seed).map_err(LabError::Config)?;
            let params = EvolveParams {
                substeps: cfg.grid.substeps,
                kernel,
                snapshot_every: 0,
            };
            let out = omega_decay_for_seed(&phi0s, cfg.run.horizon, &path, &basis, &params)
                .map_err(|e| LabError::Config(format!("seed {seed}: {e}")))?;
            let fit = fit_exponential(&out.series, floor)?;
            Ok((seed, out, fit))
        })?;

        let mut artifacts = Vec::new();
        let mut per_seed = Vec::new();
        let mut all_ok = true;
        for (seed, out, fit) in &outcomes {
            artifacts.push(Artifact::text(
                format!("omega-seed{seed}.csv"),
                crate::output::series_csv(&[(format!("seed{seed}"), &out.series)]),
            ));
            let reached_floor = out.floor_hit.is_some();
            all_ok &= fit.k_hat > 0.0 && reached_floor;
            per_seed.push(serde_json::json!({
                "seed": seed,
                "k1_hat": fit.k_hat,
                "c1_hat": fit.c_hat,
                "r2": fit.r2,
                "window": fit.window,
                "floor": out.floor,
                "floor_hit_at": out.floor_hit,
            }));
        }

        let k1s: Vec<f64> = outcomes.iter().map(|(_, _, f)| f.k_hat).collect();
        let (median, q1, q3) = super::median_iqr(&k1s);
        let summary = serde_json::json!({
            "kind": "omega",
            "seeds": cfg.omega.seeds,
            "median_k1": median,
            "iqr_k1": [q1, q3],
            "all_rates_positive_and_floored": all_ok,
            "per_seed": per_seed,
        });

        if cfg.experiment.svg {
            artifacts.push(Artifact::text(
                "plot-omega.svg",
                crate::output::svg_line_chart(
                    "omega diameter vs s'",
                    &outcomes
                        .iter()
                        .take(6)
                        .map(|(seed, out, _)| (format!("seed{seed}"), &out.series))
                        .collect::<Vec<_>>(),
                    true,
                ),
            ));
        }

        Ok(ExperimentResult {
            artifacts,
            summary,
            ok: all_ok,
        })
    }
}

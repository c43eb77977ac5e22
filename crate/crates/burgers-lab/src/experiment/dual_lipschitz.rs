//! Coupling upper bound on the dual-Lipschitz distance between two evolved
//! initial laws: paired ensembles under shared per-pair forcing.

use super::{run_parallel, Experiment, ExperimentResult};
use crate::config::ExperimentConfig;
use crate::contraction::{dual_lipschitz_upper, resolution_floor};
use crate::fit::{fit_exponential, DistanceSeries, MetricTag};
use crate::output::Artifact;
use crate::solver::{derivative_field, SolverState, Stepper};
use crate::LabError;

pub struct DualLipschitzExperiment;

impl Experiment for DualLipschitzExperiment {
    fn kind(&self) -> &'static str {
        "dual-lipschitz"
    }

    fn run(&self, cfg: &ExperimentConfig) -> Result<ExperimentResult, LabError> {
        let basis = cfg.basis().map_err(LabError::Config)?;
        let kernel = cfg.kernel().map_err(LabError::Config)?;
        if cfg.initial.samplers.len() < 2 {
            return Err(LabError::Config(
                "dual-lipschitz experiment needs two initial samplers (the laws μ₁, μ₂)".into(),
            ));
        }
        let members = cfg.dual_lipschitz.members;
        if members < 2 {
            return Err(LabError::Config("ensemble size must be at least 2".into()));
        }
        let p = cfg.dual_lipschitz.p;
        let mut t_grid = cfg.dual_lipschitz.t_grid.clone();
        t_grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let t_max = *t_grid.last().unwrap();

        // Per pair: draw from each law, evolve under shared forcing, record
        // |u − ū|_p on the t grid.
        let per_pair = run_parallel(cfg.experiment.workers, members, |i| {
            let sampler_a =
                crate::samplers::sampler_from_spec(&cfg.initial.samplers[0])
                    .map_err(LabError::Config)?;
            let sampler_b =
                crate::samplers::sampler_from_spec(&cfg.initial.samplers[1])
                    .map_err(LabError::Config)?;
            let mut rng_a = crate::rng::rng_at(
                &crate::rng::derive_stream(cfg.forcing.seed, "dual-lipschitz-init-a", i),
                0,
            );
            let mut rng_b = crate::rng::rng_at(
                &crate::rng::derive_stream(cfg.forcing.seed, "dual-lipschitz-init-b", i),
                0,
            );
            let phi0 = sampler_a.sample(cfg.grid.n, &mut rng_a);
            let phibar0 = sampler_b.sample(cfg.grid.n, &mut rng_b);
            let path = cfg.forcing_path(i).map_err(LabError::Config)?;
            let stepper = Stepper::new(&path, &basis, kernel, cfg.grid.substeps)?;
            let mut a = SolverState::initial(&phi0)?;
            let mut b = SolverState::initial(&phibar0)?;

            let mut distances = Vec::with_capacity(t_grid.len());
            let lp_diff = |a: &SolverState, b: &SolverState| -> Result<f64, LabError> {
                let ua = derivative_field(&a.phi);
                let ub = derivative_field(&b.phi);
                let diff = crate::field::velocity_difference(&ua, &ub)?;
                Ok(diff.lp_norm(p)?)
            };
            let mut grid_iter = t_grid.iter().peekable();
            if let Some(&&t0) = grid_iter.peek() {
                if t0 == 0.0 {
                    distances.push(lp_diff(&a, &b)?);
                    grid_iter.next();
                }
            }
            let end_tick = stepper.tick_of_time(t_max)?;
            for tick in 1..=end_tick {
                stepper.advance(&mut a)?;
                stepper.advance(&mut b)?;
                if let Some(&&t_next) = grid_iter.peek() {
                    if (stepper.time_of_tick(tick) - t_next).abs() < 1e-9 {
                        distances.push(lp_diff(&a, &b)?);
                        grid_iter.next();
                    }
                }
            }
            debug_assert_eq!(distances.len(), t_grid.len());
            Ok(distances)
        })?;

        // Aggregate per t over the pairs in deterministic order.
        let mut estimate_series = DistanceSeries::new(MetricTag::DualLipschitz { p });
        let mut rows = Vec::new();
        let mut halves_ok = true;
        for (k, &t) in t_grid.iter().enumerate() {
            let all: Vec<f64> = per_pair.iter().map(|d| d[k]).collect();
            let (est, se) =
                dual_lipschitz_upper(&all).map_err(|e| LabError::Config(e.to_string()))?;
            let half = all.len() / 2;
            let (e1, s1) = dual_lipschitz_upper(&all[..half])
                .map_err(|e| LabError::Config(e.to_string()))?;
            let (e2, s2) = dual_lipschitz_upper(&all[half..])
                .map_err(|e| LabError::Config(e.to_string()))?;
            let combined = (s1 * s1 + s2 * s2).sqrt();
            let agree = (e1 - e2).abs() <= 3.0 * combined.max(1e-12);
            halves_ok &= agree;
            estimate_series.push(t, est);
            rows.push(serde_json::json!({
                "t": t, "estimate": est, "se": se,
                "half_a": e1, "half_b": e2, "halves_agree_3se": agree,
            }));
        }

        let fit = fit_exponential(&estimate_series, resolution_floor(cfg.grid.n));
        let (fit_json, rate_positive) = match &fit {
            Ok(f) => (
                serde_json::json!({ "k_hat": f.k_hat, "c_hat": f.c_hat, "r2": f.r2, "window": f.window }),
                f.k_hat > 0.0,
            ),
            Err(e) => (serde_json::json!({ "error": e.to_string() }), false),
        };

        let mut csv = String::from("t,estimate,se\n");
        for row in &rows {
            csv.push_str(&format!(
                "{},{},{}\n",
                row["t"], row["estimate"], row["se"]
            ));
        }

        let ok = halves_ok && rate_positive;
        let summary = serde_json::json!({
            "kind": "dual-lipschitz",
            "p": p,
            "members": members,
            "estimates": rows,
            "fit": fit_json,
            "halves_agree_3se": halves_ok,
            "ok": ok,
        });

        let mut artifacts = vec![Artifact::text("dual-lipschitz.csv", csv)];
        if cfg.experiment.svg {
            artifacts.push(Artifact::text(
                "plot-dual-lipschitz.svg",
                crate::output::svg_line_chart(
                    "coupling upper bound on the dual-Lipschitz distance",
                    &[("estimate".into(), &estimate_series)],
                    true,
                ),
            ));
        }
        Ok(ExperimentResult {
            artifacts,
            summary,
            ok,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn estimates_decay_and_halves_agree() {
        let mut cfg = ExperimentConfig::default();
        cfg.experiment.kind = "dual-lipschitz".into();
        cfg.experiment.workers = 4;
        cfg.grid.n = 128;
        cfg.dual_lipschitz.members = 12;
        cfg.dual_lipschitz.t_grid = vec![0.0, 1.0, 2.0, 3.0, 4.0, 6.0, 8.0, 10.0];
        let result = DualLipschitzExperiment.run(&cfg).unwrap();
        assert!(result.ok, "{}", result.summary);
    }
}

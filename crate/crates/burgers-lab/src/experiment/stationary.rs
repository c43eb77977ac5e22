//! Stationary-ensemble experiment: two initial laws evolved under
//! independent forcing must produce statistically identical post-burn-in
//! summaries, and doubling the burn-in must not move them.

use super::{run_parallel, Experiment, ExperimentResult};
use crate::config::ExperimentConfig;
use crate::contraction::{average_after, stationary_member_series, summarize_members};
use crate::output::Artifact;
use crate::LabError;

pub struct StationaryExperiment;

impl Experiment for StationaryExperiment {
    fn kind(&self) -> &'static str {
        "stationary"
    }

    fn run(&self, cfg: &ExperimentConfig) -> Result<ExperimentResult, LabError> {
        let basis = cfg.basis().map_err(LabError::Config)?;
        let kernel = cfg.kernel().map_err(LabError::Config)?;
        if cfg.initial.samplers.len() < 2 {
            return Err(LabError::Config(
                "stationary experiment needs two initial samplers (two laws)".into(),
            ));
        }
        let burn_in = cfg.stationary.burn_in;
        if cfg.run.horizon < burn_in * 2.0 + 5.0 {
            return Err(LabError::Config(format!(
                "horizon {} too short for burn-in {} (need >= {})",
                cfg.run.horizon,
                burn_in,
                burn_in * 2.0 + 5.0
            )));
        }
        let members = cfg.stationary.members;

        // Task layout: law 0 members come first, law 1 after; every task has
        // its own independent forcing stream.
        let tasks = members * 2;
        let samples = run_parallel(cfg.experiment.workers, tasks, |task| {
            let law = (task / members) as usize;
            let member = task % members;
            let spec = &cfg.initial.samplers[law];
            let sampler = crate::samplers::sampler_from_spec(spec).map_err(LabError::Config)?;
            let mut rng = crate::rng::rng_at(
                &crate::rng::derive_stream(
                    cfg.forcing.seed,
                    &format!("stationary-init-{law}"),
                    member,
                ),
                0,
            );
            let phi0 = sampler.sample(cfg.grid.n, &mut rng);
            let path = cfg.forcing_path(task).map_err(LabError::Config)?;
            let series = stationary_member_series(
                &phi0,
                cfg.run.horizon,
                &path,
                &basis,
                cfg.grid.substeps,
                kernel,
            )
            .map_err(|e| LabError::Config(format!("member {task}: {e}")))?;
            Ok(series)
        })?;

        let (law_a, law_b) = samples.split_at(members as usize);
        let summarize = |slice: &[Vec<crate::contraction::SnapshotStats>],
                         burn: f64|
         -> Result<crate::contraction::EnsembleSummary, LabError> {
            let stats: Vec<_> = slice.iter().map(|s| average_after(s, burn)).collect();
            summarize_members(&stats).map_err(|e| LabError::Config(e.to_string()))
        };

        let a1 = summarize(law_a, burn_in)?;
        let b1 = summarize(law_b, burn_in)?;
        let a2 = summarize(law_a, 2.0 * burn_in)?;
        let b2 = summarize(law_b, 2.0 * burn_in)?;

        let combined_se = |x: (f64, f64), y: (f64, f64)| (x.1 * x.1 + y.1 * y.1).sqrt();
        let within = |x: (f64, f64), y: (f64, f64), k: f64| {
            (x.0 - y.0).abs() <= k * combined_se(x, y).max(1e-12)
        };
        let laws_agree_tv = within(a1.tv, b1.tv, 2.0);
        let laws_agree_l1 = within(a1.l1, b1.l1, 3.0);
        let laws_agree_energy = within(a1.energy, b1.energy, 3.0);
        let burnin_stable = within(a1.tv, a2.tv, 3.0) && within(b1.tv, b2.tv, 3.0);

        let mut csv = String::from("law,member,l1,tv,energy\n");
        for (i, series) in samples.iter().enumerate() {
            let law = i / members as usize;
            let member = i % members as usize;
            let s = average_after(series, burn_in);
            csv.push_str(&format!("{law},{member},{},{},{}\n", s.l1, s.tv, s.energy));
        }

        let to_json = |s: &crate::contraction::EnsembleSummary| {
            serde_json::json!({
                "l1": { "mean": s.l1.0, "se": s.l1.1 },
                "tv": { "mean": s.tv.0, "se": s.tv.1 },
                "energy": { "mean": s.energy.0, "se": s.energy.1 },
                "members": s.members,
            })
        };
        let ok = laws_agree_tv && laws_agree_l1 && laws_agree_energy && burnin_stable;
        let summary = serde_json::json!({
            "kind": "stationary",
            "members_per_law": members,
            "burn_in": burn_in,
            "law_a": to_json(&a1),
            "law_b": to_json(&b1),
            "law_a_double_burnin": to_json(&a2),
            "law_b_double_burnin": to_json(&b2),
            "laws_agree_tv_2se": laws_agree_tv,
            "laws_agree_l1_3se": laws_agree_l1,
            "laws_agree_energy_3se": laws_agree_energy,
            "double_burnin_stable_3se": burnin_stable,
            "ok": ok,
        });

        Ok(ExperimentResult {
            artifacts: vec![Artifact::text("stationary-members.csv", csv)],
            summary,
            ok,
        })
    }
}

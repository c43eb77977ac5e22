//! Single-trajectory simulation with snapshot emission.

use super::{draw_initial, Experiment, ExperimentResult};
use crate::config::ExperimentConfig;
use crate::output::Artifact;
use crate::solver::{derivative_field, evolve, EvolveParams, SolverState};
use crate::LabError;

pub struct SimulateExperiment;

impl Experiment for SimulateExperiment {
    fn kind(&self) -> &'static str {
        "simulate"
    }

    fn run(&self, cfg: &ExperimentConfig) -> Result<ExperimentResult, LabError> {
        let basis = cfg.basis().map_err(LabError::Config)?;
        let kernel = cfg.kernel().map_err(LabError::Config)?;
        let path = cfg.forcing_path(0).map_err(LabError::Config)?;
        let phi0 = draw_initial(cfg, "simulate-init", 0, 0)?;
        let state = SolverState::initial(&phi0)?;
        let params = EvolveParams {
            substeps: cfg.grid.substeps,
            kernel,
            snapshot_every: cfg.run.snapshot_every.max(1),
        };
        let traj = evolve(&state, cfg.run.horizon, &path, &basis, &params)?;

        let mut csv = String::from("t,x,phi,u\n");
        let mut tv_series = crate::fit::DistanceSeries::new(crate::fit::MetricTag::QuotientSupPhi);
        let mut emit = |s: &SolverState, tv_series: &mut crate::fit::DistanceSeries| {
            let u = derivative_field(&s.phi);
            for i in 0..s.n() {
                csv.push_str(&format!(
                    "{},{},{},{}\n",
                    s.time,
                    s.phi.x(i),
                    s.phi.value(i),
                    u.value(i)
                ));
            }
            tv_series.push(s.time, u.total_variation());
        };
        emit(&traj.initial, &mut tv_series);
        for s in &traj.snapshots {
            emit(s, &mut tv_series);
        }
        emit(&traj.end, &mut tv_series);

        let u_end = derivative_field(&traj.end.phi);
        let max_tv_after_1 = tv_series
            .iter()
            .filter(|(t, _)| *t >= 1.0)
            .map(|(_, v)| v)
            .fold(0.0, f64::max);
        let summary = serde_json::json!({
            "kind": "simulate",
            "horizon": cfg.run.horizon,
            "snapshots": traj.snapshots.len() + 2,
            "final": {
                "tv": u_end.total_variation(),
                "l1": u_end.lp_norm(1.0)?,
                "sup": u_end.sup_abs(),
            },
            "max_tv_after_t1": max_tv_after_1,
            "forcing_audit": { "digest": traj.end.audit.digest, "kicks": traj.end.audit.kicks },
        });

        let mut artifacts = vec![Artifact::text("trajectory.csv", csv)];
        if cfg.experiment.svg {
            artifacts.push(Artifact::text(
                "plot-tv.svg",
                crate::output::svg_line_chart(
                    "total variation of u along the run",
                    &[("tv".into(), &tv_series)],
                    false,
                ),
            ));
        }
        Ok(ExperimentResult {
            artifacts,
            summary,
            ok: true,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_forcing_zero_initial_gives_all_zero_series() {
        let mut cfg = ExperimentConfig::default();
        cfg.experiment.kind = "simulate".into();
        cfg.grid.n = 64;
        cfg.run.horizon = 3.0;
        cfg.forcing.sigma = vec![0.0; 4];
        cfg.initial.samplers = vec!["zero".into()];
        let result = SimulateExperiment.run(&cfg).unwrap();
        let csv = String::from_utf8(result.artifacts[0].bytes.clone()).unwrap();
        for line in csv.lines().skip(1) {
            let fields: Vec<&str> = line.split(',').collect();
            assert_eq!(fields[2], "0");
            assert_eq!(fields[3], "0");
        }
    }
}

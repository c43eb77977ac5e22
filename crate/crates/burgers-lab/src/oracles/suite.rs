//! The oracle validation suite: every check the CLI requires before an
//! experiment configuration counts as validated.

use super::{brute, godunov, viscous, OracleError};
use crate::field::{GridProfile, ProfileKind};
use crate::forcing::{ForcingPath, KickBasis, KickLaw};
use crate::kernel::MinPlusKernel;
use crate::rng::derive_stream;
use crate::solver::{derivative_field, evolve, EvolveParams, SolverState};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// One oracle comparison outcome.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleReport {
    pub oracle: String,
    pub norm: String,
    pub discrepancy: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub detail: String,
}

impl OracleReport {
    fn new(
        oracle: &str,
        norm: &str,
        discrepancy: f64,
        tolerance: f64,
        detail: String,
    ) -> OracleReport {
        OracleReport {
            oracle: oracle.into(),
            norm: norm.into(),
            discrepancy,
            tolerance,
            pass: discrepancy <= tolerance,
            detail,
        }
    }
}

fn smooth_profile(n: usize, seed: u64, amp: f64) -> GridProfile {
    use rand::Rng;
    let mut rng = crate::rng::rng_at(&derive_stream(seed, "oracle-profile", 0), 0);
    let coeffs: Vec<(f64, f64, f64)> = (1..=4)
        .map(|k| {
            (
                k as f64,
                amp * (rng.gen::<f64>() - 0.5) / k as f64,
                amp * (rng.gen::<f64>() - 0.5) / k as f64,
            )
        })
        .collect();
    GridProfile::from_fn(n, ProfileKind::Potential, |x| {
        coeffs
            .iter()
            .map(|(k, a, b)| a * (2.0 * PI * k * x).cos() + b * (2.0 * PI * k * x).sin())
            .sum()
    })
    .expect("valid profile")
}

/// Fast kernel vs exhaustive scan: values to 1e-12, winners exact.
pub fn kernel_equivalence_report(
    kernel: &dyn MinPlusKernel,
    n: usize,
    profiles: usize,
    seed: u64,
) -> OracleReport {
    let mut worst = 0.0_f64;
    let mut winner_mismatches = 0usize;
    for trial in 0..profiles {
        let phi = smooth_profile(n, seed + trial as u64, 0.8);
        let delta = [0.25, 0.5, 1.0][trial % 3];
        let w_max = crate::solver::auto_winding_bound(
            derivative_field(&phi).sup_abs(),
            delta,
        );
        let fast = kernel.min_plus(phi.values(), delta, w_max);
        let slow = brute::brute_force_min_plus(phi.values(), delta, w_max);
        for i in 0..n {
            worst = worst.max((fast.values[i] - slow.values[i]).abs());
            if fast.winners[i] != slow.winners[i] {
                winner_mismatches += 1;
            }
        }
    }
    let mut rep = OracleReport::new(
        "brute-force-min-plus",
        "sup |Δvalue|",
        worst,
        1e-12,
        format!(
            "{profiles} random profiles at n={n}; winner mismatches: {winner_mismatches}"
        ),
    );
    rep.pass = rep.pass && winner_mismatches == 0;
    rep
}

/// Two Δ flights vs one 2Δ flight within 5/n sup norm.
pub fn semigroup_report(n: usize, profiles: usize, seed: u64) -> OracleReport {
    let mut worst = 0.0_f64;
    for trial in 0..profiles {
        let phi = smooth_profile(n, seed + 1000 + trial as u64, 0.8);
        let once = crate::solver::hopf_lax_step(&phi, 1.0).unwrap().phi;
        let mid = crate::solver::hopf_lax_step(&phi, 0.5).unwrap().phi;
        let twice = crate::solver::hopf_lax_step(&mid, 0.5).unwrap().phi;
        let d = once
            .values()
            .iter()
            .zip(twice.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        worst = worst.max(d);
    }
    OracleReport::new(
        "semigroup-substep",
        "sup norm",
        worst,
        5.0 / n as f64,
        format!("{profiles} smooth profiles, Δ+Δ vs 2Δ at n={n}"),
    )
}

/// Post-flight semiconcavity bound at every node.
pub fn semiconcavity_report(n: usize, profiles: usize, seed: u64) -> OracleReport {
    let mut worst_excess = f64::NEG_INFINITY;
    for trial in 0..profiles {
        let phi = smooth_profile(n, seed + 2000 + trial as u64, 1.0);
        let step = crate::solver::hopf_lax_step(&phi, 0.5).unwrap();
        let rep = crate::solver::semiconcavity_check(&step.phi, 0.5);
        worst_excess = worst_excess.max(rep.worst_second_difference - rep.bound);
    }
    OracleReport::new(
        "oleinik-semiconcavity",
        "max second difference excess",
        worst_excess.max(0.0),
        0.0,
        format!("{profiles} flights at n={n}, Δ=0.5"),
    )
}

/// Lax–Oleinik-derived u vs Godunov, L₁ at t=2 on a forced post-shock
/// scenario.
pub fn cross_solver_report(
    n: usize,
    seed: u64,
    tolerance: f64,
    kernel: &dyn MinPlusKernel,
) -> Result<OracleReport, OracleError> {
    let basis = KickBasis::default_basis(n);
    let path = ForcingPath::kicked(
        derive_stream(seed, "cross-solver", 0),
        KickLaw::new(KickBasis::default_sigmas()),
    );
    // Antiderivative of sin(2πx): shock forms by t ≈ 0.16, well before t=2.
    let phi0 = GridProfile::from_fn(n, ProfileKind::Potential, |x| {
        -(2.0 * PI * x).cos() / (2.0 * PI)
    })?;
    let state = SolverState::initial(&phi0)?;
    let params = EvolveParams {
        substeps: 4,
        kernel,
        snapshot_every: 0,
    };
    let traj = evolve(&state, 2.0, &path, &basis, &params)?;
    let u_lo = derivative_field(&traj.end.phi);

    let u0 = derivative_field(&phi0);
    let run = godunov::godunov_evolve(&u0, 2.0, &path, &basis, 0.9)?;
    let u_g = run.at_time(2.0).expect("snapshot at t=2");

    let diff = crate::field::velocity_difference(&u_lo, u_g)?;
    let l1 = diff.lp_norm(1.0)?;
    Ok(OracleReport::new(
        "godunov-cross-check",
        "L1(u)",
        l1,
        tolerance,
        format!("forced post-shock scenario, n={n}, t=2"),
    ))
}

/// The ν-ladder: L₁(φ) distance to the inviscid run strictly decreasing in ν.
pub fn viscous_ladder_report(
    n: usize,
    seed: u64,
    nus: &[f64],
    kernel: &dyn MinPlusKernel,
) -> Result<OracleReport, OracleError> {
    let basis = KickBasis::default_basis(n);
    let path = ForcingPath::kicked(
        derive_stream(seed, "viscous-ladder", 0),
        KickLaw::new(KickBasis::default_sigmas()),
    );
    let phi0 = smooth_profile(n, seed + 3000, 0.6);
    let horizon = 2.0;
    let state = SolverState::initial(&phi0)?;
    let params = EvolveParams {
        substeps: 4,
        kernel,
        snapshot_every: 0,
    };
    let traj = evolve(&state, horizon, &path, &basis, &params)?;
    let inviscid = traj.end.phi.clone();

    let mut distances = Vec::new();
    for &nu in nus {
        let run = viscous::viscous_evolve(&phi0, nu, horizon, &path, &basis, 0.4)?;
        let v = run.at_time(horizon).expect("final snapshot");
        let centered_diff: Vec<f64> = {
            let raw: Vec<f64> = inviscid
                .values()
                .iter()
                .zip(v.values())
                .map(|(a, b)| a - b)
                .collect();
            let mean = raw.iter().sum::<f64>() / raw.len() as f64;
            raw.iter().map(|x| x - mean).collect()
        };
        let l1 = centered_diff.iter().map(|x| x.abs()).sum::<f64>() / n as f64;
        distances.push((nu, l1));
    }
    // Strictly decreasing in ν means increasing when scanned from large to
    // small ν.
    let mut monotone = true;
    for w in distances.windows(2) {
        if !(w[1].1 < w[0].1) {
            monotone = false;
        }
    }
    let detail = distances
        .iter()
        .map(|(nu, d)| format!("nu={nu}: {d:.3e}"))
        .collect::<Vec<_>>()
        .join(", ");
    let mut rep = OracleReport::new(
        "viscous-ladder",
        "L1(phi) vs inviscid",
        if monotone { 0.0 } else { 1.0 },
        0.5,
        detail,
    );
    rep.pass = monotone;
    Ok(rep)
}

/// Run the whole suite for an (n, kernel) configuration.
pub fn run_oracle_suite(
    n: usize,
    seed: u64,
    kernel: &dyn MinPlusKernel,
) -> Result<Vec<OracleReport>, OracleError> {
    let mut reports = Vec::new();
    reports.push(kernel_equivalence_report(kernel, n.min(512), 25, seed));
    reports.push(semigroup_report(n.min(512), 10, seed));
    reports.push(semiconcavity_report(n.min(512), 10, seed));
    reports.push(cross_solver_report(n.max(256), seed, 0.05, kernel)?);
    reports.push(viscous_ladder_report(
        n.min(512),
        seed,
        &[1e-2, 1e-3, 1e-4],
        kernel,
    )?);
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes_on_default_configuration() {
        let reports = run_oracle_suite(256, 20260810, crate::kernel::default_kernel()).unwrap();
        for r in &reports {
            assert!(r.pass, "{} failed: {r:?}", r.oracle);
        }
    }

    #[test]
    fn cross_solver_discrepancy_shrinks_with_resolution() {
        let kernel = crate::kernel::default_kernel();
        let coarse = cross_solver_report(256, 42, 1.0, kernel).unwrap();
        let fine = cross_solver_report(1024, 42, 1.0, kernel).unwrap();
        assert!(
            fine.discrepancy < coarse.discrepancy,
            "coarse {} fine {}",
            coarse.discrepancy,
            fine.discrepancy
        );
        assert!(fine.discrepancy <= 0.05, "{}", fine.discrepancy);
    }
}

//! Coupled two-solution experiments and measure-level estimators.
//!
//! Two solutions driven by the same forcing contract exponentially in the
//! quotient sup-metric on φ and, through the Gagliardo–Nirenberg
//! interpolation chain, at rate K/(2p) in L_p on u. The dual-Lipschitz
//! distance between evolved measures is bounded above by the coupling
//! estimator E min(2, |u − ū|_p) over paired ensembles — the same bound the
//! contraction theorem's proof runs through.

use crate::field::{quotient_sup_distance, GridProfile, ProfileKind};
use crate::fit::{fit_exponential, DistanceSeries, FitError, MetricTag, RateFit};
use crate::forcing::{ForcingPath, KickBasis};
use crate::solver::{derivative_field, SolverError, SolverState, Stepper};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ContractionError {
    #[error("ensemble needs at least 2 members, got {0}")]
    EnsembleTooSmall(usize),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Field(#[from] crate::field::FieldError),
    #[error(transparent)]
    Fit(#[from] FitError),
}

/// Distance floor below which series values are grid noise: 10 cells.
pub fn resolution_floor(n: usize) -> f64 {
    10.0 / n as f64
}

/// All series recorded along one coupled run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoupledSeries {
    /// L∞/ℝ distance between the potentials.
    pub phi: DistanceSeries,
    /// L_p distances between the velocities, one series per requested p.
    pub u: Vec<DistanceSeries>,
    /// Interpolation ratios |u−ū|_p / (|φ−φ̄−R|₁^{1/2p}·TV(u−ū)^{1−1/2p});
    /// degenerate points (vanishing denominator) are skipped.
    pub ratio: Vec<DistanceSeries>,
    /// Forcing audit digests of the two trajectories — must be equal.
    pub audits_equal: bool,
}

/// Interpolation ratio of a difference field; `None` when degenerate.
pub fn interpolation_ratio(
    phi_diff: &GridProfile,
    u_diff: &GridProfile,
    p: f64,
) -> Option<f64> {
    let r = phi_diff.mean();
    let centered: Vec<f64> = phi_diff.values().iter().map(|v| v - r).collect();
    let l1 = centered.iter().map(|v| v.abs()).sum::<f64>() / centered.len() as f64;
    let tv = u_diff.total_variation();
    let num = u_diff.lp_norm(p).ok()?;
    let denom = l1.powf(1.0 / (2.0 * p)) * tv.powf(1.0 - 1.0 / (2.0 * p));
    if denom < 1e-300 || !denom.is_finite() {
        return None;
    }
    Some(num / denom)
}

/// Evolve two solutions under one forcing path, recording the distance
/// series at every `snapshot_every` substeps (the t = 0 snapshot included).
pub fn coupled_distance_series(
    phi0: &GridProfile,
    phibar0: &GridProfile,
    horizon: f64,
    path: &ForcingPath,
    basis: &KickBasis,
    substeps: u32,
    kernel: &dyn crate::kernel::MinPlusKernel,
    p_list: &[f64],
    snapshot_every: u32,
) -> Result<CoupledSeries, ContractionError> {
    let stepper = Stepper::new(path, basis, kernel, substeps)?;
    let mut a = SolverState::initial(phi0)?;
    let mut b = SolverState::initial(phibar0)?;
    let end_tick = stepper.tick_of_time(horizon)?;
    let every = snapshot_every.max(1) as i64;

    let mut phi_series = DistanceSeries::new(MetricTag::QuotientSupPhi);
    let mut u_series: Vec<DistanceSeries> = p_list
        .iter()
        .map(|&p| DistanceSeries::new(MetricTag::LpVelocity { p }))
        .collect();
    let mut ratio_series: Vec<DistanceSeries> = p_list
        .iter()
        .map(|&p| DistanceSeries::new(MetricTag::InterpolationRatio { p }))
        .collect();

    let record = |t: f64,
                      a: &SolverState,
                      b: &SolverState,
                      phi_series: &mut DistanceSeries,
                      u_series: &mut [DistanceSeries],
                      ratio_series: &mut [DistanceSeries]|
     -> Result<(), ContractionError> {
        let dphi = quotient_sup_distance(&a.phi, &b.phi)?;
        phi_series.push(t, dphi);
        let ua = derivative_field(&a.phi);
        let ub = derivative_field(&b.phi);
        let udiff = crate::field::velocity_difference(&ua, &ub)?;
        let phidiff = GridProfile::new(
            ProfileKind::Potential,
            a.phi
                .values()
                .iter()
                .zip(b.phi.values())
                .map(|(x, y)| x - y)
                .collect(),
        )?;
        for (k, &p) in p_list.iter().enumerate() {
            u_series[k].push(t, udiff.lp_norm(p)?);
            if let Some(r) = interpolation_ratio(&phidiff, &udiff, p) {
                ratio_series[k].push(t, r);
            }
        }
        Ok(())
    };

    record(0.0, &a, &b, &mut phi_series, &mut u_series, &mut ratio_series)?;
    for tick in 1..=end_tick {
        stepper.advance(&mut a)?;
        stepper.advance(&mut b)?;
        if tick % every == 0 || tick == end_tick {
            record(
                stepper.time_of_tick(tick),
                &a,
                &b,
                &mut phi_series,
                &mut u_series,
                &mut ratio_series,
            )?;
        }
    }

    Ok(CoupledSeries {
        phi: phi_series,
        u: u_series,
        ratio: ratio_series,
        audits_equal: a.audit == b.audit,
    })
}

/// Verifies the L₁-coupling monotonicity: |u−ū|₁ never increases between
/// consecutive snapshots beyond `1e-9 + 4/n` per step. Returns the worst
/// observed increase.
pub fn l1_monotonicity_violation(series: &DistanceSeries, n: usize) -> f64 {
    let slack = 1e-9 + 4.0 / n as f64;
    let mut worst = f64::NEG_INFINITY;
    for w in series.values.windows(2) {
        worst = worst.max(w[1] - w[0] - slack);
    }
    worst
}

/// Rate-chain verdict for one p.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateChainEntry {
    pub p: f64,
    pub fit_u: RateFit,
    /// Required rate K̂_φ/(2p) minus the 25% tolerance.
    pub required: f64,
    pub rate_ok: bool,
    /// Max interpolation ratio over the first 10% of valid points, and over
    /// the rest; boundedness means the latter does not exceed the former.
    pub ratio_early_max: Option<f64>,
    pub ratio_late_max: Option<f64>,
    pub ratio_bounded: Option<bool>,
    pub degenerate: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateChainReport {
    pub fit_phi: RateFit,
    pub entries: Vec<RateChainEntry>,
    pub all_ok: bool,
}

/// Checks `K̂_u(p) ≥ K̂_φ/(2p) − 25%` for each p and the boundedness of the
/// interpolation ratio along the run.
pub fn rate_chain_check(series: &CoupledSeries, n: usize) -> Result<RateChainReport, ContractionError> {
    let floor = resolution_floor(n);
    let fit_phi = fit_exponential(&series.phi, floor)?;
    let mut entries = Vec::new();
    let mut all_ok = true;
    for (u_s, ratio_s) in series.u.iter().zip(&series.ratio) {
        let p = match u_s.metric {
            MetricTag::LpVelocity { p } => p,
            _ => unreachable!("u series carries LpVelocity tag"),
        };
        let fit_u = fit_exponential(u_s, floor)?;
        let target = fit_phi.k_hat / (2.0 * p);
        let required = target - 0.25 * target;
        let rate_ok = fit_u.k_hat >= required;

        // Ratio boundedness over the decaying window only: once the φ
        // distance sits on the floor the difference fields are grid noise.
        let t_stop = fit_phi.window.1;
        let valid: Vec<f64> = ratio_s
            .iter()
            .filter(|(t, _)| *t <= t_stop)
            .map(|(_, v)| v)
            .collect();
        let (early, late, bounded, degenerate) = if valid.len() < 10 {
            (None, None, None, true)
        } else {
            let head = (valid.len() / 10).max(1);
            let early_max = valid[..head].iter().cloned().fold(0.0, f64::max);
            let late_max = valid[head..].iter().cloned().fold(0.0, f64::max);
            let ok = late_max <= early_max * (1.0 + 1e-9) + 1e-12;
            (Some(early_max), Some(late_max), Some(ok), false)
        };

        all_ok &= rate_ok && bounded.unwrap_or(true);
        entries.push(RateChainEntry {
            p,
            fit_u,
            required,
            rate_ok,
            ratio_early_max: early,
            ratio_late_max: late,
            ratio_bounded: bounded,
            degenerate,
        });
    }
    Ok(RateChainReport {
        fit_phi,
        entries,
        all_ok,
    })
}

/// Monte Carlo mean and standard error of `min(2, d_i)` over paired
/// per-member distances — the coupling upper bound on the dual-Lipschitz
/// distance (any test functional with `|g|_{L(p)} ≤ 1` satisfies
/// `|g(u) − g(ū)| ≤ min(2, |u−ū|_p)`).
pub fn dual_lipschitz_upper(pair_distances: &[f64]) -> Result<(f64, f64), ContractionError> {
    let m = pair_distances.len();
    if m < 2 {
        return Err(ContractionError::EnsembleTooSmall(m));
    }
    let clipped: Vec<f64> = pair_distances.iter().map(|d| d.min(2.0)).collect();
    // Dirac ensembles: the mean of equal values is that value, exactly.
    if clipped.windows(2).all(|w| w[0] == w[1]) {
        return Ok((clipped[0], 0.0));
    }
    let mean = clipped.iter().sum::<f64>() / m as f64;
    let var = clipped.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (m as f64 - 1.0);
    let se = (var / m as f64).sqrt();
    Ok((mean, se))
}

/// Time-averaged observables of one trajectory after burn-in.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MemberStats {
    pub l1: f64,
    pub tv: f64,
    pub energy: f64,
    pub samples: usize,
}

/// Observables of one snapshot.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SnapshotStats {
    pub t: f64,
    pub l1: f64,
    pub tv: f64,
    pub energy: f64,
}

/// Evolve one member and record `(|u|₁, TV(u), ½|u|₂²)` at unit times.
pub fn stationary_member_series(
    phi0: &GridProfile,
    horizon: f64,
    path: &ForcingPath,
    basis: &KickBasis,
    substeps: u32,
    kernel: &dyn crate::kernel::MinPlusKernel,
) -> Result<Vec<SnapshotStats>, ContractionError> {
    let stepper = Stepper::new(path, basis, kernel, substeps)?;
    let mut state = SolverState::initial(phi0)?;
    let end_tick = stepper.tick_of_time(horizon)?;
    let unit_ticks = stepper.tick_of_time(1.0)?.max(1);
    let mut out = Vec::new();
    for tick in 1..=end_tick {
        stepper.advance(&mut state)?;
        if tick % unit_ticks == 0 {
            let u = state.velocity();
            let l2 = u.lp_norm(2.0)?;
            out.push(SnapshotStats {
                t: stepper.time_of_tick(tick),
                l1: u.lp_norm(1.0)?,
                tv: u.total_variation(),
                energy: 0.5 * l2 * l2,
            });
        }
    }
    Ok(out)
}

/// Time average of the samples strictly after `burn_in`.
pub fn average_after(samples: &[SnapshotStats], burn_in: f64) -> MemberStats {
    let kept: Vec<&SnapshotStats> = samples.iter().filter(|s| s.t > burn_in).collect();
    let m = kept.len().max(1) as f64;
    MemberStats {
        l1: kept.iter().map(|s| s.l1).sum::<f64>() / m,
        tv: kept.iter().map(|s| s.tv).sum::<f64>() / m,
        energy: kept.iter().map(|s| s.energy).sum::<f64>() / m,
        samples: kept.len(),
    }
}

/// Compatibility wrapper: series then average.
pub fn stationary_member_stats(
    phi0: &GridProfile,
    burn_in: f64,
    horizon: f64,
    path: &ForcingPath,
    basis: &KickBasis,
    substeps: u32,
    kernel: &dyn crate::kernel::MinPlusKernel,
) -> Result<MemberStats, ContractionError> {
    let series = stationary_member_series(phi0, horizon, path, basis, substeps, kernel)?;
    Ok(average_after(&series, burn_in))
}

/// Mean ± standard error across members.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub l1: (f64, f64),
    pub tv: (f64, f64),
    pub energy: (f64, f64),
    pub members: usize,
}

pub fn summarize_members(stats: &[MemberStats]) -> Result<EnsembleSummary, ContractionError> {
    let m = stats.len();
    if m < 2 {
        return Err(ContractionError::EnsembleTooSmall(m));
    }
    let mean_se = |f: &dyn Fn(&MemberStats) -> f64| -> (f64, f64) {
        let mean = stats.iter().map(|s| f(s)).sum::<f64>() / m as f64;
        let var = stats
            .iter()
            .map(|s| (f(s) - mean) * (f(s) - mean))
            .sum::<f64>()
            / (m as f64 - 1.0);
        (mean, (var / m as f64).sqrt())
    };
    Ok(EnsembleSummary {
        l1: mean_se(&|s| s.l1),
        tv: mean_se(&|s| s.tv),
        energy: mean_se(&|s| s.energy),
        members: m,
    })
}

// temporary probe
#[cfg(test)]
#[test]
fn probe_decay_timescale() {
    use crate::field::*;
    use crate::forcing::*;
    use crate::rng::derive_stream;
    use std::f64::consts::PI;
    let n = 256;
    let horizon = 40.0;
    for sigma in [0.1_f64, 0.05, 0.025] {
        let mut r2s = Vec::new();
        let mut ks = Vec::new();
        let mut errs = 0;
        for seed in 0..12u64 {
            use rand::Rng;
            let mut rng = crate::rng::rng_at(&derive_stream(seed, "probe", 0), 0);
            let mut mk = |rng: &mut rand_chacha::ChaCha8Rng| {
                let c: Vec<(f64,f64,f64)> = (1..=3).map(|k| (k as f64, 0.4*(rng.gen::<f64>()-0.5), 0.4*(rng.gen::<f64>()-0.5))).collect();
                GridProfile::from_fn(n, ProfileKind::Potential, |x| c.iter().map(|(k,a,b)| a*(2.0*PI*k*x).cos()+b*(2.0*PI*k*x).sin()).sum()).unwrap()
            };
            let phi0 = mk(&mut rng);
            let path = ForcingPath::kicked(derive_stream(seed, "forcing", 0), KickLaw::new(vec![sigma, sigma, sigma/2.0, sigma/2.0]));
            let basis = KickBasis::default_basis(n);
            let state = crate::solver::SolverState::initial(&phi0).unwrap();
            let traj = crate::solver::evolve(&state, horizon, &path, &basis, &crate::solver::EvolveParams::default()).unwrap();
            // Max over several end anchors of d(Omega) at matching s'.
            let anchors = [horizon, horizon - 2.0, horizon - 4.0, horizon - 6.0, horizon - 8.0];
            let s_max = horizon - 8.0;
            let mut series = crate::fit::DistanceSeries::new(crate::fit::MetricTag::OmegaDiameter);
            let dsub = traj.dsub;
            let steps = (s_max / dsub).round() as i64;
            let mut per_anchor = Vec::new();
            for &a in &anchors {
                let end_tick = traj.tick_of_time(a).unwrap();
                let chains = crate::minimiser::backtrack_all(&traj, end_tick).unwrap();
                per_anchor.push((end_tick, chains));
            }
            for k in 1..=steps {
                let sp = k as f64 * dsub;
                let mut worst = 0.0_f64;
                for (end_tick, chains) in &per_anchor {
                    let tick = end_tick - k;
                    let col = chains.column_at_tick(*tick).unwrap();
                    let mut uniq: Vec<u32> = col.to_vec();
                    uniq.sort_unstable();
                    uniq.dedup();
                    let z = CircleSubset::new(uniq.iter().map(|&j| j as f64 / n as f64).collect()).unwrap();
                    worst = worst.max(circle_diameter(&z));
                }
                series.push(sp, worst);
            }
            match crate::fit::fit_exponential(&series, 2.0 / n as f64) {
                Ok(f) => { r2s.push(f.r2); ks.push(f.k_hat); },
                Err(_) => errs += 1,
            }
        }
        r2s.sort_by(|a,b| a.partial_cmp(b).unwrap());
        ks.sort_by(|a,b| a.partial_cmp(b).unwrap());
        let min = r2s.first().copied().unwrap_or(f64::NAN);
        let med = r2s.get(r2s.len()/2).copied().unwrap_or(f64::NAN);
        let kmed = ks.get(ks.len()/2).copied().unwrap_or(f64::NAN);
        println!("omega-anchored sigma={sigma}: minR2={min:.3} medR2={med:.3} medK={kmed:.2} errs={errs}");
    }
}

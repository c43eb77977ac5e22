//! The pathwise variational solution operator for the kicked dynamics.
//!
//! A trajectory alternates free flights — quadratic-kernel min-plus
//! convolution of the potential — with additive kicks at the kick times.
//! Every flight stores which source node (and winding) won at each endpoint,
//! so action-minimising curves can be reconstructed afterwards by following
//! the winner chain backwards.
//!
//! Kicks act at the end of the flight into their kick time: the solution is
//! right-continuous in time and sampling at a kick time reports the
//! post-kick value. Potentials are mean-normalized after every step; the
//! subtracted constants accumulate in [`SolverState::offset`] so the
//! un-normalized value `φ + offset` still satisfies the variational identity
//! `φ(t,x) = φ⁰(γ(0)) + A(γ)`.

use crate::field::{FieldError, GridProfile, ProfileKind};
use crate::forcing::{ForcingAudit, ForcingError, ForcingPath, KickBasis};
use crate::kernel::{MinPlusKernel, SourceRef};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("flight duration must be positive, got {0}")]
    BadDuration(f64),
    #[error("substeps must be at least 1")]
    BadSubsteps,
    #[error("horizon {horizon} is not ahead of state time {time}")]
    HorizonNotAhead { time: f64, horizon: f64 },
    #[error("time {0} does not align with the substep grid")]
    NotAligned(f64),
    #[error("winding truncation saturated: winner reached |m| = {w_max} at tick {tick}")]
    WindingSaturated { w_max: i32, tick: i64 },
    #[error("profile sizes do not match: {0} vs {1}")]
    SizeMismatch(usize, usize),
    #[error("expected a potential-like profile")]
    NotPotential,
    #[error(transparent)]
    Forcing(#[from] ForcingError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Winning source per endpoint node for one flight of duration `delta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArgminRecord {
    delta: f64,
    winners: Vec<SourceRef>,
}

impl ArgminRecord {
    pub fn new(delta: f64, winners: Vec<SourceRef>) -> Self {
        ArgminRecord { delta, winners }
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn winners(&self) -> &[SourceRef] {
        &self.winners
    }

    pub fn n(&self) -> usize {
        self.winners.len()
    }

    pub fn max_abs_winding(&self) -> i32 {
        self.winners.iter().map(|w| w.winding.abs()).max().unwrap_or(0)
    }

    /// Total monotonicity of the quadratic kernel: unrolled winner columns
    /// are non-decreasing in the endpoint index.
    pub fn is_monotone(&self) -> bool {
        let n = self.winners.len();
        self.winners
            .windows(2)
            .all(|w| w[0].unrolled(n) <= w[1].unrolled(n))
    }

    /// Signed displacement `x_i − (source position)` of endpoint `i`'s segment.
    pub fn displacement(&self, i: usize) -> f64 {
        let n = self.winners.len();
        (i as i64 - self.winners[i].unrolled(n)) as f64 / n as f64
    }
}

/// Winding window `W = ceil(v_sup·Δ) + 1`: minimiser speed is bounded by the
/// velocity scale, so farther windings cannot compete.
pub fn auto_winding_bound(v_sup: f64, delta: f64) -> i32 {
    ((v_sup * delta).ceil() as i32 + 1).max(1)
}

/// One flight without normalization: raw min-plus values plus the record.
pub fn hopf_lax_raw(
    phi: &GridProfile,
    delta: f64,
    w_max: i32,
    kernel: &dyn MinPlusKernel,
) -> Result<(Vec<f64>, ArgminRecord), SolverError> {
    if !(delta > 0.0) {
        return Err(SolverError::BadDuration(delta));
    }
    let out = kernel.min_plus(phi.values(), delta, w_max);
    let record = ArgminRecord::new(delta, out.winners);
    if record.max_abs_winding() >= w_max {
        return Err(SolverError::WindingSaturated { w_max, tick: -1 });
    }
    Ok((out.values, record))
}

/// Result of one normalized Hopf–Lax flight.
#[derive(Debug, Clone)]
pub struct HopfLaxStep {
    pub phi: GridProfile,
    pub record: ArgminRecord,
    /// Mean subtracted during normalization; `phi + mean_shift` is the raw
    /// min-plus output.
    pub mean_shift: f64,
}

/// One free flight of duration Δ with the default kernel and automatic
/// winding window; output mean-normalized.
pub fn hopf_lax_step(phi: &GridProfile, delta: f64) -> Result<HopfLaxStep, SolverError> {
    hopf_lax_step_with(phi, delta, crate::kernel::default_kernel())
}

pub fn hopf_lax_step_with(
    phi: &GridProfile,
    delta: f64,
    kernel: &dyn MinPlusKernel,
) -> Result<HopfLaxStep, SolverError> {
    let v_sup = derivative_field(phi).sup_abs();
    let w_max = auto_winding_bound(v_sup, delta);
    let (raw, record) = hopf_lax_raw(phi, delta, w_max, kernel)?;
    let raw = GridProfile::new(ProfileKind::Potential, raw)?;
    let mean_shift = raw.mean();
    let phi = raw.mean_normalize();
    Ok(HopfLaxStep {
        phi,
        record,
        mean_shift,
    })
}

/// Additive kick `φ + F`, mean-normalized.
pub fn apply_kick(phi: &GridProfile, f: &GridProfile) -> Result<GridProfile, SolverError> {
    Ok(apply_kick_with_shift(phi, f)?.0)
}

/// Kick with the subtracted normalization constant reported.
pub fn apply_kick_with_shift(
    phi: &GridProfile,
    f: &GridProfile,
) -> Result<(GridProfile, f64), SolverError> {
    if phi.n() != f.n() {
        return Err(SolverError::SizeMismatch(phi.n(), f.n()));
    }
    let values: Vec<f64> = phi
        .values()
        .iter()
        .zip(f.values())
        .map(|(a, b)| a + b)
        .collect();
    let raw = GridProfile::new(ProfileKind::Potential, values)?;
    let shift = raw.mean();
    Ok((raw.mean_normalize(), shift))
}

/// Forward-difference velocity `u_i = n·(φ_{i+1} − φ_i)`. The periodic
/// telescoping sum vanishes analytically; the rounding-level residual mean is
/// removed so velocity profiles always carry exactly zero-mean data.
pub fn derivative_field(phi: &GridProfile) -> GridProfile {
    let n = phi.n();
    let nf = n as f64;
    let v = phi.values();
    let mut u: Vec<f64> = (0..n).map(|i| nf * (v[(i + 1) % n] - v[i])).collect();
    let mean = u.iter().sum::<f64>() / nf;
    if mean != 0.0 {
        for x in u.iter_mut() {
            *x -= mean;
        }
    }
    GridProfile::new(ProfileKind::Velocity, u).expect("derivative profile is valid")
}

/// Oleinik-type semiconcavity certificate of a post-flight profile.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SemiconcavityReport {
    pub pass: bool,
    pub bound: f64,
    pub worst_node: usize,
    pub worst_second_difference: f64,
}

/// Inf-convolution with kernel x²/(2Δ) bounds centered second differences by
/// h²/Δ; checks `φ_{i+1} − 2φ_i + φ_{i−1} ≤ (1/Δ)(1/n)² + 1e-10` at every node.
pub fn semiconcavity_check(phi_after: &GridProfile, delta: f64) -> SemiconcavityReport {
    let n = phi_after.n();
    let v = phi_after.values();
    let bound = (1.0 / delta) * (1.0 / (n as f64)).powi(2) + 1e-10;
    let mut worst = f64::NEG_INFINITY;
    let mut worst_node = 0;
    for i in 0..n {
        let dd = v[(i + 1) % n] - 2.0 * v[i] + v[(i + n - 1) % n];
        if dd > worst {
            worst = dd;
            worst_node = i;
        }
    }
    SemiconcavityReport {
        pass: worst <= bound,
        bound,
        worst_node,
        worst_second_difference: worst,
    }
}

/// Solver state at one substep boundary.
///
/// `offset` accumulates every constant subtracted by normalization (including
/// the initial one), so `phi + offset` is the un-normalized solution value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverState {
    pub tick: i64,
    pub time: f64,
    pub phi: GridProfile,
    pub offset: f64,
    pub audit: ForcingAudit,
}

impl SolverState {
    /// Start state at time 0 from a raw potential.
    pub fn initial(phi0: &GridProfile) -> Result<Self, SolverError> {
        if phi0.kind() != ProfileKind::Potential {
            return Err(SolverError::NotPotential);
        }
        let offset = phi0.mean();
        let phi = phi0.mean_normalize();
        Ok(SolverState {
            tick: 0,
            time: 0.0,
            phi,
            offset,
            audit: ForcingAudit::default(),
        })
    }

    pub fn n(&self) -> usize {
        self.phi.n()
    }

    pub fn velocity(&self) -> GridProfile {
        derivative_field(&self.phi)
    }
}

/// A realized kick: index, coefficients, and the combined potential.
#[derive(Debug, Clone)]
pub struct KickRealization {
    pub index: u64,
    pub tick: i64,
    pub coefficients: Vec<f64>,
    pub potential: GridProfile,
}

/// Advances solver states one substep at a time against a fixed forcing
/// path; coupled trajectories share one stepper so they consume identical
/// kicks by construction.
pub struct Stepper<'a> {
    path: &'a ForcingPath,
    basis: &'a KickBasis,
    kernel: &'a dyn MinPlusKernel,
    dsub: f64,
    kick_every: u32,
}

/// What one substep did: the flight record, plus the kick if the substep
/// landed on a kick time.
pub struct StepOutcome {
    pub record: ArgminRecord,
    pub kick: Option<KickRealization>,
}

impl<'a> Stepper<'a> {
    pub fn new(
        path: &'a ForcingPath,
        basis: &'a KickBasis,
        kernel: &'a dyn MinPlusKernel,
        substeps: u32,
    ) -> Result<Self, SolverError> {
        if substeps == 0 {
            return Err(SolverError::BadSubsteps);
        }
        // White-mode intervals are already fine; never subdivide them.
        let kick_every = match path.mode() {
            crate::forcing::ForcingMode::Kicked => substeps,
            crate::forcing::ForcingMode::White { .. } => 1,
        };
        let dsub = path.kick_interval() / kick_every as f64;
        Ok(Stepper {
            path,
            basis,
            kernel,
            dsub,
            kick_every,
        })
    }

    pub fn dsub(&self) -> f64 {
        self.dsub
    }

    pub fn kick_every(&self) -> u32 {
        self.kick_every
    }

    pub fn time_of_tick(&self, tick: i64) -> f64 {
        tick as f64 * self.dsub
    }

    pub fn tick_of_time(&self, t: f64) -> Result<i64, SolverError> {
        let tick = (t / self.dsub).round() as i64;
        if (tick as f64 * self.dsub - t).abs() > 1e-9 {
            return Err(SolverError::NotAligned(t));
        }
        Ok(tick)
    }

    /// One flight (and the kick, when due). Returns the step's records.
    pub fn advance(&self, state: &mut SolverState) -> Result<StepOutcome, SolverError> {
        let v_sup = derivative_field(&state.phi).sup_abs();
        let w_max = auto_winding_bound(v_sup, self.dsub);
        let (raw, record) =
            hopf_lax_raw(&state.phi, self.dsub, w_max, self.kernel).map_err(|e| match e {
                SolverError::WindingSaturated { w_max, .. } => SolverError::WindingSaturated {
                    w_max,
                    tick: state.tick + 1,
                },
                other => other,
            })?;
        let raw = GridProfile::new(ProfileKind::Potential, raw)?;
        let shift = raw.mean();
        state.phi = raw.mean_normalize();
        state.offset += shift;
        state.tick += 1;
        state.time = self.time_of_tick(state.tick);

        let kick = if state.tick.rem_euclid(self.kick_every as i64) == 0 {
            let index = (state.tick / self.kick_every as i64) as u64;
            let coefficients = self.path.sample_kick(index)?;
            state.audit.absorb(index, &coefficients);
            let potential = crate::forcing::kick_potential(&coefficients, self.basis)?;
            let (phi, shift) = apply_kick_with_shift(&state.phi, &potential)?;
            state.phi = phi;
            state.offset += shift;
            Some(KickRealization {
                index,
                tick: state.tick,
                coefficients,
                potential,
            })
        } else {
            None
        };

        Ok(StepOutcome { record, kick })
    }
}

/// Evolution parameters: flight substeps per kick interval, kernel choice,
/// and snapshot cadence (in substeps; 0 keeps endpoints only).
pub struct EvolveParams<'a> {
    pub substeps: u32,
    pub kernel: &'a dyn MinPlusKernel,
    pub snapshot_every: u32,
}

impl Default for EvolveParams<'static> {
    fn default() -> Self {
        EvolveParams {
            substeps: 4,
            kernel: crate::kernel::default_kernel(),
            snapshot_every: 0,
        }
    }
}

/// A fully recorded evolution: every flight's argmin record, every realized
/// kick, and snapshots of the state.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub dsub: f64,
    pub kick_every: u32,
    pub start_tick: i64,
    pub initial: SolverState,
    pub flights: Vec<ArgminRecord>,
    pub kicks: Vec<KickRealization>,
    pub snapshots: Vec<SolverState>,
    pub end: SolverState,
}

impl Trajectory {
    pub fn n(&self) -> usize {
        self.initial.n()
    }

    pub fn end_tick(&self) -> i64 {
        self.start_tick + self.flights.len() as i64
    }

    pub fn time_of_tick(&self, tick: i64) -> f64 {
        tick as f64 * self.dsub
    }

    pub fn tick_of_time(&self, t: f64) -> Result<i64, SolverError> {
        let tick = (t / self.dsub).round() as i64;
        if (tick as f64 * self.dsub - t).abs() > 1e-9 {
            return Err(SolverError::NotAligned(t));
        }
        Ok(tick)
    }

    /// Record of the flight that ends at `tick`.
    pub fn flight_ending_at(&self, tick: i64) -> Option<&ArgminRecord> {
        let idx = tick - self.start_tick - 1;
        if idx < 0 {
            return None;
        }
        self.flights.get(idx as usize)
    }

    pub fn kick_at_tick(&self, tick: i64) -> Option<&KickRealization> {
        if tick.rem_euclid(self.kick_every as i64) != 0 {
            return None;
        }
        self.kicks.iter().find(|k| k.tick == tick)
    }

    pub fn snapshot_at(&self, tick: i64) -> Option<&SolverState> {
        if tick == self.start_tick {
            return Some(&self.initial);
        }
        if tick == self.end.tick {
            return Some(&self.end);
        }
        self.snapshots.iter().find(|s| s.tick == tick)
    }
}

/// Evolve `state` to `horizon`, alternating flights and kicks, recording the
/// full history for backtracking.
pub fn evolve(
    state: &SolverState,
    horizon: f64,
    path: &ForcingPath,
    basis: &KickBasis,
    params: &EvolveParams,
) -> Result<Trajectory, SolverError> {
    if horizon <= state.time {
        return Err(SolverError::HorizonNotAhead {
            time: state.time,
            horizon,
        });
    }
    if basis.n() != state.n() {
        return Err(SolverError::SizeMismatch(state.n(), basis.n()));
    }
    let stepper = Stepper::new(path, basis, params.kernel, params.substeps)?;
    let start_tick = stepper.tick_of_time(state.time)?;
    if start_tick != state.tick {
        return Err(SolverError::NotAligned(state.time));
    }
    let end_tick = stepper.tick_of_time(horizon)?;

    let mut current = state.clone();
    let mut flights = Vec::with_capacity((end_tick - start_tick) as usize);
    let mut kicks = Vec::new();
    let mut snapshots = Vec::new();

    for tick in (start_tick + 1)..=end_tick {
        let outcome = stepper.advance(&mut current)?;
        flights.push(outcome.record);
        if let Some(k) = outcome.kick {
            kicks.push(k);
        }
        if params.snapshot_every > 0
            && tick != end_tick
            && (tick - start_tick).rem_euclid(params.snapshot_every as i64) == 0
        {
            snapshots.push(current.clone());
        }
    }

    Ok(Trajectory {
        dsub: stepper.dsub(),
        kick_every: stepper.kick_every(),
        start_tick,
        initial: state.clone(),
        flights,
        kicks,
        snapshots,
        end: current,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::quotient_sup_distance;
    use crate::forcing::{KickBasis, KickLaw};
    use crate::rng::derive_stream;
    use rand::Rng;
    use std::f64::consts::PI;

    fn smooth_random(n: usize, seed: u64, amp: f64) -> GridProfile {
        let mut rng = crate::rng::rng_at(&derive_stream(seed, "solver-test", 0), 0);
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
        .unwrap()
    }

    #[test]
    fn flat_profile_fixed_point() {
        let phi = GridProfile::zeros(64, ProfileKind::Potential).unwrap();
        let step = hopf_lax_step(&phi, 0.7).unwrap();
        assert!(step.phi.values().iter().all(|&v| v == 0.0));
        for (i, w) in step.record.winners().iter().enumerate() {
            assert_eq!(w.node as usize, i);
            assert_eq!(w.winding, 0);
        }
    }

    #[test]
    fn additive_constant_equivariance() {
        // Constants commute with the flight: identical winners, raw values
        // shifted by c to rounding accuracy.
        let n = 128;
        let phi = smooth_random(n, 11, 0.5);
        for c in [1.0, -3.5, 0.125] {
            let shifted =
                GridProfile::potential(phi.values().iter().map(|v| v + c).collect()).unwrap();
            let kernel = crate::kernel::default_kernel();
            let (raw_a, rec_a) = hopf_lax_raw(&phi, 0.5, 3, kernel).unwrap();
            let (raw_b, rec_b) = hopf_lax_raw(&shifted, 0.5, 3, kernel).unwrap();
            assert_eq!(rec_a.winners(), rec_b.winners(), "c={c}");
            for i in 0..n {
                assert!((raw_b[i] - raw_a[i] - c).abs() < 1e-12, "c={c} i={i}");
            }
        }
    }

    #[test]
    fn order_preservation_exact_on_raw_output() {
        let n = 96;
        let kernel = crate::kernel::default_kernel();
        for seed in 0..5 {
            let lo = smooth_random(n, seed, 0.6);
            let mut rng = crate::rng::rng_at(&derive_stream(seed, "order", 1), 0);
            let hi = GridProfile::potential(
                lo.values().iter().map(|v| v + rng.gen::<f64>()).collect(),
            )
            .unwrap();
            let (raw_lo, _) = hopf_lax_raw(&lo, 0.5, 3, kernel).unwrap();
            let (raw_hi, _) = hopf_lax_raw(&hi, 0.5, 3, kernel).unwrap();
            for i in 0..n {
                assert!(raw_lo[i] <= raw_hi[i], "seed={seed} i={i}");
            }
        }
    }

    #[test]
    fn matches_brute_force_on_cosine() {
        let n = 256;
        let phi = GridProfile::from_fn(n, ProfileKind::Potential, |x| 0.2 * (2.0 * PI * x).cos())
            .unwrap();
        let fast = hopf_lax_step(&phi, 0.5).unwrap();
        let (brute, rec) = crate::oracles::brute::brute_force_hopf_lax(&phi, 0.5, 3).unwrap();
        for i in 0..n {
            assert!((fast.phi.value(i) - brute.value(i)).abs() < 1e-12, "i={i}");
        }
        assert_eq!(fast.record.winners(), rec.winners());
    }

    #[test]
    fn semigroup_substep_consistency() {
        // Two Δ flights vs one 2Δ flight within 5/n in sup norm.
        for n in [256usize, 1024] {
            for seed in 0..5u64 {
                let phi = smooth_random(n, seed, 0.8);
                let delta = 0.5;
                let once = hopf_lax_step(&phi, 2.0 * delta).unwrap().phi;
                let twice = {
                    let mid = hopf_lax_step(&phi, delta).unwrap().phi;
                    hopf_lax_step(&mid, delta).unwrap().phi
                };
                let d: f64 = once
                    .values()
                    .iter()
                    .zip(twice.values())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                assert!(d <= 5.0 / n as f64, "n={n} seed={seed} d={d}");
            }
        }
    }

    #[test]
    fn kick_is_additive_and_quotiented() {
        let n = 128;
        let phi = smooth_random(n, 3, 0.4);
        let zero = GridProfile::zeros(n, ProfileKind::Potential).unwrap();
        let unchanged = apply_kick(&phi, &zero).unwrap();
        assert_eq!(unchanged.values(), phi.mean_normalize().values());

        let constant = GridProfile::potential(vec![2.5; n]).unwrap();
        let kicked = apply_kick(&phi, &constant).unwrap();
        let d = quotient_sup_distance(&kicked, &phi).unwrap();
        assert!(d < 1e-12);

        let small = GridProfile::zeros(64, ProfileKind::Potential).unwrap();
        assert!(matches!(
            apply_kick(&phi, &small),
            Err(SolverError::SizeMismatch(128, 64))
        ));
    }

    #[test]
    fn kick_derivative_matches_forcing_gradient() {
        let n = 256;
        let phi = smooth_random(n, 5, 0.4);
        let basis = KickBasis::default_basis(n);
        let f = crate::forcing::kick_potential(&[0.3, -0.2, 0.1, 0.4], &basis).unwrap();
        let before = derivative_field(&phi);
        let after = derivative_field(&apply_kick(&phi, &f).unwrap());
        let fx = derivative_field(&f);
        for i in 0..n {
            let got = after.value(i) - before.value(i);
            assert!((got - fx.value(i)).abs() < 1e-10, "i={i}");
        }
    }

    #[test]
    fn derivative_field_cases() {
        let n = 512;
        let c = GridProfile::potential(vec![4.2; n]).unwrap();
        assert!(derivative_field(&c).values().iter().all(|&v| v == 0.0));

        let phi = GridProfile::from_fn(n, ProfileKind::Potential, |x| {
            (2.0 * PI * x).sin() / (2.0 * PI)
        })
        .unwrap();
        let u = derivative_field(&phi);
        for i in 0..n {
            let x = (i as f64 + 0.5) / n as f64; // forward difference midpoint
            assert!(
                (u.value(i) - (2.0 * PI * x).cos()).abs() < 10.0 / n as f64,
                "i={i}"
            );
        }
        let mean = u.values().iter().sum::<f64>() / n as f64;
        assert!(mean.abs() < 1e-14);
    }

    #[test]
    fn semiconcavity_verdicts() {
        let n = 256;
        let zero = GridProfile::zeros(n, ProfileKind::Potential).unwrap();
        let step = hopf_lax_step(&zero, 1.0).unwrap();
        assert!(semiconcavity_check(&step.phi, 1.0).pass);

        for seed in 0..5 {
            let phi = smooth_random(n, seed + 100, 1.0);
            let step = hopf_lax_step(&phi, 1.0).unwrap();
            let rep = semiconcavity_check(&step.phi, 1.0);
            assert!(rep.pass, "seed={seed}: {rep:?}");
        }

        // Negative control: a convex kink violates the Oleinik bound.
        let kink =
            GridProfile::from_fn(n, ProfileKind::Potential, |x| (x - 0.5).abs()).unwrap();
        assert!(!semiconcavity_check(&kink, 1.0).pass);
    }

    #[test]
    fn evolve_rest_state_stays_at_rest() {
        let n = 64;
        let phi = GridProfile::zeros(n, ProfileKind::Potential).unwrap();
        let state = SolverState::initial(&phi).unwrap();
        let path = ForcingPath::kicked(derive_stream(1, "forcing", 0), KickLaw::new(vec![0.0; 4]));
        let basis = KickBasis::default_basis(n);
        let traj = evolve(&state, 5.0, &path, &basis, &EvolveParams::default()).unwrap();
        assert!(traj.end.phi.values().iter().all(|&v| v == 0.0));
        assert_eq!(traj.flights.len(), 20);
        assert_eq!(traj.kicks.len(), 5);
    }

    #[test]
    fn evolve_substep_resolution_consistency() {
        // One unit flight as 1×Δ=1 vs 4×Δ=0.25 agree within 5/n sup norm.
        let n = 256;
        let phi = smooth_random(n, 21, 0.7);
        let state = SolverState::initial(&phi).unwrap();
        let path = ForcingPath::kicked(derive_stream(2, "forcing", 0), KickLaw::new(vec![0.0; 4]));
        let basis = KickBasis::default_basis(n);
        let coarse = evolve(
            &state,
            1.0,
            &path,
            &basis,
            &EvolveParams {
                substeps: 1,
                ..Default::default()
            },
        )
        .unwrap();
        let fine = evolve(
            &state,
            1.0,
            &path,
            &basis,
            &EvolveParams {
                substeps: 4,
                ..Default::default()
            },
        )
        .unwrap();
        let d: f64 = coarse
            .end
            .phi
            .values()
            .iter()
            .zip(fine.end.phi.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(d <= 5.0 / n as f64, "d={d}");
    }

    #[test]
    fn evolve_kicked_run_has_bounded_variation() {
        // Long kicked run: TV(u(t)) settles to an O(1) band after t ≥ 1 —
        // the empirical face of the W^{1,1} bound.
        let n = 128;
        let phi = GridProfile::zeros(n, ProfileKind::Potential).unwrap();
        let state = SolverState::initial(&phi).unwrap();
        let path = ForcingPath::kicked(
            derive_stream(7, "forcing", 0),
            KickLaw::new(KickBasis::default_sigmas()),
        );
        let basis = KickBasis::default_basis(n);
        let traj = evolve(
            &state,
            50.0,
            &path,
            &basis,
            &EvolveParams {
                substeps: 4,
                snapshot_every: 4,
                ..Default::default()
            },
        )
        .unwrap();
        // Kicks inject O(σ·k·2π) of gradient each unit; flights dissipate it
        // at shocks. Boundedness (the empirical C₄) means an O(100) band at
        // this forcing scale, not growth.
        let mut tvs = Vec::new();
        for snap in traj.snapshots.iter().filter(|s| s.time >= 1.0) {
            tvs.push(snap.velocity().total_variation());
        }
        tvs.push(traj.end.velocity().total_variation());
        let max_tv = tvs.iter().cloned().fold(0.0, f64::max);
        assert!(max_tv > 0.0);
        assert!(max_tv < 500.0, "TV blow-up: {max_tv}");
        let half = tvs.len() / 2;
        let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
        let early = mean(&tvs[..half]);
        let late = mean(&tvs[half..]);
        assert!(late < 3.0 * early, "TV trending up: {early} -> {late}");
    }

    #[test]
    fn evolve_rejects_bad_horizons_and_exhausted_paths() {
        let n = 64;
        let phi = GridProfile::zeros(n, ProfileKind::Potential).unwrap();
        let state = SolverState::initial(&phi).unwrap();
        let basis = KickBasis::default_basis(n);
        let path = ForcingPath::kicked(derive_stream(1, "f", 0), KickLaw::new(vec![0.0; 4]));
        assert!(matches!(
            evolve(&state, 0.0, &path, &basis, &EvolveParams::default()),
            Err(SolverError::HorizonNotAhead { .. })
        ));

        let white = crate::forcing::white_kick_schedule(0.1, 2.0, derive_stream(1, "w", 0), 4)
            .unwrap();
        let res = evolve(&state, 4.0, &white, &basis, &EvolveParams::default());
        assert!(matches!(
            res,
            Err(SolverError::Forcing(ForcingError::PathExhausted { .. }))
        ));
    }

    #[test]
    fn argmin_records_are_monotone() {
        let n = 128;
        let phi = smooth_random(n, 31, 1.0);
        let state = SolverState::initial(&phi).unwrap();
        let basis = KickBasis::default_basis(n);
        let path = ForcingPath::kicked(
            derive_stream(3, "forcing", 0),
            KickLaw::new(KickBasis::default_sigmas()),
        );
        let traj = evolve(&state, 10.0, &path, &basis, &EvolveParams::default()).unwrap();
        for (k, rec) in traj.flights.iter().enumerate() {
            assert!(rec.is_monotone(), "flight {k} lost monotonicity");
        }
    }
}

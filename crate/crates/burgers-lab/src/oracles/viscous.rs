//! Viscous Hamilton–Jacobi solver: φ_t + φ_x²/2 = ν φ_xx + forcing.
//!
//! Operator splitting per micro-step: a monotone Lax–Friedrichs Hamiltonian
//! step followed by an unconditionally stable implicit diffusion step
//! (periodic tridiagonal solve). Kicks add their potential at kick times.
//! Used for the ν → 0 ladder: the inviscid variational solution is the L₁
//! limit of these runs.

use super::OracleError;
use crate::field::{GridProfile, ProfileKind};
use crate::forcing::{ForcingPath, KickBasis};

/// Solve `(I − κ D₂) x = rhs` with periodic wrap, `D₂` the standard second
/// difference; constant-coefficient Sherman–Morrison around the Thomas
/// algorithm.
fn implicit_diffusion(values: &mut [f64], kappa: f64) {
    let n = values.len();
    let b = 1.0 + 2.0 * kappa; // diagonal
    let a = -kappa; // off-diagonal (both sides), also the corner terms

    // Sherman–Morrison: A = T + γ e₁eₙᵀ-style corner correction.
    let gamma = -b;
    let mut diag = vec![b; n];
    diag[0] = b - gamma;
    diag[n - 1] = b - a * a / gamma;

    let solve_tridiag = |diag: &[f64], rhs: &[f64]| -> Vec<f64> {
        let n = rhs.len();
        let mut c_prime = vec![0.0; n];
        let mut d_prime = vec![0.0; n];
        c_prime[0] = a / diag[0];
        d_prime[0] = rhs[0] / diag[0];
        for i in 1..n {
            let m = diag[i] - a * c_prime[i - 1];
            c_prime[i] = a / m;
            d_prime[i] = (rhs[i] - a * d_prime[i - 1]) / m;
        }
        let mut x = vec![0.0; n];
        x[n - 1] = d_prime[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = d_prime[i] - c_prime[i] * x[i + 1];
        }
        x
    };

    let y = solve_tridiag(&diag, values);
    let mut u_vec = vec![0.0; n];
    u_vec[0] = gamma;
    u_vec[n - 1] = a;
    let q = solve_tridiag(&diag, &u_vec);
    // vᵀ = (1, a/γ) on entries (0, n−1).
    let vy = y[0] + (a / gamma) * y[n - 1];
    let vq = q[0] + (a / gamma) * q[n - 1];
    let factor = vy / (1.0 + vq);
    for i in 0..n {
        values[i] = y[i] - factor * q[i];
    }
}

/// A viscous run: φ snapshots at kick boundaries (mean-normalized).
#[derive(Debug, Clone)]
pub struct ViscousRun {
    pub nu: f64,
    pub times: Vec<f64>,
    pub profiles: Vec<GridProfile>,
    pub steps: u64,
}

impl ViscousRun {
    pub fn at_time(&self, t: f64) -> Option<&GridProfile> {
        self.times
            .iter()
            .position(|x| (x - t).abs() < 1e-9)
            .map(|i| &self.profiles[i])
    }
}

/// Evolve φ under viscosity ν and the path's kicks.
pub fn viscous_evolve(
    phi0: &GridProfile,
    nu: f64,
    horizon: f64,
    path: &ForcingPath,
    basis: &KickBasis,
    cfl: f64,
) -> Result<ViscousRun, OracleError> {
    if !(nu > 0.0) {
        return Err(OracleError::BadViscosity(nu));
    }
    let n = phi0.n();
    let nf = n as f64;
    let dx = 1.0 / nf;
    let mut phi = phi0.mean_normalize().values().to_vec();
    let kick_interval = path.kick_interval();
    let boundaries = (horizon / kick_interval).round() as u64;

    let mut times = vec![0.0];
    let mut profiles = vec![phi0.mean_normalize()];
    let mut steps = 0u64;

    for b in 1..=boundaries {
        let t_end = b as f64 * kick_interval;
        let mut t = (b - 1) as f64 * kick_interval;
        while t < t_end - 1e-12 {
            // Monotone Lax–Friedrichs Hamiltonian step: the dissipation
            // coefficient matches the max characteristic speed.
            let mut alpha = 1e-8_f64;
            let grad: Vec<(f64, f64)> = (0..n)
                .map(|i| {
                    let pm = (phi[i] - phi[(i + n - 1) % n]) * nf;
                    let pp = (phi[(i + 1) % n] - phi[i]) * nf;
                    alpha = alpha.max(pm.abs()).max(pp.abs());
                    (pm, pp)
                })
                .collect();
            // Backward Euler handles any κ stably but its decay error per
            // unit time is O(dt·(4π²ν)²); the cap keeps it below the ladder
            // tolerances even when the CFL step would be huge.
            let mut dt = (cfl * dx / alpha).min(1e-3);
            if dt < 1e-12 {
                return Err(OracleError::StepCollapse {
                    time: t,
                    speed: alpha,
                });
            }
            if t + dt > t_end {
                dt = t_end - t;
            }
            for i in 0..n {
                let (pm, pp) = grad[i];
                let avg = 0.5 * (pm + pp);
                let ham = 0.5 * avg * avg - 0.5 * alpha * (pp - pm);
                phi[i] -= dt * ham;
            }
            // Implicit diffusion: unconditionally stable.
            implicit_diffusion(&mut phi, nu * dt * nf * nf);
            t += dt;
            steps += 1;

            let sup = phi.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
            if !sup.is_finite() || sup > 1e6 {
                return Err(OracleError::Instability {
                    time: t,
                    magnitude: sup,
                });
            }
        }
        let c = path.sample_kick(b)?;
        let f = crate::forcing::kick_potential(&c, basis)?;
        for (v, g) in phi.iter_mut().zip(f.values()) {
            *v += g;
        }
        let snap = GridProfile::new(ProfileKind::Potential, phi.clone())?.mean_normalize();
        phi = snap.values().to_vec();
        times.push(t_end);
        profiles.push(snap);
    }

    Ok(ViscousRun {
        nu,
        times,
        profiles,
        steps,
    })
}

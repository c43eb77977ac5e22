//! Random kick forcing on the circle.
//!
//! Kicked mode adds an impulsive potential `Σ_k c_k(j) F^k` at each integer
//! time `j`, with i.i.d. centered Gaussian coefficient vectors. White mode
//! approximates a white-in-time force by fine kicks every `dt` whose
//! coefficients have variance `σ_k² dt`, so coefficient sums over [0,t]
//! carry variance `σ_k² t` (operator splitting of the Wiener integral).
//!
//! A [`ForcingPath`] is replay-deterministic: `(seed, j)` fully determines
//! the j-th coefficient vector, so coupled trajectories sharing a path
//! consume identical kicks by construction and ensembles regenerate their
//! noise from the manifest alone.

use crate::field::{FieldError, GridProfile, ProfileKind};
use crate::rng::{normal, rng_at, StreamSeed};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ForcingError {
    #[error("coefficient length {got} does not match basis size {want}")]
    CoefficientMismatch { got: usize, want: usize },
    #[error("kick interval dt must lie in (0, 0.1], got {0}")]
    BadDt(f64),
    #[error("forcing path exhausted: kick {index} at t={time} beyond horizon {horizon}")]
    PathExhausted { index: u64, time: f64, horizon: f64 },
    #[error("embedding tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error("unknown basis descriptor '{0}' (expected cos:k or sin:k)")]
    BadDescriptor(String),
    #[error("sigma list length {got} does not match basis size {want}")]
    SigmaMismatch { got: usize, want: usize },
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// One smooth kick potential together with its analytic descriptor.
#[derive(Debug, Clone)]
pub struct BasisMode {
    pub descriptor: String,
    pub profile: GridProfile,
}

/// The fixed family `F^1..F^K` of smooth kick potentials.
#[derive(Debug, Clone)]
pub struct KickBasis {
    modes: Vec<BasisMode>,
}

impl KickBasis {
    pub fn new(modes: Vec<BasisMode>) -> Self {
        KickBasis { modes }
    }

    /// Parse descriptors of the form `cos:k` / `sin:k` meaning
    /// `cos(2πkx)` / `sin(2πkx)`.
    pub fn from_descriptors(n: usize, descriptors: &[String]) -> Result<Self, ForcingError> {
        let mut modes = Vec::with_capacity(descriptors.len());
        for d in descriptors {
            let (wave, k) = d
                .split_once(':')
                .ok_or_else(|| ForcingError::BadDescriptor(d.clone()))?;
            let k: u32 = k
                .parse()
                .map_err(|_| ForcingError::BadDescriptor(d.clone()))?;
            if k == 0 {
                return Err(ForcingError::BadDescriptor(d.clone()));
            }
            let w = 2.0 * std::f64::consts::PI * k as f64;
            let profile = match wave {
                "cos" => GridProfile::from_fn(n, ProfileKind::Potential, |x| (w * x).cos())?,
                "sin" => GridProfile::from_fn(n, ProfileKind::Potential, |x| (w * x).sin())?,
                _ => return Err(ForcingError::BadDescriptor(d.clone())),
            };
            modes.push(BasisMode {
                descriptor: d.clone(),
                profile,
            });
        }
        Ok(KickBasis { modes })
    }

    /// The default forcing family: first two Fourier pairs. The first pair
    /// already embeds the circle in ℝ²; the second enriches the forcing.
    pub fn default_basis(n: usize) -> Self {
        let descs: Vec<String> = ["cos:1", "sin:1", "cos:2", "sin:2"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        Self::from_descriptors(n, &descs).expect("default basis is well-formed")
    }

    pub fn default_sigmas() -> Vec<f64> {
        vec![1.0, 1.0, 0.5, 0.5]
    }

    pub fn k(&self) -> usize {
        self.modes.len()
    }

    pub fn n(&self) -> usize {
        self.modes.first().map(|m| m.profile.n()).unwrap_or(0)
    }

    pub fn modes(&self) -> &[BasisMode] {
        &self.modes
    }

    pub fn descriptors(&self) -> Vec<String> {
        self.modes.iter().map(|m| m.descriptor.clone()).collect()
    }

    /// Largest scaled second difference `n² max|F_{i+1} − 2F_i + F_{i−1}|`
    /// over the family — a discrete curvature bound used as the smoothness
    /// certificate.
    pub fn max_second_difference(&self) -> f64 {
        let mut worst = 0.0_f64;
        for mode in &self.modes {
            let v = mode.profile.values();
            let n = v.len();
            let scale = (n * n) as f64;
            for i in 0..n {
                let dd = v[(i + 1) % n] - 2.0 * v[i] + v[(i + n - 1) % n];
                worst = worst.max(scale * dd.abs());
            }
        }
        worst
    }
}

/// Per-coordinate law of the kick coefficients: independent centered
/// Gaussians with scales `σ_k`. Absolutely continuous whenever some σ_k > 0,
/// all moments finite, and 0 always in the support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KickLaw {
    pub sigmas: Vec<f64>,
}

impl KickLaw {
    pub fn new(sigmas: Vec<f64>) -> Self {
        KickLaw { sigmas }
    }

    pub fn unit(k: usize) -> Self {
        KickLaw {
            sigmas: vec![1.0; k],
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.sigmas.iter().all(|s| *s == 0.0)
    }
}

/// Kicked (unit interval) or white (fine splitting interval `dt`) forcing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ForcingMode {
    Kicked,
    White { dt: f64 },
}

/// A seeded, replayable sequence of kick coefficient vectors. Kick `j ≥ 1`
/// acts at time `j·κ` where `κ` is the kick interval (1 in kicked mode, `dt`
/// in white mode).
#[derive(Debug, Clone)]
pub struct ForcingPath {
    mode: ForcingMode,
    seed: StreamSeed,
    law: KickLaw,
    horizon: Option<f64>,
}

impl ForcingPath {
    pub fn kicked(seed: StreamSeed, law: KickLaw) -> Self {
        ForcingPath {
            mode: ForcingMode::Kicked,
            seed,
            law,
            horizon: None,
        }
    }

    pub fn white(dt: f64, horizon: f64, seed: StreamSeed, law: KickLaw) -> Result<Self, ForcingError> {
        if !(dt > 0.0 && dt <= 0.1) {
            return Err(ForcingError::BadDt(dt));
        }
        Ok(ForcingPath {
            mode: ForcingMode::White { dt },
            seed,
            law,
            horizon: Some(horizon),
        })
    }

    pub fn mode(&self) -> ForcingMode {
        self.mode
    }

    pub fn law(&self) -> &KickLaw {
        &self.law
    }

    pub fn seed(&self) -> &StreamSeed {
        &self.seed
    }

    pub fn horizon(&self) -> Option<f64> {
        self.horizon
    }

    /// Spacing of kick times.
    pub fn kick_interval(&self) -> f64 {
        match self.mode {
            ForcingMode::Kicked => 1.0,
            ForcingMode::White { dt } => dt,
        }
    }

    /// Standard deviation of coordinate `k` of one kick.
    fn coefficient_scale(&self, k: usize) -> f64 {
        match self.mode {
            ForcingMode::Kicked => self.law.sigmas[k],
            ForcingMode::White { dt } => self.law.sigmas[k] * dt.sqrt(),
        }
    }

    /// The j-th coefficient vector (j ≥ 1), a pure function of `(seed, j)`.
    pub fn sample_kick(&self, j: u64) -> Result<Vec<f64>, ForcingError> {
        let time = j as f64 * self.kick_interval();
        if let Some(h) = self.horizon {
            if time > h + 1e-9 {
                return Err(ForcingError::PathExhausted {
                    index: j,
                    time,
                    horizon: h,
                });
            }
        }
        let mut rng = rng_at(&self.seed, j);
        Ok((0..self.law.sigmas.len())
            .map(|k| self.coefficient_scale(k) * normal(&mut rng))
            .collect())
    }
}

/// White-force splitting schedule: kicks every `dt` with unit-σ coefficients
/// of variance `dt`, so summed coefficients over [0,t] have variance t.
pub fn white_kick_schedule(
    dt: f64,
    horizon: f64,
    seed: StreamSeed,
    k: usize,
) -> Result<ForcingPath, ForcingError> {
    ForcingPath::white(dt, horizon, seed, KickLaw::unit(k))
}

/// Pointwise linear combination `Σ_k c_k F^k`.
pub fn kick_potential(c: &[f64], basis: &KickBasis) -> Result<GridProfile, ForcingError> {
    if c.len() != basis.k() {
        return Err(ForcingError::CoefficientMismatch {
            got: c.len(),
            want: basis.k(),
        });
    }
    let n = basis.n();
    let mut values = vec![0.0_f64; n];
    for (coeff, mode) in c.iter().zip(basis.modes()) {
        if *coeff == 0.0 {
            continue;
        }
        for (v, f) in values.iter_mut().zip(mode.profile.values()) {
            *v += coeff * f;
        }
    }
    Ok(GridProfile::new(ProfileKind::Potential, values)?)
}

/// Outcome of the embedding validation of the basis map
/// `x ↦ (F¹(x), …, F^K(x))`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbeddingReport {
    pub pass: bool,
    /// Two grid positions further than 2/n apart on the circle that map
    /// within ε of each other (injectivity failure witness).
    pub injectivity_witness: Option<(f64, f64, f64)>,
    /// Grid position where the derivative vector has norm below ε
    /// (immersion failure witness).
    pub immersion_witness: Option<(f64, f64)>,
}

/// Check the embedding hypothesis on the grid: injectivity (no two separated
/// grid points mapping ε-close in ℝ^K) and immersion (derivative vector of
/// the basis map bounded away from zero).
pub fn verify_embedding(basis: &KickBasis, eps: f64) -> Result<EmbeddingReport, ForcingError> {
    if !(eps > 0.0) {
        return Err(ForcingError::BadTolerance(eps));
    }
    let n = basis.n();
    let k = basis.k();
    let mut image = vec![0.0_f64; n * k];
    for (m, mode) in basis.modes().iter().enumerate() {
        for i in 0..n {
            image[i * k + m] = mode.profile.value(i);
        }
    }

    let mut injectivity_witness = None;
    'outer: for i in 0..n {
        for j in (i + 1)..n {
            let sep = crate::field::circle_distance(i as f64 / n as f64, j as f64 / n as f64);
            if sep <= 2.0 / n as f64 {
                continue;
            }
            let mut d2 = 0.0;
            for m in 0..k {
                let d = image[i * k + m] - image[j * k + m];
                d2 += d * d;
            }
            if d2.sqrt() < eps {
                injectivity_witness = Some((i as f64 / n as f64, j as f64 / n as f64, d2.sqrt()));
                break 'outer;
            }
        }
    }

    let mut immersion_witness = None;
    for i in 0..n {
        let mut d2 = 0.0;
        for mode in basis.modes() {
            let v = mode.profile.values();
            let d = (v[(i + 1) % n] - v[i]) * n as f64;
            d2 += d * d;
        }
        if d2.sqrt() < eps {
            immersion_witness = Some((i as f64 / n as f64, d2.sqrt()));
            break;
        }
    }

    Ok(EmbeddingReport {
        pass: injectivity_witness.is_none() && immersion_witness.is_none(),
        injectivity_witness,
        immersion_witness,
    })
}

/// Running FNV-style digest of consumed kick coefficients; coupled
/// trajectories must end up with equal digests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ForcingAudit {
    pub digest: u64,
    pub kicks: u64,
}

impl ForcingAudit {
    pub fn absorb(&mut self, index: u64, coefficients: &[f64]) {
        const PRIME: u64 = 0x100000001b3;
        let mut h = self.digest ^ index.wrapping_mul(0x9e3779b97f4a7c15);
        for c in coefficients {
            h = (h ^ c.to_bits()).wrapping_mul(PRIME);
        }
        self.digest = h;
        self.kicks += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_stream;
    use std::f64::consts::PI;

    fn path(seed: u64) -> ForcingPath {
        ForcingPath::kicked(
            derive_stream(seed, "forcing", 0),
            KickLaw::new(KickBasis::default_sigmas()),
        )
    }

    #[test]
    fn degenerate_law_gives_zero_vector() {
        let p = ForcingPath::kicked(derive_stream(1, "forcing", 0), KickLaw::new(vec![0.0; 4]));
        assert_eq!(p.sample_kick(5).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn replay_determinism() {
        let p = path(99);
        let a = p.sample_kick(17).unwrap();
        let b = p.sample_kick(17).unwrap();
        assert_eq!(a, b);
        let regen = path(99);
        assert_eq!(regen.sample_kick(17).unwrap(), a);
    }

    #[test]
    fn kick_moments_match_law() {
        // 10⁵ samples per coordinate: empirical mean within 3 SE of 0 and
        // variance within 3 SE of σ².
        let p = path(2024);
        let sigmas = KickBasis::default_sigmas();
        let m = 100_000u64;
        let mut sums = vec![0.0; 4];
        let mut sq = vec![0.0; 4];
        for j in 1..=m {
            let c = p.sample_kick(j).unwrap();
            for k in 0..4 {
                sums[k] += c[k];
                sq[k] += c[k] * c[k];
            }
        }
        for k in 0..4 {
            let var = sigmas[k] * sigmas[k];
            let mean = sums[k] / m as f64;
            let se_mean = sigmas[k] / (m as f64).sqrt();
            assert!(mean.abs() < 3.0 * se_mean, "k={k} mean={mean}");
            let v = sq[k] / m as f64 - mean * mean;
            // SE of Gaussian sample variance: σ²√(2/m).
            let se_var = var * (2.0 / m as f64).sqrt();
            assert!((v - var).abs() < 3.0 * se_var, "k={k} var={v} want {var}");
        }
    }

    #[test]
    fn white_increment_variance_and_independence() {
        let dt = 0.05;
        let paths = 10_000u64;
        let per_unit = (1.0_f64 / dt).round() as u64;
        let mut sum_a = 0.0;
        let mut sq_a = 0.0;
        let mut sum_b = 0.0;
        let mut sq_b = 0.0;
        let mut cross = 0.0;
        for m in 0..paths {
            let p = white_kick_schedule(dt, 2.0, derive_stream(7, "white", m), 1).unwrap();
            // W(1) − W(0) and W(2) − W(1) as coefficient sums over disjoint windows.
            let a: f64 = (1..=per_unit).map(|j| p.sample_kick(j).unwrap()[0]).sum();
            let b: f64 = ((per_unit + 1)..=2 * per_unit)
                .map(|j| p.sample_kick(j).unwrap()[0])
                .sum();
            sum_a += a;
            sq_a += a * a;
            sum_b += b;
            sq_b += b * b;
            cross += a * b;
        }
        let m = paths as f64;
        let var_a = sq_a / m - (sum_a / m) * (sum_a / m);
        let var_b = sq_b / m - (sum_b / m) * (sum_b / m);
        let se_var = (2.0 / m).sqrt();
        assert!((var_a - 1.0).abs() < 3.0 * se_var, "var_a={var_a}");
        assert!((var_b - 1.0).abs() < 3.0 * se_var, "var_b={var_b}");
        let cov = cross / m - (sum_a / m) * (sum_b / m);
        // SE of the sample covariance of two unit-variance independents.
        let se_cov = (1.0 / m).sqrt();
        assert!(cov.abs() < 3.0 * se_cov, "cov={cov}");
    }

    #[test]
    fn single_increment_variance_is_dt() {
        let dt = 0.02;
        let m = 20_000u64;
        let mut sq = 0.0;
        for member in 0..m {
            let p = white_kick_schedule(dt, 1.0, derive_stream(3, "white-dt", member), 1).unwrap();
            let c = p.sample_kick(1).unwrap()[0];
            sq += c * c;
        }
        let var = sq / m as f64;
        let se = dt * (2.0 / m as f64).sqrt();
        assert!((var - dt).abs() < 3.0 * se, "var={var} want {dt}");
    }

    #[test]
    fn white_path_exhaustion() {
        let p = white_kick_schedule(0.1, 1.0, derive_stream(5, "white", 0), 2).unwrap();
        assert!(p.sample_kick(10).is_ok());
        assert!(matches!(
            p.sample_kick(11),
            Err(ForcingError::PathExhausted { .. })
        ));
        assert!(matches!(
            white_kick_schedule(0.0, 1.0, derive_stream(5, "white", 0), 2),
            Err(ForcingError::BadDt(_))
        ));
    }

    #[test]
    fn kick_potential_combinations() {
        let n = 256;
        let basis = KickBasis::from_descriptors(n, &["cos:1".into(), "sin:1".into()]).unwrap();

        let zero = kick_potential(&[0.0, 0.0], &basis).unwrap();
        assert!(zero.values().iter().all(|&v| v == 0.0));

        let e1 = kick_potential(&[1.0, 0.0], &basis).unwrap();
        assert_eq!(e1.values(), basis.modes()[0].profile.values());

        // cos + sin = √2 cos(2πx − π/4), checked pointwise.
        let combo = kick_potential(&[1.0, 1.0], &basis).unwrap();
        for i in 0..n {
            let x = i as f64 / n as f64;
            let expect = 2.0_f64.sqrt() * (2.0 * PI * x - PI / 4.0).cos();
            assert!((combo.value(i) - expect).abs() < 1e-12, "i={i}");
        }

        assert!(matches!(
            kick_potential(&[1.0], &basis),
            Err(ForcingError::CoefficientMismatch { .. })
        ));
    }

    #[test]
    fn embedding_verdicts() {
        let n = 256;
        let pass = KickBasis::from_descriptors(n, &["cos:1".into(), "sin:1".into()]).unwrap();
        let r = verify_embedding(&pass, 1e-6).unwrap();
        assert!(r.pass, "{r:?}");

        let defaults = KickBasis::default_basis(n);
        assert!(verify_embedding(&defaults, 1e-6).unwrap().pass);

        // cos alone folds x ↔ 1−x.
        let fold = KickBasis::from_descriptors(n, &["cos:1".into()]).unwrap();
        let r = verify_embedding(&fold, 1e-6).unwrap();
        assert!(!r.pass);
        let (x, y, _) = r.injectivity_witness.expect("witness pair");
        assert!((x + y - 1.0).abs() < 2.0 / n as f64, "x={x} y={y}");

        // Second harmonics alone identify x and x + 1/2.
        let half = KickBasis::from_descriptors(n, &["cos:2".into(), "sin:2".into()]).unwrap();
        let r = verify_embedding(&half, 1e-6).unwrap();
        assert!(!r.pass);
        let (x, y, _) = r.injectivity_witness.expect("witness pair");
        assert!(
            ((y - x) - 0.5).abs() < 2.0 / n as f64,
            "x={x} y={y} not half a turn apart"
        );

        assert!(matches!(
            verify_embedding(&pass, 0.0),
            Err(ForcingError::BadTolerance(_))
        ));
    }

    #[test]
    fn audit_digest_tracks_consumption() {
        let p = path(5);
        let mut a = ForcingAudit::default();
        let mut b = ForcingAudit::default();
        for j in 1..=10 {
            let c = p.sample_kick(j).unwrap();
            a.absorb(j, &c);
            b.absorb(j, &c);
        }
        assert_eq!(a, b);
        let mut c3 = ForcingAudit::default();
        for j in 1..=9 {
            c3.absorb(j, &p.sample_kick(j).unwrap());
        }
        assert_ne!(a, c3);
    }
}

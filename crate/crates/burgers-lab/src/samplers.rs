//! Initial-condition samplers, registered by name.
//!
//! The contraction claims quantify over all continuous initial data, which
//! is untestable; experiments instead draw from a diverse library — flat,
//! random Fourier profiles with decaying spectra, and high-variation
//! sawtooth ensembles — and report the max/spread over the family.
//!
//! Sampler specs are strings like `zero`, `fourier`, `sawtooth`, or with
//! parameters: `fourier:amplitude=0.5,modes=8,decay=1.5`,
//! `sawtooth:teeth=3,amplitude=1.0`.

use crate::field::{GridProfile, ProfileKind};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// A named family of initial potentials.
pub trait InitialSampler: Send + Sync {
    fn name(&self) -> String;
    /// Draw one potential-like profile.
    fn sample(&self, n: usize, rng: &mut ChaCha8Rng) -> GridProfile;
}

/// The flat potential (velocity ≡ 0).
pub struct ZeroSampler;

impl InitialSampler for ZeroSampler {
    fn name(&self) -> String {
        "zero".into()
    }

    fn sample(&self, n: usize, _rng: &mut ChaCha8Rng) -> GridProfile {
        GridProfile::zeros(n, ProfileKind::Potential).expect("valid grid")
    }
}

/// Random Fourier profiles with power-law decaying spectra.
pub struct FourierSampler {
    pub amplitude: f64,
    pub modes: u32,
    pub decay: f64,
}

impl Default for FourierSampler {
    fn default() -> Self {
        FourierSampler {
            amplitude: 1.0,
            modes: 6,
            decay: 1.5,
        }
    }
}

impl InitialSampler for FourierSampler {
    fn name(&self) -> String {
        format!(
            "fourier:amplitude={},modes={},decay={}",
            self.amplitude, self.modes, self.decay
        )
    }

    fn sample(&self, n: usize, rng: &mut ChaCha8Rng) -> GridProfile {
        let coeffs: Vec<(f64, f64, f64)> = (1..=self.modes)
            .map(|k| {
                let scale = self.amplitude * (k as f64).powf(-self.decay);
                let a: f64 = rng.gen::<f64>() * 2.0 - 1.0;
                let b: f64 = rng.gen::<f64>() * 2.0 - 1.0;
                (k as f64, scale * a, scale * b)
            })
            .collect();
        GridProfile::from_fn(n, ProfileKind::Potential, |x| {
            coeffs
                .iter()
                .map(|(k, a, b)| a * (2.0 * PI * k * x).cos() + b * (2.0 * PI * k * x).sin())
                .sum()
        })
        .expect("valid grid")
    }
}

/// Zigzag potentials whose velocity is a ±amplitude square wave with
/// 2·teeth jumps — a high-TV ensemble. Phase is random.
pub struct SawtoothSampler {
    pub teeth: u32,
    pub amplitude: f64,
}

impl Default for SawtoothSampler {
    fn default() -> Self {
        SawtoothSampler {
            teeth: 3,
            amplitude: 1.0,
        }
    }
}

impl InitialSampler for SawtoothSampler {
    fn name(&self) -> String {
        format!("sawtooth:teeth={},amplitude={}", self.teeth, self.amplitude)
    }

    fn sample(&self, n: usize, rng: &mut ChaCha8Rng) -> GridProfile {
        let phase: f64 = rng.gen::<f64>();
        let teeth = self.teeth.max(1) as f64;
        let amp = self.amplitude;
        // Triangle wave of period 1/teeth: slope ±amp.
        GridProfile::from_fn(n, ProfileKind::Potential, |x| {
            let y = ((x + phase) * teeth).fract();
            let tri = if y < 0.5 { y } else { 1.0 - y };
            amp * tri / teeth
        })
        .expect("valid grid")
    }
}

/// Parse a sampler spec string into a sampler.
pub fn sampler_from_spec(spec: &str) -> Result<Box<dyn InitialSampler>, String> {
    let (kind, params) = match spec.split_once(':') {
        Some((k, p)) => (k, Some(p)),
        None => (spec, None),
    };
    let mut kv = std::collections::HashMap::new();
    if let Some(p) = params {
        for item in p.split(',') {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| format!("bad sampler parameter '{item}' in '{spec}'"))?;
            let value: f64 = v
                .parse()
                .map_err(|_| format!("bad numeric value '{v}' in '{spec}'"))?;
            kv.insert(k.to_string(), value);
        }
    }
    match kind {
        "zero" => Ok(Box::new(ZeroSampler)),
        "fourier" => {
            let d = FourierSampler::default();
            Ok(Box::new(FourierSampler {
                amplitude: kv.get("amplitude").copied().unwrap_or(d.amplitude),
                modes: kv.get("modes").copied().unwrap_or(d.modes as f64) as u32,
                decay: kv.get("decay").copied().unwrap_or(d.decay),
            }))
        }
        "sawtooth" => {
            let d = SawtoothSampler::default();
            Ok(Box::new(SawtoothSampler {
                teeth: kv.get("teeth").copied().unwrap_or(d.teeth as f64) as u32,
                amplitude: kv.get("amplitude").copied().unwrap_or(d.amplitude),
            }))
        }
        other => Err(format!(
            "unknown sampler '{other}' (known: zero, fourier, sawtooth)"
        )),
    }
}

/// Names of the built-in sampler kinds.
pub fn known_samplers() -> &'static [&'static str] {
    &["zero", "fourier", "sawtooth"]
}

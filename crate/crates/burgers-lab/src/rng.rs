//! Deterministic, randomly accessible noise streams.
//!
//! Every random draw in the lab is a pure function of
//! `(master seed, purpose, member index, draw index)`. Stream seeds are
//! derived by hashing; each draw index re-keys a ChaCha generator, so any
//! coefficient can be regenerated in O(1) without replaying a generator,
//! generation of distinct members never serializes, and coupled trajectories
//! reading one stream concurrently see identical bits.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

const DOMAIN: &[u8] = b"burgers-lab/stream/v1";

/// A derived 256-bit stream identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamSeed(pub [u8; 32]);

/// Derive the seed of an independent substream.
///
/// `purpose` separates uses (forcing, initial conditions, perturbations) so
/// ensembles built from one master seed never share coefficients.
pub fn derive_stream(master: u64, purpose: &str, member: u64) -> StreamSeed {
    let mut h = Sha256::new();
    h.update(DOMAIN);
    h.update(master.to_le_bytes());
    h.update((purpose.len() as u64).to_le_bytes());
    h.update(purpose.as_bytes());
    h.update(member.to_le_bytes());
    StreamSeed(h.finalize().into())
}

/// Generator keyed to one draw index of a stream. Same `(seed, index)` gives
/// the same generator state, bit for bit.
pub fn rng_at(seed: &StreamSeed, index: u64) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.0);
    h.update(index.to_le_bytes());
    let key: [u8; 32] = h.finalize().into();
    ChaCha8Rng::from_seed(key)
}

/// Standard normal draw.
pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn replay_is_bit_exact() {
        let s = derive_stream(42, "forcing", 3);
        let a: Vec<f64> = (0..10).map(|j| normal(&mut rng_at(&s, j))).collect();
        let b: Vec<f64> = (0..10).map(|j| normal(&mut rng_at(&s, j))).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn purposes_and_members_are_separated() {
        let a = derive_stream(7, "forcing", 0);
        let b = derive_stream(7, "forcing", 1);
        let c = derive_stream(7, "initial", 0);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_ne!(b, c);
    }

    #[test]
    fn no_collisions_across_members() {
        // 10⁴ members drawing one u64 each: all distinct.
        let mut seen = std::collections::HashSet::new();
        for m in 0..10_000u64 {
            let s = derive_stream(123, "collision-check", m);
            let v: u64 = rng_at(&s, 0).gen();
            assert!(seen.insert(v), "collision at member {m}");
        }
    }
}

//! Seeded pseudo-random numbers.
//!
//! All sampling uses xoshiro256++ seeded through SplitMix64 (`seed_from_u64`), so a
//! seed reproduces the same stream on every platform. Uniform doubles take the top
//! 53 bits of a draw: `(x >> 11) * 2^-53`.

use rand::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

pub type Rng = Xoshiro256PlusPlus;

pub fn seeded(seed: u64) -> Rng {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

/// Uniform draw in `[0, 1)`.
pub fn uniform(rng: &mut Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Inverse-CDF draw over the value order; never returns a zero-probability index.
pub fn categorical(rng: &mut Rng, dist: &[f64]) -> usize {
    let u = uniform(rng);
    let mut cum = 0.0;
    for (i, &p) in dist.iter().enumerate() {
        cum += p;
        if u < cum {
            return i;
        }
    }
    dist.iter().rposition(|&p| p > 0.0).expect("distribution has positive mass")
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent seed from a master seed and a path of integers.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(master), |acc, &x| splitmix64(acc ^ splitmix64(x)))
}

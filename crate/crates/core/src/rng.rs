//! Seeded randomness.
//!
//! All stochastic steps draw from ChaCha20 seeded with `seed_from_u64`, which
//! is specified bit-for-bit and therefore portable across platforms. Normal
//! variates use the ziggurat sampler of `rand_distr::StandardNormal`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

pub type PcRng = ChaCha20Rng;

pub fn seeded(seed: u64) -> PcRng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

pub fn fill_standard_normal<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    for x in out {
        *x = rng.sample(StandardNormal);
    }
}

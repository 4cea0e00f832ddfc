//! Seed derivation.
//!
//! Every randomized job gets its own ChaCha stream whose seed is a pure
//! function of the master seed and a job key, so results never depend on
//! which worker ran a job or in which order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type JobRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mix a master seed with an ordered key into a new 64-bit seed.
pub fn derive_seed(master: u64, key: &[u64]) -> u64 {
    let mut h = splitmix64(master);
    for &k in key {
        h = splitmix64(h ^ splitmix64(k));
    }
    h
}

/// Stable 64-bit tag for a string, used to put names into job keys.
pub fn tag(s: &str) -> u64 {
    // FNV-1a
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

pub fn job_rng(master: u64, key: &[u64]) -> JobRng {
    JobRng::seed_from_u64(derive_seed(master, key))
}

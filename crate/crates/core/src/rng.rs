//! Seeded random streams. A stream is a pure function of `(seed, stream)`, so
//! parallel workers reproduce the same draws regardless of scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

pub fn stream(seed: u64, id: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Stream for trial `trial` at sweep point `point`.
pub fn trial_stream(seed: u64, point: u32, trial: u32) -> Stream {
    stream(seed, (u64::from(point) << 32) | u64::from(trial))
}

/// Mixes a seed with a path of labels into an independent child seed.
pub fn derive(seed: u64, path: &[u64]) -> u64 {
    let mut x = seed;
    for &p in path {
        x = splitmix64(x ^ splitmix64(p.wrapping_add(0x9E37_79B9_7F4A_7C15)));
    }
    x
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

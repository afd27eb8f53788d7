//! Named random sub-streams derived from a single run seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Deterministic generator for the sub-stream `name` of `seed`.
///
/// Different names give independent streams, so modules and parallel trials
/// never share state.
pub fn substream(seed: u64, name: &str) -> ChaCha8Rng {
    // FNV-1a over the name, mixed with the seed through splitmix64.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(h)))
}

/// Sub-stream for trial `index` of `name`.
pub fn trial_stream(seed: u64, name: &str, index: u64) -> ChaCha8Rng {
    substream(splitmix64(seed.wrapping_add(index.wrapping_mul(0x9e37_79b9_7f4a_7c15))), name)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

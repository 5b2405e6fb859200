//! Seeding.
//!
//! Every random draw comes from a ChaCha8 stream: `ChaCha8Rng` seeded with
//! [`rand::SeedableRng::seed_from_u64`] and a stream id selected with
//! `set_stream`. Child seeds are derived with [`derive_seed`], a SplitMix64
//! fold over a path of integer coordinates, so that e.g. the seed of
//! `(grid point, replication, method)` never depends on which other
//! methods are configured.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream used for drawing scenario parameters (e.g. random block entries).
pub const STREAM_PARAMS: u64 = 1;
/// Stream used for labels and edges.
pub const STREAM_DATA: u64 = 2;
/// Stream used by estimators (initializations, k-means seeding).
pub const STREAM_FIT: u64 = 3;

#[inline]
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// `derive_seed(s, [a, b, c]) = mix(mix(mix(s ^ a') ^ b') ^ c')` where each
/// coordinate is itself mixed first.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(master), |acc, &c| splitmix64(acc ^ splitmix64(c)))
}

/// FNV-1a over a tag, used to turn method names into path coordinates.
pub fn tag(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

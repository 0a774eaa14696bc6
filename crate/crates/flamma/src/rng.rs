//! Deterministic random-number plumbing.
//!
//! Every stochastic choice in the simulator flows through a ChaCha8 stream
//! seeded by [`derive_seed`], so independent subsystems (cost draws, client
//! selection, epoch shuffles, weight init) never share or reorder a stream.
//! This is what makes whole experiment runs reproducible byte-for-byte.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags: first derivation part for each subsystem, so that e.g. the
/// cost draw for client 3 can never collide with the shuffle for epoch 3.
pub mod stream {
    pub const DATA: u64 = 1;
    pub const PARTITION: u64 = 2;
    pub const COSTS: u64 = 3;
    pub const SELECTION: u64 = 4;
    pub const LOCAL: u64 = 5;
    pub const SHUFFLE: u64 = 6;
    pub const SPLIT: u64 = 7;
    pub const INIT: u64 = 8;
    pub const ANCHORS: u64 = 9;
}

/// Folds `parts` into `base` with splitmix64 steps.
///
/// The same `(base, parts)` always yields the same seed on every platform.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mut state = splitmix64(base ^ 0x9E37_79B9_7F4A_7C15);
    for &part in parts {
        state = splitmix64(state ^ splitmix64(part));
    }
    state
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Builds the stream for a derived seed.
pub fn rng_from(base: u64, parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, parts))
}

/// Standard normal draw via Box-Muller; consumes exactly two uniforms.
pub fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    // 1 - u keeps the argument of ln strictly positive.
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

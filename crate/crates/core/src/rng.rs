//! Seeded random streams.
//!
//! Every simulator draws from ChaCha8 (`rand_chacha::ChaCha8Rng`). The root
//! generator is built with `seed_from_u64(seed)` and independent sub-streams
//! are selected with the 64-bit ChaCha stream id, so stream `k` of seed `s`
//! is the same on every platform and independent of thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator for sub-stream `stream` of the root `seed`.
pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derives a fresh root seed for a nested component (e.g. the chain marks
/// of a simulation whose event times used `seed` directly).
pub fn derive_seed(seed: u64, salt: u64) -> u64 {
    // splitmix64 finaliser
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

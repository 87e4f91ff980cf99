//! Seed derivation. Every replication gets a root seed mixed from
//! `(base_seed, replication)`; inside a replication, ChaCha stream ids
//! separate the consumers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// One round of the splitmix64 finalizer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Root seed of replication `rep`: `splitmix64(splitmix64(base) ^ (rep * GOLDEN))`.
pub fn replication_seed(base: u64, rep: u64) -> u64 {
    splitmix64(splitmix64(base) ^ rep.wrapping_mul(GOLDEN))
}

/// Generator for stream `stream` under `root`.
pub fn stream(root: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(root);
    r.set_stream(stream);
    r
}

/// Arrival-candidate stream of station `i` (0-based).
pub fn arrival_stream(root: u64, i: usize) -> ChaCha8Rng {
    stream(root, 2 * i as u64)
}

/// Session-duration stream of station `i` (0-based).
pub fn duration_stream(root: u64, i: usize) -> ChaCha8Rng {
    stream(root, 2 * i as u64 + 1)
}

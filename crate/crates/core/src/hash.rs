//! Counter-based hashing used to derive reproducible per-record and per-worker
//! randomness from a run seed without threading an RNG through the data path.

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn combine(seed: u64, index: u64) -> u64 {
    mix64(mix64(seed) ^ index.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

/// Maps `(seed, index)` to a uniform value strictly inside (0, 1).
pub fn uniform_open(seed: u64, index: u64) -> f64 {
    let bits = combine(seed, index) >> 11;
    (bits as f64 + 0.5) / (1u64 << 53) as f64
}

//! Deterministic substream derivation.
//!
//! Every random draw in this crate comes from a ChaCha8 stream keyed by a
//! master seed plus a path of integer coordinates (experiment tag, table
//! cell, replication index, split index, attempt). Work items derive their
//! own streams, so results are bitwise identical for any execution order or
//! thread count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Collapse `(master, path)` to a 64-bit stream key (SplitMix-style chain).
pub fn derive_key(master: u64, path: &[u64]) -> u64 {
    let mut s = mix64(master ^ GOLDEN);
    for (i, &t) in path.iter().enumerate() {
        s = mix64(s ^ mix64(t.wrapping_add(GOLDEN.wrapping_mul(i as u64 + 1))));
    }
    // fold in the path length so `[a]` and `[a, 0]` differ
    mix64(s.wrapping_add(GOLDEN.wrapping_mul(path.len() as u64 + 1)))
}

/// A ChaCha8 generator for the substream at `(master, path)`. The full
/// 256-bit seed is filled from the chain, so distinct paths give
/// independent streams for all practical purposes.
pub fn substream(master: u64, path: &[u64]) -> ChaCha8Rng {
    let key = derive_key(master, path);
    let mut seed = [0u8; 32];
    for (lane, chunk) in seed.chunks_exact_mut(8).enumerate() {
        let word = mix64(key ^ GOLDEN.wrapping_mul(2 * lane as u64 + 1));
        chunk.copy_from_slice(&word.to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

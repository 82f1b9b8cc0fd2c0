//! Keyed counter-based random streams.
//!
//! A stream is ChaCha8 keyed by the 64-bit seed (little-endian in the first
//! eight key bytes, remaining bytes zero) with the 64-bit stream id set to the
//! substream index. Sample `i` of an experiment always reads substream `i`, so
//! results do not depend on thread count or scheduling.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Substream `index` of the generator keyed by `seed`.
pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// Fills `words` with raw 64-bit outputs. Bit `j` of word `w` is the sign
/// of the `64 w + j`-th site in the interleaved order 1, -1, 2, -2, ...
pub fn fill_words(rng: &mut impl RngCore, words: &mut [u64]) {
    for w in words.iter_mut() {
        *w = rng.next_u64();
    }
}

/// Position of site `y != 0` in the interleaved order 1, -1, 2, -2, ...
#[inline]
pub fn interleaved_index(y: i64) -> u64 {
    debug_assert!(y != 0);
    if y > 0 {
        (2 * y - 2) as u64
    } else {
        (-2 * y - 1) as u64
    }
}

/// Reads the sign at `y` from a word buffer produced by [`fill_words`].
#[inline]
pub fn sign_at(words: &[u64], y: i64) -> i8 {
    let k = interleaved_index(y);
    if (words[(k / 64) as usize] >> (k % 64)) & 1 == 1 {
        1
    } else {
        -1
    }
}

/// Number of words needed to cover every site with `|y| <= radius`.
pub fn words_for_radius(radius: usize) -> usize {
    (2 * radius).div_ceil(64)
}

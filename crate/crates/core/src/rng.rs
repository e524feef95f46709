//! Seeded random streams.
//!
//! Every random decision is drawn from a stream keyed by the global seed and
//! a list of string parts (method name, sample id, ...). Streams never depend
//! on processing order, so results do not change when samples are handled in
//! parallel or in a different sequence.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a. Stable across platforms and releases, unlike `DefaultHasher`.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    fnv1a_extend(FNV_OFFSET, bytes)
}

fn fnv1a_extend(mut hash: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

/// Derives a 64-bit key from a seed and a sequence of parts.
pub fn derive_key(seed: u64, parts: &[&str]) -> u64 {
    let mut hash = fnv1a_extend(FNV_OFFSET, &seed.to_le_bytes());
    for part in parts {
        // length prefix keeps ("ab","c") and ("a","bc") apart
        hash = fnv1a_extend(hash, &(part.len() as u64).to_le_bytes());
        hash = fnv1a_extend(hash, part.as_bytes());
    }
    hash
}

/// A ChaCha stream for `(seed, parts)`.
pub fn stream(seed: u64, parts: &[&str]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_key(seed, parts))
}

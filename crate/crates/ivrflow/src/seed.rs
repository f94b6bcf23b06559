//! Stable hashing and seed derivation.
//!
//! `std`'s hasher is not stable across releases, so everything that feeds
//! a reproducible RNG stream goes through FNV-1a and a splitmix64 finisher.

const FNV_OFFSET: u64 = 0xcbf29ce484222325;
const FNV_PRIME: u64 = 0x100000001b3;

pub fn fnv1a(bytes: &[u8]) -> u64 {
    fnv1a_continue(FNV_OFFSET, bytes)
}

pub fn fnv1a_continue(mut hash: u64, bytes: &[u8]) -> u64 {
    for b in bytes {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Seed for one session, derived from the engine seed and the call id.
pub fn session_seed(base: u64, call_id: &str) -> u64 {
    splitmix64(base ^ fnv1a(call_id.as_bytes()))
}

/// Seed for one utterance within a session.
pub fn utterance_seed(session_seed: u64, utterance_index: u64) -> u64 {
    splitmix64(session_seed ^ splitmix64(utterance_index.wrapping_add(1)))
}

//! FNV-1a content hashing for artifact cross-checks.
//!
//! Vocabulary, assignment and model files embed each other's hashes so a
//! model trained against one vocabulary refuses to load with another.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

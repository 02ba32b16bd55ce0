//! Content hashing and seed derivation.
//!
//! Every stage artifact embeds SHA-256 hashes of its inputs so reruns can be
//! detected as cache hits and mismatched artifacts refused when mixed. Seeds
//! for stochastic components are derived from the master seed through the
//! same hash so fold assignment and per-initialization RNG streams are stable
//! across platforms and thread counts.

use sha2::{Digest, Sha256};

/// Hex-encoded SHA-256 of a byte slice.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Hash of several labelled parts; order-sensitive.
pub fn combine(parts: &[(&str, &str)]) -> String {
    let mut hasher = Sha256::new();
    for (label, value) in parts {
        hasher.update(label.as_bytes());
        hasher.update([0u8]);
        hasher.update(value.as_bytes());
        hasher.update([0xff]);
    }
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Derive a child seed from a master seed, a purpose tag and an index.
///
/// Initialization `i` of an experiment uses `derive_seed(master, "init", i)`;
/// fold shuffling uses `derive_seed(master, "folds", n)` so the assignment
/// depends only on the master seed and the track count.
pub fn derive_seed(master: u64, tag: &str, index: u64) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update(tag.as_bytes());
    hasher.update(index.to_le_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("sha256 yields 32 bytes"))
}

//! Deterministic seed fan-out.
//!
//! One master seed expands into independent per-(stage, item, repetition)
//! seeds by hashing the labels, so runs replay exactly regardless of
//! execution order or batch composition.

use sha2::{Digest, Sha256};

/// Derive a child seed from a master seed and a label path.
pub fn derive(master: u64, parts: &[&str]) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    for p in parts {
        hasher.update([0x1f]); // unit separator, keeps ("ab","c") != ("a","bc")
        hasher.update(p.as_bytes());
    }
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest >= 8 bytes"))
}

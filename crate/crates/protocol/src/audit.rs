//! Byte-level checks on what a party received. They test data-flow
//! discipline (nothing secret was sent), not cryptographic security.

use std::collections::HashSet;

use fairgate_core::DesignMatrix64;
use fairgate_fhe::SecretKey;

/// Length of the secret-key windows searched for.
pub const WINDOW: usize = 32;

/// Whether any 32-byte window of the secret key's serialized polynomial
/// data occurs in `bytes`. Windows are taken from the NTT-form tail, which
/// is high-entropy, so a hit cannot be a coincidence.
pub fn contains_secret_key(bytes: &[u8], sk: &SecretKey) -> bool {
    let sk_bytes = sk.to_bytes();
    let tail = &sk_bytes[sk_bytes.len() / 2..];
    tail.chunks_exact(WINDOW)
        .step_by(7)
        .take(64)
        .any(|w| bytes.windows(WINDOW).any(|b| b == w))
}

/// Every non-zero cell of `design`, raw and max-abs normalized, plus the
/// coded target, as little-endian f64 patterns.
pub fn plaintext_patterns(design: &DesignMatrix64, coded_target: &[f64]) -> HashSet<[u8; 8]> {
    let mut out = HashSet::new();
    let mut add = |v: f64| {
        if v != 0.0 {
            out.insert(v.to_le_bytes());
        }
    };
    for j in 0..design.cols() {
        let col = design.column(j);
        let scale = col.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for &v in &col {
            add(v);
            if scale > 0.0 {
                add(v / scale);
            }
        }
    }
    coded_target.iter().copied().for_each(add);
    out
}

/// Values from `patterns` that occur anywhere in `bytes`, at any offset.
pub fn leaked_values(bytes: &[u8], patterns: &HashSet<[u8; 8]>) -> Vec<f64> {
    let mut hits: Vec<f64> = bytes
        .windows(8)
        .filter_map(|w| {
            let w: [u8; 8] = w.try_into().expect("8 bytes");
            patterns.contains(&w).then(|| f64::from_le_bytes(w))
        })
        .collect();
    hits.sort_by(f64::total_cmp);
    hits.dedup();
    hits
}

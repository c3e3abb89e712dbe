//! Leveled approximate homomorphic encryption for slot-batched real vectors.
//!
//! Two backends share one contract: a cleartext reference backend whose
//! "ciphertexts" are the plaintext vectors themselves, and a toy RLWE
//! scheme in the CKKS family (RNS + NTT arithmetic, canonical-embedding
//! encoding, relinearization, rescaling and rotations). Depth is restored
//! interactively: the secret-key holder decrypts and re-encrypts a
//! [`RefreshToken`].
//!
//! **Not for production.** The default parameters make no security claim;
//! see [`NOT_FOR_PRODUCTION`].
//!
//! ```
//! use fairgate_fhe::{keygen, BackendKind, FheParams, PlainVector};
//!
//! let keys = keygen(&FheParams::preset("small")?, BackendKind::Rlwe)?;
//! let m = PlainVector::new(vec![1.5, -2.0, 0.25])?;
//! let ct = keys.pk.encrypt_seeded(&m, 7)?;
//! let sq = keys.evk.mul(&ct, &ct)?;
//! let out = keys.sk.decrypt(&sq)?;
//! assert!((out.values()[1] - 4.0).abs() < 1e-3);
//! assert_eq!(sq.level(), ct.level() - 1);
//! # Ok::<(), fairgate_fhe::FheError>(())
//! ```

mod arith;
pub mod circuit;
mod context;
mod encoding;
mod error;
mod eval;
mod keys;
mod ntt;
mod params;
mod rlwe;
mod serial;

pub use error::{FheError, Result};
pub use keys::{
    keygen, refresh_apply, refresh_request, BackendKind, Ciphertext, EvalKey, KeyId, KeySet, PlainVector, PublicKey,
    RefreshToken, SecretKey, SCALE_TOLERANCE,
};
pub use params::{FheParams, ModulusChain};
pub use serial::VERSION as WIRE_VERSION;

/// Printed by every entry point that uses the RLWE backend.
pub const NOT_FOR_PRODUCTION: &str = "WARNING: the rlwe backend is a toy. Its parameters make NO security claim \
and it must not protect real data.";

/// Declared round-trip precision: `2^-(scale_bits - 10)`.
pub fn precision_bound(params: &FheParams) -> f64 {
    (-(params.scale_bits as f64 - 10.0)).exp2()
}

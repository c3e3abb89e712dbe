use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

use crate::context::Context;
use crate::error::{FheError, Result};
use crate::params::FheParams;
use crate::rlwe::{self, EvalKeys, PublicPoly, RlweCiphertext, SecretPoly};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BackendKind {
    /// Reference backend: the payload is the plaintext itself.
    Cleartext,
    /// Toy RLWE backend.
    Rlwe,
}

impl BackendKind {
    pub const ALL: [BackendKind; 2] = [BackendKind::Cleartext, BackendKind::Rlwe];

    pub fn name(self) -> &'static str {
        match self {
            BackendKind::Cleartext => "cleartext",
            BackendKind::Rlwe => "rlwe",
        }
    }

    pub(crate) fn tag(self) -> u8 {
        match self {
            BackendKind::Cleartext => 0,
            BackendKind::Rlwe => 1,
        }
    }

    pub(crate) fn from_tag(t: u8) -> Result<Self> {
        match t {
            0 => Ok(BackendKind::Cleartext),
            1 => Ok(BackendKind::Rlwe),
            other => Err(FheError::Decode(format!("unknown backend tag {other}"))),
        }
    }
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BackendKind {
    type Err = FheError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cleartext" | "clear" => Ok(BackendKind::Cleartext),
            "rlwe" | "ckks" => Ok(BackendKind::Rlwe),
            other => Err(FheError::InvalidParams(format!("unknown backend '{other}'"))),
        }
    }
}

/// Fingerprint of a key set. Ciphertexts carry the fingerprint of the key
/// that produced them; decrypting or evaluating under another key set fails
/// with [`FheError::KeyMismatch`] instead of returning garbage.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KeyId(pub [u8; 16]);

impl fmt::Debug for KeyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "KeyId(")?;
        for b in &self.0[..6] {
            write!(f, "{b:02x}")?;
        }
        write!(f, ")")
    }
}

/// A vector of finite reals no longer than the slot count.
#[derive(Clone, Debug, PartialEq)]
pub struct PlainVector(Vec<f64>);

impl PlainVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(FheError::NonFinite(i));
        }
        Ok(PlainVector(values))
    }

    /// The same constant in every slot.
    pub fn constant(value: f64, slots: usize) -> Result<Self> {
        Self::new(vec![value; slots])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<f64>> for PlainVector {
    type Error = FheError;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl TryFrom<&[f64]> for PlainVector {
    type Error = FheError;
    fn try_from(v: &[f64]) -> Result<Self> {
        Self::new(v.to_vec())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Payload {
    Clear(Vec<f64>),
    Rlwe(RlweCiphertext),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ciphertext {
    pub(crate) backend: BackendKind,
    pub(crate) params_digest: [u8; 32],
    pub(crate) key_id: KeyId,
    pub(crate) level: usize,
    pub(crate) scale: f64,
    pub(crate) payload: Payload,
}

impl Ciphertext {
    pub fn backend(&self) -> BackendKind {
        self.backend
    }

    /// Remaining multiplicative depth.
    pub fn level(&self) -> usize {
        self.level
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn key_id(&self) -> KeyId {
        self.key_id
    }
}

#[derive(Clone)]
pub struct PublicKey {
    pub(crate) ctx: Arc<Context>,
    pub(crate) backend: BackendKind,
    pub(crate) key_id: KeyId,
    pub(crate) inner: Option<PublicPoly>,
}

#[derive(Clone)]
pub struct SecretKey {
    pub(crate) ctx: Arc<Context>,
    pub(crate) backend: BackendKind,
    pub(crate) key_id: KeyId,
    pub(crate) inner: Option<SecretPoly>,
}

#[derive(Clone)]
pub struct EvalKey {
    pub(crate) ctx: Arc<Context>,
    pub(crate) backend: BackendKind,
    pub(crate) key_id: KeyId,
    pub(crate) inner: Option<EvalKeys>,
}

macro_rules! key_common {
    ($t:ty, $name:literal) => {
        impl $t {
            pub fn params(&self) -> &FheParams {
                &self.ctx.params
            }
            pub fn backend(&self) -> BackendKind {
                self.backend
            }
            pub fn key_id(&self) -> KeyId {
                self.key_id
            }
            pub fn slot_count(&self) -> usize {
                self.ctx.slots()
            }
            pub fn max_level(&self) -> usize {
                self.ctx.max_level()
            }
        }

        impl fmt::Debug for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.debug_struct($name)
                    .field("backend", &self.backend)
                    .field("key_id", &self.key_id)
                    .finish_non_exhaustive()
            }
        }
    };
}

key_common!(PublicKey, "PublicKey");
key_common!(SecretKey, "SecretKey");
key_common!(EvalKey, "EvalKey");

/// The `(pk, sk, evk)` triple.
#[derive(Clone, Debug)]
pub struct KeySet {
    pub pk: PublicKey,
    pub sk: SecretKey,
    pub evk: EvalKey,
}

pub(crate) fn cleartext_key_id(ctx: &Context) -> KeyId {
    let mut h = Sha256::new();
    h.update(b"cleartext");
    h.update(ctx.digest);
    KeyId(h.finalize()[..16].try_into().expect("16 bytes"))
}

pub(crate) fn rlwe_key_id(pk: &PublicPoly) -> KeyId {
    let mut h = Sha256::new();
    h.update(b"rlwe");
    for row in pk.b.iter().chain(&pk.a) {
        for x in row {
            h.update(x.to_le_bytes());
        }
    }
    KeyId(h.finalize()[..16].try_into().expect("16 bytes"))
}

/// Generate a key set. Deterministic in `params.seed`.
pub fn keygen(params: &FheParams, backend: BackendKind) -> Result<KeySet> {
    let ctx = Arc::new(Context::new(params)?);
    match backend {
        BackendKind::Cleartext => {
            let key_id = cleartext_key_id(&ctx);
            Ok(KeySet {
                pk: PublicKey { ctx: ctx.clone(), backend, key_id, inner: None },
                sk: SecretKey { ctx: ctx.clone(), backend, key_id, inner: None },
                evk: EvalKey { ctx, backend, key_id, inner: None },
            })
        }
        BackendKind::Rlwe => {
            let mut rng = ChaCha20Rng::seed_from_u64(params.seed);
            let s = rlwe::gen_secret(&ctx, &mut rng);
            let pk = rlwe::gen_public(&ctx, &s, &mut rng);
            let evk = rlwe::gen_eval(&ctx, &s, &mut rng);
            let key_id = rlwe_key_id(&pk);
            Ok(KeySet {
                pk: PublicKey { ctx: ctx.clone(), backend, key_id, inner: Some(pk) },
                sk: SecretKey { ctx: ctx.clone(), backend, key_id, inner: Some(s) },
                evk: EvalKey { ctx, backend, key_id, inner: Some(evk) },
            })
        }
    }
}

impl PublicKey {
    /// Encrypt at the top level with scale `2^scale_bits`. Shorter vectors
    /// are zero-padded to the slot count.
    pub fn encrypt<R: Rng + ?Sized>(&self, m: &PlainVector, rng: &mut R) -> Result<Ciphertext> {
        let slots = self.ctx.slots();
        if m.len() > slots {
            return Err(FheError::TooLong { len: m.len(), slots });
        }
        let top = self.ctx.max_level();
        let payload = match &self.inner {
            None => {
                let mut v = m.values().to_vec();
                v.resize(slots, 0.0);
                Payload::Clear(v)
            }
            Some(pk) => Payload::Rlwe(rlwe::encrypt(&self.ctx, pk, m.values(), rng)?),
        };
        Ok(Ciphertext {
            backend: self.backend,
            params_digest: self.ctx.digest,
            key_id: self.key_id,
            level: top,
            scale: self.ctx.scales[top],
            payload,
        })
    }

    /// Encrypt with a fresh ChaCha stream seeded by `seed`.
    pub fn encrypt_seeded(&self, m: &PlainVector, seed: u64) -> Result<Ciphertext> {
        self.encrypt(m, &mut ChaCha20Rng::seed_from_u64(seed))
    }
}

impl SecretKey {
    /// Decrypt to `slot_count` values.
    pub fn decrypt(&self, ct: &Ciphertext) -> Result<PlainVector> {
        check_ct(&self.ctx, self.backend, self.key_id, ct)?;
        let values = match (&ct.payload, &self.inner) {
            (Payload::Clear(v), None) => v.clone(),
            (Payload::Rlwe(c), Some(s)) => rlwe::decrypt(&self.ctx, s, c, ct.scale),
            _ => return Err(FheError::BackendMismatch(self.backend.name(), ct.backend.name())),
        };
        Ok(PlainVector(values))
    }
}

pub(crate) fn check_ct(ctx: &Context, backend: BackendKind, key_id: KeyId, ct: &Ciphertext) -> Result<()> {
    if ct.backend != backend {
        return Err(FheError::BackendMismatch(backend.name(), ct.backend.name()));
    }
    if ct.params_digest != ctx.digest || ct.key_id != key_id {
        return Err(FheError::KeyMismatch);
    }
    if ct.level > ctx.max_level() {
        return Err(FheError::Decode(format!("level {} above the chain top", ct.level)));
    }
    let canonical = ctx.scales[ct.level];
    if !((ct.scale / canonical - 1.0).abs() <= SCALE_TOLERANCE) {
        return Err(FheError::ScaleMismatch { left: ct.scale, right: canonical });
    }
    let consistent = match &ct.payload {
        Payload::Clear(v) => v.len() == ctx.slots(),
        Payload::Rlwe(c) => c.level() == ct.level && c.c1.len() == c.c0.len() && c.c0.iter().chain(&c.c1).all(|r| r.len() == ctx.n),
    };
    if !consistent {
        return Err(FheError::Decode("payload does not match the declared level".into()));
    }
    Ok(())
}

/// Relative tolerance on scale agreement.
pub const SCALE_TOLERANCE: f64 = 1e-6;

/// A ciphertext sent to the secret-key holder for re-encryption, sealed with
/// a digest of its serialized form.
#[derive(Clone, Debug, PartialEq)]
pub struct RefreshToken {
    pub ciphertext: Ciphertext,
    pub checksum: [u8; 32],
}

pub fn refresh_request(ct: &Ciphertext) -> RefreshToken {
    RefreshToken {
        checksum: Sha256::digest(ct.to_bytes()).into(),
        ciphertext: ct.clone(),
    }
}

/// Decrypt and re-encrypt at the top level. Fails with
/// [`FheError::Checksum`] if the token was altered and with
/// [`FheError::KeyMismatch`] if `sk` did not produce the ciphertext.
pub fn refresh_apply<R: Rng + ?Sized>(sk: &SecretKey, pk: &PublicKey, token: &RefreshToken, rng: &mut R) -> Result<Ciphertext> {
    let digest: [u8; 32] = Sha256::digest(token.ciphertext.to_bytes()).into();
    if digest != token.checksum {
        return Err(FheError::Checksum);
    }
    if sk.key_id != pk.key_id {
        return Err(FheError::KeyMismatch);
    }
    let m = sk.decrypt(&token.ciphertext)?;
    pk.encrypt(&m, rng)
}

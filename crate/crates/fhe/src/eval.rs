//! Homomorphic operations. Every result carries the canonical scale of its
//! level, so operands at the same level always agree on scale. Operands at
//! different levels are first brought down to the lower one.

use std::borrow::Cow;

use crate::error::{FheError, Result};
use crate::keys::{check_ct, Ciphertext, EvalKey, Payload, PlainVector};
use crate::rlwe;

impl EvalKey {
    fn check(&self, ct: &Ciphertext) -> Result<()> {
        check_ct(&self.ctx, self.backend, self.key_id, ct)
    }

    fn check_plain(&self, m: &PlainVector) -> Result<()> {
        let slots = self.ctx.slots();
        if m.len() > slots {
            return Err(FheError::TooLong { len: m.len(), slots });
        }
        Ok(())
    }

    fn with_payload(&self, like: &Ciphertext, level: usize, payload: Payload) -> Ciphertext {
        Ciphertext {
            backend: like.backend,
            params_digest: like.params_digest,
            key_id: like.key_id,
            level,
            scale: self.ctx.scales[level],
            payload,
        }
    }

    /// Bring `a` down to `level` (no-op when already there). Consumes no
    /// depth beyond the levels skipped.
    pub fn drop_to_level(&self, a: &Ciphertext, level: usize) -> Result<Ciphertext> {
        self.check(a)?;
        self.descend(a, level).map(Cow::into_owned)
    }

    fn descend<'a>(&self, a: &'a Ciphertext, level: usize) -> Result<Cow<'a, Ciphertext>> {
        if level == a.level {
            return Ok(Cow::Borrowed(a));
        }
        if level > a.level {
            return Err(FheError::LevelExhausted { needed: level, level: a.level });
        }
        let payload = match &a.payload {
            Payload::Clear(v) => Payload::Clear(v.clone()),
            Payload::Rlwe(c) => {
                // multiply by round(Δ_target · q_{target+1} / scale) and rescale once
                let q = self.ctx.q(level + 1) as f64;
                let factor = (self.ctx.scales[level] * q / a.scale).round();
                Payload::Rlwe(rlwe::descend(&self.ctx, c, level, factor as u64))
            }
        };
        Ok(Cow::Owned(self.with_payload(a, level, payload)))
    }

    fn aligned<'a>(&self, a: &'a Ciphertext, b: &'a Ciphertext) -> Result<(Cow<'a, Ciphertext>, Cow<'a, Ciphertext>)> {
        self.check(a)?;
        self.check(b)?;
        let level = a.level.min(b.level);
        Ok((self.descend(a, level)?, self.descend(b, level)?))
    }

    /// Evaluate an arbitrary function on cleartext-backend payloads. The
    /// outputs sit at the lowest input level. This is outside the circuit
    /// vocabulary, so the RLWE backend refuses it.
    pub fn apply_cleartext<F>(&self, inputs: &[Ciphertext], f: F) -> Result<Vec<Ciphertext>>
    where
        F: FnOnce(&[&[f64]]) -> Vec<Vec<f64>>,
    {
        let Some(first) = inputs.first() else {
            return Err(FheError::Decode("no inputs".into()));
        };
        let mut views = Vec::with_capacity(inputs.len());
        for ct in inputs {
            self.check(ct)?;
            match &ct.payload {
                Payload::Clear(v) => views.push(v.as_slice()),
                Payload::Rlwe(_) => return Err(FheError::Unsupported(self.backend.name())),
            }
        }
        let level = inputs.iter().map(|c| c.level).min().unwrap_or(0);
        let slots = self.ctx.slots();
        f(&views)
            .into_iter()
            .map(|mut v| {
                let m = PlainVector::new(v.clone())?;
                self.check_plain(&m)?;
                v.resize(slots, 0.0);
                Ok(self.with_payload(first, level, Payload::Clear(v)))
            })
            .collect()
    }

    fn keys(&self) -> &rlwe::EvalKeys {
        self.inner.as_ref().expect("rlwe evaluation key")
    }

    pub fn add(&self, a: &Ciphertext, b: &Ciphertext) -> Result<Ciphertext> {
        let (a, b) = self.aligned(a, b)?;
        let payload = match (&a.payload, &b.payload) {
            (Payload::Clear(x), Payload::Clear(y)) => Payload::Clear(x.iter().zip(y).map(|(p, q)| p + q).collect()),
            (Payload::Rlwe(x), Payload::Rlwe(y)) => Payload::Rlwe(rlwe::add_ct(&self.ctx, x, y)),
            _ => unreachable!("checked backends"),
        };
        Ok(self.with_payload(&a, a.level, payload))
    }

    pub fn sub(&self, a: &Ciphertext, b: &Ciphertext) -> Result<Ciphertext> {
        let (a, b) = self.aligned(a, b)?;
        let payload = match (&a.payload, &b.payload) {
            (Payload::Clear(x), Payload::Clear(y)) => Payload::Clear(x.iter().zip(y).map(|(p, q)| p - q).collect()),
            (Payload::Rlwe(x), Payload::Rlwe(y)) => Payload::Rlwe(rlwe::sub_ct(&self.ctx, x, y)),
            _ => unreachable!("checked backends"),
        };
        Ok(self.with_payload(&a, a.level, payload))
    }

    /// Slotwise product; relinearizes and rescales, so the result sits one
    /// level below the lower operand.
    pub fn mul(&self, a: &Ciphertext, b: &Ciphertext) -> Result<Ciphertext> {
        let (a, b) = self.aligned(a, b)?;
        if a.level == 0 {
            return Err(FheError::LevelExhausted { needed: 1, level: 0 });
        }
        let payload = match (&a.payload, &b.payload) {
            (Payload::Clear(x), Payload::Clear(y)) => Payload::Clear(x.iter().zip(y).map(|(p, q)| p * q).collect()),
            (Payload::Rlwe(x), Payload::Rlwe(y)) => Payload::Rlwe(rlwe::mul_ct(&self.ctx, self.keys(), x, y)),
            _ => unreachable!("checked backends"),
        };
        Ok(self.with_payload(&a, a.level - 1, payload))
    }

    /// Slotwise product with a plaintext (zero-padded). Consumes one level.
    pub fn mul_plain(&self, a: &Ciphertext, m: &PlainVector) -> Result<Ciphertext> {
        self.check(a)?;
        self.check_plain(m)?;
        if a.level == 0 {
            return Err(FheError::LevelExhausted { needed: 1, level: 0 });
        }
        let payload = match &a.payload {
            Payload::Clear(x) => Payload::Clear(
                x.iter()
                    .enumerate()
                    .map(|(i, v)| v * m.values().get(i).copied().unwrap_or(0.0))
                    .collect(),
            ),
            Payload::Rlwe(c) => {
                // plaintext scale chosen so the rescaled product lands on Δ_{l-1}
                let l = a.level;
                let plain_scale = self.ctx.scales[l - 1] * self.ctx.q(l) as f64 / a.scale;
                Payload::Rlwe(rlwe::mul_plain(&self.ctx, c, m.values(), plain_scale)?)
            }
        };
        Ok(self.with_payload(a, a.level - 1, payload))
    }

    /// Multiply every slot by the same constant. Consumes one level.
    pub fn mul_scalar(&self, a: &Ciphertext, c: f64) -> Result<Ciphertext> {
        self.mul_plain(a, &PlainVector::constant(c, self.ctx.slots())?)
    }

    /// Slotwise sum with a plaintext. Level is preserved.
    pub fn add_plain(&self, a: &Ciphertext, m: &PlainVector) -> Result<Ciphertext> {
        self.check(a)?;
        self.check_plain(m)?;
        let payload = match &a.payload {
            Payload::Clear(x) => Payload::Clear(
                x.iter()
                    .enumerate()
                    .map(|(i, v)| v + m.values().get(i).copied().unwrap_or(0.0))
                    .collect(),
            ),
            Payload::Rlwe(c) => Payload::Rlwe(rlwe::add_plain(&self.ctx, c, m.values(), a.scale)?),
        };
        Ok(self.with_payload(a, a.level, payload))
    }

    /// Cyclic rotation of the slots: positive `steps` moves slot `i + steps`
    /// to slot `i`. Level is preserved.
    pub fn rotate(&self, a: &Ciphertext, steps: isize) -> Result<Ciphertext> {
        self.check(a)?;
        let slots = self.ctx.slots();
        let k = steps.rem_euclid(slots as isize) as usize;
        if k == 0 {
            return Ok(a.clone());
        }
        let payload = match &a.payload {
            Payload::Clear(x) => {
                let mut v = x.clone();
                v.rotate_left(k);
                Payload::Clear(v)
            }
            Payload::Rlwe(c) => Payload::Rlwe(rlwe::rotate(&self.ctx, self.keys(), c, k)?),
        };
        Ok(self.with_payload(a, a.level, payload))
    }

    /// Rotate-and-add over `log2(width)` steps: slot 0 of the result holds
    /// the sum of the first `width` slots. With `width == slot_count` every
    /// slot holds the full sum.
    pub fn inner_sum(&self, a: &Ciphertext, width: usize) -> Result<Ciphertext> {
        let slots = self.ctx.slots();
        if !width.is_power_of_two() || width > slots {
            return Err(FheError::Width { width, slots });
        }
        self.check(a)?;
        let mut acc = a.clone();
        let mut step = 1;
        while step < width {
            let r = self.rotate(&acc, step as isize)?;
            acc = self.add(&acc, &r)?;
            step <<= 1;
        }
        Ok(acc)
    }

    /// Sum of several ciphertexts.
    pub fn add_many<'a>(&self, cts: impl IntoIterator<Item = &'a Ciphertext>) -> Result<Ciphertext> {
        let mut it = cts.into_iter();
        let first = it.next().ok_or_else(|| FheError::InvalidParams("empty sum".into()))?;
        it.try_fold(first.clone(), |acc, c| self.add(&acc, c))
    }
}

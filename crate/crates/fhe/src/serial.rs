//! Versioned length-prefixed binary encodings. Every blob starts with four
//! magic bytes and a version byte; integers and coefficients are little-endian.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::context::Context;
use crate::error::{FheError, Result};
use crate::keys::{BackendKind, Ciphertext, EvalKey, KeyId, Payload, PublicKey, SecretKey};
use crate::params::FheParams;
use crate::rlwe::{EvalKeys, Poly, PublicPoly, RlweCiphertext, SecretPoly, SwitchKey};

pub const VERSION: u8 = 1;
const CT_MAGIC: &[u8; 4] = b"FGCT";
const PK_MAGIC: &[u8; 4] = b"FGPK";
const SK_MAGIC: &[u8; 4] = b"FGSK";
const EK_MAGIC: &[u8; 4] = b"FGEK";

#[derive(Default)]
struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn bytes(&mut self, b: &[u8]) {
        self.0.extend_from_slice(b);
    }
    fn poly(&mut self, p: &Poly) {
        self.u32(p.len() as u32);
        self.u32(p.first().map_or(0, Vec::len) as u32);
        for row in p {
            for x in row {
                self.u64(*x);
            }
        }
    }
    fn switch_key(&mut self, k: &SwitchKey) {
        self.u32(k.b.len() as u32);
        for (b, a) in k.b.iter().zip(&k.a) {
            self.poly(b);
            self.poly(a);
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|e| *e <= self.buf.len());
        let end = end.ok_or_else(|| FheError::Decode("truncated input".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("N bytes"))
    }
    fn poly(&mut self, n: usize) -> Result<Poly> {
        let rows = self.u32()? as usize;
        let width = self.u32()? as usize;
        if width != n {
            return Err(FheError::Decode(format!("row width {width}, expected {n}")));
        }
        let raw = self.take(rows.checked_mul(width).and_then(|c| c.checked_mul(8)).ok_or_else(|| FheError::Decode("size overflow".into()))?)?;
        Ok(raw
            .chunks_exact(width * 8)
            .map(|row| row.chunks_exact(8).map(|c| u64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
            .collect())
    }
    fn switch_key(&mut self, n: usize) -> Result<SwitchKey> {
        let digits = self.u32()? as usize;
        let mut b = Vec::with_capacity(digits.min(64));
        let mut a = Vec::with_capacity(digits.min(64));
        for _ in 0..digits {
            b.push(self.poly(n)?);
            a.push(self.poly(n)?);
        }
        Ok(SwitchKey { b, a })
    }
    fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(FheError::Decode(format!("{} trailing bytes", self.buf.len() - self.pos)));
        }
        Ok(())
    }
}

fn header(w: &mut Writer, magic: &[u8; 4], backend: BackendKind) {
    w.bytes(magic);
    w.u8(VERSION);
    w.u8(backend.tag());
}

fn read_header(r: &mut Reader<'_>, magic: &[u8; 4]) -> Result<BackendKind> {
    if r.take(4)? != magic {
        return Err(FheError::Decode("bad magic".into()));
    }
    let v = r.u8()?;
    if v != VERSION {
        return Err(FheError::Decode(format!("unsupported version {v}")));
    }
    BackendKind::from_tag(r.u8()?)
}

/// Body preceded by its length.
fn with_len(w: &mut Writer, body: Writer) {
    w.u64(body.0.len() as u64);
    w.bytes(&body.0);
}

fn read_body<'a>(r: &mut Reader<'a>) -> Result<Reader<'a>> {
    let len = r.u64()?;
    let len = usize::try_from(len).map_err(|_| FheError::Decode("length overflow".into()))?;
    Ok(Reader::new(r.take(len)?))
}

fn key_prefix(w: &mut Writer, magic: &[u8; 4], ctx: &Context, backend: BackendKind, id: KeyId) {
    header(w, magic, backend);
    let text = ctx.params.to_string();
    w.u32(text.len() as u32);
    w.bytes(text.as_bytes());
    w.bytes(&id.0);
}

fn read_key_prefix(r: &mut Reader<'_>, magic: &[u8; 4]) -> Result<(BackendKind, Arc<Context>, KeyId)> {
    let backend = read_header(r, magic)?;
    let len = r.u32()? as usize;
    let text = std::str::from_utf8(r.take(len)?).map_err(|_| FheError::Decode("params are not UTF-8".into()))?;
    let params = FheParams::parse(text)?;
    let ctx = Arc::new(Context::new(&params)?);
    let id = KeyId(r.array()?);
    Ok((backend, ctx, id))
}

fn expect_rlwe<T>(backend: BackendKind, inner: Option<T>) -> Result<Option<T>> {
    match (backend, inner) {
        (BackendKind::Cleartext, None) => Ok(None),
        (BackendKind::Rlwe, Some(v)) => Ok(Some(v)),
        _ => Err(FheError::Decode("payload does not match backend".into())),
    }
}

impl Ciphertext {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::default();
        header(&mut w, CT_MAGIC, self.backend);
        w.bytes(&self.params_digest);
        w.bytes(&self.key_id.0);
        w.u32(self.level as u32);
        w.f64(self.scale);
        let mut body = Writer::default();
        match &self.payload {
            Payload::Clear(v) => {
                body.u32(v.len() as u32);
                v.iter().for_each(|x| body.f64(*x));
            }
            Payload::Rlwe(c) => {
                body.poly(&c.c0);
                body.poly(&c.c1);
            }
        }
        with_len(&mut w, body);
        w.0
    }

    /// Structural decoding; consistency with a key is checked when the
    /// ciphertext is next used.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        let backend = read_header(&mut r, CT_MAGIC)?;
        let params_digest = r.array()?;
        let key_id = KeyId(r.array()?);
        let level = r.u32()? as usize;
        let scale = r.f64()?;
        let mut body = read_body(&mut r)?;
        r.finish()?;
        let payload = match backend {
            BackendKind::Cleartext => {
                let n = body.u32()? as usize;
                let raw = body.take(n.checked_mul(8).ok_or_else(|| FheError::Decode("size overflow".into()))?)?;
                Payload::Clear(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
            }
            BackendKind::Rlwe => {
                // peek the row width from the first poly header
                let width = u32::from_le_bytes(body.buf.get(4..8).ok_or_else(|| FheError::Decode("truncated input".into()))?.try_into().expect("4 bytes")) as usize;
                let c0 = body.poly(width)?;
                let c1 = body.poly(width)?;
                if c0.is_empty() || c0.len() != c1.len() {
                    return Err(FheError::Decode("ciphertext halves differ".into()));
                }
                Payload::Rlwe(RlweCiphertext { c0, c1 })
            }
        };
        body.finish()?;
        Ok(Ciphertext { backend, params_digest, key_id, level, scale, payload })
    }
}

impl PublicKey {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::default();
        key_prefix(&mut w, PK_MAGIC, &self.ctx, self.backend, self.key_id);
        let mut body = Writer::default();
        if let Some(pk) = &self.inner {
            body.poly(&pk.b);
            body.poly(&pk.a);
        }
        with_len(&mut w, body);
        w.0
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        let (backend, ctx, key_id) = read_key_prefix(&mut r, PK_MAGIC)?;
        let mut body = read_body(&mut r)?;
        r.finish()?;
        let inner = if body.buf.is_empty() {
            None
        } else {
            Some(PublicPoly { b: body.poly(ctx.n)?, a: body.poly(ctx.n)? })
        };
        body.finish()?;
        Ok(PublicKey { inner: expect_rlwe(backend, inner)?, ctx, backend, key_id })
    }
}

impl SecretKey {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::default();
        key_prefix(&mut w, SK_MAGIC, &self.ctx, self.backend, self.key_id);
        let mut body = Writer::default();
        if let Some(s) = &self.inner {
            body.u32(s.small.len() as u32);
            s.small.iter().for_each(|x| body.u8(*x as i8 as u8));
            body.poly(&s.ntt);
        }
        with_len(&mut w, body);
        w.0
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        let (backend, ctx, key_id) = read_key_prefix(&mut r, SK_MAGIC)?;
        let mut body = read_body(&mut r)?;
        r.finish()?;
        let inner = if body.buf.is_empty() {
            None
        } else {
            let n = body.u32()? as usize;
            let small = body.take(n)?.iter().map(|b| *b as i8 as i64).collect();
            Some(SecretPoly { small, ntt: body.poly(ctx.n)? })
        };
        body.finish()?;
        Ok(SecretKey { inner: expect_rlwe(backend, inner)?, ctx, backend, key_id })
    }
}

impl EvalKey {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::default();
        key_prefix(&mut w, EK_MAGIC, &self.ctx, self.backend, self.key_id);
        let mut body = Writer::default();
        if let Some(k) = &self.inner {
            body.switch_key(&k.relin);
            body.u32(k.rotations.len() as u32);
            for (step, key) in &k.rotations {
                body.u32(*step as u32);
                body.switch_key(key);
            }
        }
        with_len(&mut w, body);
        w.0
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        let (backend, ctx, key_id) = read_key_prefix(&mut r, EK_MAGIC)?;
        let mut body = read_body(&mut r)?;
        r.finish()?;
        let inner = if body.buf.is_empty() {
            None
        } else {
            let relin = body.switch_key(ctx.n)?;
            let count = body.u32()? as usize;
            let mut rotations = BTreeMap::new();
            for _ in 0..count {
                let step = body.u32()? as usize;
                rotations.insert(step, body.switch_key(ctx.n)?);
            }
            Some(EvalKeys { relin, rotations })
        };
        body.finish()?;
        Ok(EvalKey { inner: expect_rlwe(backend, inner)?, ctx, backend, key_id })
    }
}

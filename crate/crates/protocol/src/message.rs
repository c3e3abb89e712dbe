//! Typed message bodies and their payload encoding.

use std::collections::BTreeSet;

use fairgate_fhe::{Ciphertext, EvalKey, RefreshToken};

use crate::codec::{Reader, Writer};
use crate::error::{ProtocolError, Result};
use crate::frame::{Frame, MessageKind};

/// One encoded design column, split into blocks of `slot_count` rows.
#[derive(Clone, Debug, PartialEq)]
pub struct EncryptedColumn {
    pub key: String,
    pub blocks: Vec<Ciphertext>,
}

/// A sensitive feature and the design columns that encode it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SensitiveGroup {
    pub label: String,
    pub columns: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoundData {
    pub rows: u64,
    pub columns: Vec<EncryptedColumn>,
    pub target: Vec<Ciphertext>,
    pub unprotected: Vec<String>,
    pub sensitive: Vec<SensitiveGroup>,
}

impl RoundData {
    /// S_P and S_U are disjoint, every label has a column, and all columns
    /// have as many blocks as the target.
    pub fn validate(&self) -> std::result::Result<(), String> {
        let su: BTreeSet<&str> = self.unprotected.iter().map(String::as_str).collect();
        if su.len() != self.unprotected.len() {
            return Err("duplicate unprotected column".into());
        }
        let mut seen = BTreeSet::new();
        for g in &self.sensitive {
            if !seen.insert(g.label.as_str()) {
                return Err(format!("sensitive feature {:?} listed twice", g.label));
            }
            if let Some(c) = g.columns.iter().find(|c| su.contains(c.as_str())) {
                return Err(format!("column {c:?} is both sensitive and unprotected"));
            }
        }
        let have: BTreeSet<&str> = self.columns.iter().map(|c| c.key.as_str()).collect();
        let needed = self.unprotected.iter().chain(self.sensitive.iter().flat_map(|g| &g.columns));
        for k in needed {
            if !have.contains(k.as_str()) {
                return Err(format!("no ciphertexts for column {k:?}"));
            }
        }
        if let Some(c) = self.columns.iter().find(|c| c.blocks.len() != self.target.len()) {
            return Err(format!("column {:?} has {} blocks, target has {}", c.key, c.blocks.len(), self.target.len()));
        }
        Ok(())
    }

    pub fn column(&self, key: &str) -> Option<&EncryptedColumn> {
        self.columns.iter().find(|c| c.key == key)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelLayout {
    /// One ciphertext per coefficient, value replicated across slots.
    Replicated,
    /// Coefficients packed in slot order across as few ciphertexts as fit.
    Packed,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EncryptedModel {
    pub columns: Vec<String>,
    pub layout: ModelLayout,
    pub ciphertexts: Vec<Ciphertext>,
}

pub enum ProtocolMessage {
    EvkTransfer { config_digest: [u8; 32], evk: EvalKey },
    RoundData(RoundData),
    ModelResult(EncryptedModel),
    LooModelResult { label: String, model: EncryptedModel },
    RefreshRequest(Vec<RefreshToken>),
    RefreshResponse(Vec<Ciphertext>),
    Continue,
    Terminate,
}

impl std::fmt::Debug for ProtocolMessage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ProtocolMessage::{}", self.kind())
    }
}

fn cts(w: &mut Writer, v: &[Ciphertext]) {
    w.u32(v.len() as u32);
    v.iter().for_each(|c| w.bytes(&c.to_bytes()));
}

fn read_cts(r: &mut Reader<'_>) -> std::result::Result<Vec<Ciphertext>, String> {
    let n = r.count(8)?;
    (0..n)
        .map(|_| Ciphertext::from_bytes(r.bytes()?).map_err(|e| e.to_string()))
        .collect()
}

fn model(w: &mut Writer, m: &EncryptedModel) {
    w.strs(&m.columns);
    w.u8(match m.layout {
        ModelLayout::Replicated => 0,
        ModelLayout::Packed => 1,
    });
    cts(w, &m.ciphertexts);
}

fn read_model(r: &mut Reader<'_>) -> std::result::Result<EncryptedModel, String> {
    let columns = r.strs()?;
    let layout = match r.u8()? {
        0 => ModelLayout::Replicated,
        1 => ModelLayout::Packed,
        t => return Err(format!("unknown layout tag {t}")),
    };
    Ok(EncryptedModel { columns, layout, ciphertexts: read_cts(r)? })
}

impl ProtocolMessage {
    pub fn kind(&self) -> MessageKind {
        match self {
            ProtocolMessage::EvkTransfer { .. } => MessageKind::EvkTransfer,
            ProtocolMessage::RoundData(_) => MessageKind::RoundData,
            ProtocolMessage::ModelResult(_) => MessageKind::ModelResult,
            ProtocolMessage::LooModelResult { .. } => MessageKind::LooModelResult,
            ProtocolMessage::RefreshRequest(_) => MessageKind::RefreshRequest,
            ProtocolMessage::RefreshResponse(_) => MessageKind::RefreshResponse,
            ProtocolMessage::Continue => MessageKind::Continue,
            ProtocolMessage::Terminate => MessageKind::Terminate,
        }
    }

    pub fn encode_body(&self) -> Vec<u8> {
        let mut w = Writer::default();
        match self {
            ProtocolMessage::EvkTransfer { config_digest, evk } => {
                w.0.extend_from_slice(config_digest);
                w.bytes(&evk.to_bytes());
            }
            ProtocolMessage::RoundData(d) => {
                w.u64(d.rows);
                w.u32(d.columns.len() as u32);
                for c in &d.columns {
                    w.str(&c.key);
                    cts(&mut w, &c.blocks);
                }
                cts(&mut w, &d.target);
                w.strs(&d.unprotected);
                w.u32(d.sensitive.len() as u32);
                for g in &d.sensitive {
                    w.str(&g.label);
                    w.strs(&g.columns);
                }
            }
            ProtocolMessage::ModelResult(m) => model(&mut w, m),
            ProtocolMessage::LooModelResult { label, model: m } => {
                w.str(label);
                model(&mut w, m);
            }
            ProtocolMessage::RefreshRequest(tokens) => {
                w.u32(tokens.len() as u32);
                for t in tokens {
                    w.bytes(&t.ciphertext.to_bytes());
                    w.0.extend_from_slice(&t.checksum);
                }
            }
            ProtocolMessage::RefreshResponse(v) => cts(&mut w, v),
            ProtocolMessage::Continue | ProtocolMessage::Terminate => {}
        }
        w.0
    }

    pub fn to_frame(&self, round: u32) -> Frame {
        Frame::new(self.kind(), round, self.encode_body())
    }

    pub fn from_frame(frame: &Frame) -> Result<Self> {
        let kind = frame.kind;
        Self::decode_body(kind, &frame.payload).map_err(|reason| ProtocolError::Malformed { kind, reason })
    }

    fn decode_body(kind: MessageKind, payload: &[u8]) -> std::result::Result<Self, String> {
        let mut r = Reader::new(payload);
        let msg = match kind {
            MessageKind::EvkTransfer => {
                let config_digest: [u8; 32] = r.take(32)?.try_into().expect("32 bytes");
                let evk = EvalKey::from_bytes(r.bytes()?).map_err(|e| e.to_string())?;
                ProtocolMessage::EvkTransfer { config_digest, evk }
            }
            MessageKind::RoundData => {
                let rows = r.u64()?;
                let n = r.count(16)?;
                let mut columns = Vec::with_capacity(n);
                for _ in 0..n {
                    let key = r.str()?;
                    columns.push(EncryptedColumn { key, blocks: read_cts(&mut r)? });
                }
                let target = read_cts(&mut r)?;
                let unprotected = r.strs()?;
                let g = r.count(12)?;
                let mut sensitive = Vec::with_capacity(g);
                for _ in 0..g {
                    let label = r.str()?;
                    sensitive.push(SensitiveGroup { label, columns: r.strs()? });
                }
                let d = RoundData { rows, columns, target, unprotected, sensitive };
                d.validate()?;
                ProtocolMessage::RoundData(d)
            }
            MessageKind::ModelResult => ProtocolMessage::ModelResult(read_model(&mut r)?),
            MessageKind::LooModelResult => {
                let label = r.str()?;
                ProtocolMessage::LooModelResult { label, model: read_model(&mut r)? }
            }
            MessageKind::RefreshRequest => {
                let n = r.count(40)?;
                let mut tokens = Vec::with_capacity(n);
                for _ in 0..n {
                    let ciphertext = Ciphertext::from_bytes(r.bytes()?).map_err(|e| e.to_string())?;
                    let checksum = r.take(32)?.try_into().expect("32 bytes");
                    tokens.push(RefreshToken { ciphertext, checksum });
                }
                ProtocolMessage::RefreshRequest(tokens)
            }
            MessageKind::RefreshResponse => ProtocolMessage::RefreshResponse(read_cts(&mut r)?),
            MessageKind::Continue => ProtocolMessage::Continue,
            MessageKind::Terminate => ProtocolMessage::Terminate,
        };
        r.finish()?;
        Ok(msg)
    }
}

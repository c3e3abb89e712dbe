//! Wire framing: `magic(4) | version(1) | kind(1) | round(4, LE) |
//! length(8, LE) | payload | crc32(payload, LE)`.

use std::fmt;
use std::io::Read;

use crate::error::{FrameError, ProtocolError, Result};

pub const MAGIC: [u8; 4] = *b"FGP1";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 18;
pub const TRAILER_LEN: usize = 4;
pub const DEFAULT_MAX_PAYLOAD: u64 = 256 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MessageKind {
    EvkTransfer,
    RoundData,
    ModelResult,
    LooModelResult,
    RefreshRequest,
    RefreshResponse,
    Continue,
    Terminate,
}

impl MessageKind {
    pub const ALL: [MessageKind; 8] = [
        MessageKind::EvkTransfer,
        MessageKind::RoundData,
        MessageKind::ModelResult,
        MessageKind::LooModelResult,
        MessageKind::RefreshRequest,
        MessageKind::RefreshResponse,
        MessageKind::Continue,
        MessageKind::Terminate,
    ];

    pub fn tag(self) -> u8 {
        self as u8 + 1
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        Self::ALL.get(usize::from(tag).checked_sub(1)?).copied()
    }

    /// Whether the key holder (Comp) is the sender of this kind.
    pub fn from_comp(self) -> bool {
        !matches!(
            self,
            MessageKind::ModelResult | MessageKind::LooModelResult | MessageKind::RefreshRequest
        )
    }
}

impl fmt::Display for MessageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    pub kind: MessageKind,
    pub round: u32,
    pub payload: Vec<u8>,
}

impl Frame {
    pub fn new(kind: MessageKind, round: u32, payload: Vec<u8>) -> Self {
        Frame { kind, round, payload }
    }

    pub fn encoded_len(&self) -> usize {
        HEADER_LEN + self.payload.len() + TRAILER_LEN
    }

    pub fn encode(&self, max_payload: u64) -> Result<Vec<u8>> {
        let len = self.payload.len() as u64;
        if len > max_payload {
            return Err(FrameError::Oversize { len, limit: max_payload }.into());
        }
        let mut out = Vec::with_capacity(self.encoded_len());
        out.extend_from_slice(&MAGIC);
        out.push(VERSION);
        out.push(self.kind.tag());
        out.extend_from_slice(&self.round.to_le_bytes());
        out.extend_from_slice(&len.to_le_bytes());
        out.extend_from_slice(&self.payload);
        out.extend_from_slice(&crc32fast::hash(&self.payload).to_le_bytes());
        Ok(out)
    }

    /// Decode exactly one frame occupying all of `bytes`.
    pub fn decode(bytes: &[u8], max_payload: u64) -> Result<Self> {
        let mut cursor = bytes;
        let frame = Self::read_from(&mut cursor, max_payload).map_err(|e| match e {
            ProtocolError::Io(io) if io.kind() == std::io::ErrorKind::UnexpectedEof => {
                let needed = needed_len(bytes);
                FrameError::Truncated { needed, have: bytes.len() }.into()
            }
            e => e,
        })?;
        if !cursor.is_empty() {
            return Err(FrameError::Trailing(cursor.len()).into());
        }
        Ok(frame)
    }

    /// Read one frame from a stream. A clean end of stream before the first
    /// header byte is reported as [`ProtocolError::Disconnected`].
    pub fn read_from<R: Read>(r: &mut R, max_payload: u64) -> Result<Self> {
        let mut header = [0u8; HEADER_LEN];
        let mut got = 0;
        while got < HEADER_LEN {
            match r.read(&mut header[got..]) {
                Ok(0) if got == 0 => return Err(ProtocolError::Disconnected),
                Ok(0) => return Err(std::io::Error::from(std::io::ErrorKind::UnexpectedEof).into()),
                Ok(n) => got += n,
                Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
                Err(e) => return Err(e.into()),
            }
        }
        let magic: [u8; 4] = header[..4].try_into().expect("4 bytes");
        if magic != MAGIC {
            return Err(FrameError::BadMagic(magic).into());
        }
        if header[4] != VERSION {
            return Err(FrameError::BadVersion(header[4]).into());
        }
        let kind = MessageKind::from_tag(header[5]).ok_or(FrameError::UnknownKind(header[5]))?;
        let round = u32::from_le_bytes(header[6..10].try_into().expect("4 bytes"));
        let len = u64::from_le_bytes(header[10..18].try_into().expect("8 bytes"));
        if len > max_payload {
            return Err(FrameError::Oversize { len, limit: max_payload }.into());
        }
        let mut payload = vec![0u8; len as usize];
        r.read_exact(&mut payload)?;
        let mut crc = [0u8; 4];
        r.read_exact(&mut crc)?;
        let expected = u32::from_le_bytes(crc);
        let actual = crc32fast::hash(&payload);
        if expected != actual {
            return Err(FrameError::Crc { expected, actual }.into());
        }
        Ok(Frame { kind, round, payload })
    }
}

fn needed_len(bytes: &[u8]) -> usize {
    if bytes.len() < HEADER_LEN {
        return HEADER_LEN + TRAILER_LEN;
    }
    let len = u64::from_le_bytes(bytes[10..18].try_into().expect("8 bytes"));
    HEADER_LEN + TRAILER_LEN + len as usize
}

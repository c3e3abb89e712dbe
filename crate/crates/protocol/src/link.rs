//! A transport plus the role's state machine and transcript.

use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::frame::{Frame, MessageKind, DEFAULT_MAX_PAYLOAD};
use crate::fsm::{Direction, Role, StateMachine};
use crate::message::ProtocolMessage;
use crate::transport::Transport;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Record {
    pub direction: Direction,
    pub kind: MessageKind,
    pub round: u32,
    /// SHA-256 of the payload.
    pub digest: [u8; 32],
    pub bytes: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Transcript {
    pub records: Vec<Record>,
}

impl Transcript {
    pub fn kinds(&self) -> Vec<MessageKind> {
        self.records.iter().map(|r| r.kind).collect()
    }

    pub fn count(&self, kind: MessageKind) -> usize {
        self.records.iter().filter(|r| r.kind == kind).count()
    }

    pub fn events(&self) -> impl Iterator<Item = (Direction, MessageKind, u32)> + '_ {
        self.records.iter().map(|r| (r.direction, r.kind, r.round))
    }

    /// One JSON object per line.
    pub fn to_ndjson(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            let dir = match r.direction {
                Direction::Sent => "sent",
                Direction::Received => "received",
            };
            let _ = writeln!(
                out,
                r#"{{"direction":"{dir}","kind":"{}","round":{},"bytes":{},"digest":"{}"}}"#,
                r.kind,
                r.round,
                r.bytes,
                hex::encode(r.digest)
            );
        }
        out
    }
}

pub struct Link {
    transport: Box<dyn Transport>,
    fsm: StateMachine,
    transcript: Transcript,
    max_payload: u64,
}

impl Link {
    pub fn new(role: Role, transport: impl Transport + 'static) -> Self {
        Link {
            transport: Box::new(transport),
            fsm: StateMachine::new(role),
            transcript: Transcript::default(),
            max_payload: DEFAULT_MAX_PAYLOAD,
        }
    }

    pub fn with_max_payload(mut self, limit: u64) -> Self {
        self.max_payload = limit;
        self
    }

    pub fn round(&self) -> u32 {
        self.fsm.round()
    }

    pub fn state_machine(&self) -> &StateMachine {
        &self.fsm
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    fn record(&mut self, direction: Direction, frame: &Frame) {
        self.transcript.records.push(Record {
            direction,
            kind: frame.kind,
            round: frame.round,
            digest: Sha256::digest(&frame.payload).into(),
            bytes: frame.encoded_len(),
        });
    }

    pub fn send(&mut self, msg: &ProtocolMessage) -> Result<()> {
        let kind = msg.kind();
        let round = self.fsm.round_for(kind);
        let mut probe = self.fsm.clone();
        probe.observe(Direction::Sent, kind, round)?;
        let frame = msg.to_frame(round);
        let bytes = frame.encode(self.max_payload)?;
        self.transport.send_bytes(&bytes)?;
        self.fsm = probe;
        self.record(Direction::Sent, &frame);
        Ok(())
    }

    pub fn recv(&mut self) -> Result<ProtocolMessage> {
        let frame = self.transport.recv_frame(self.max_payload)?;
        self.fsm.observe(Direction::Received, frame.kind, frame.round)?;
        self.record(Direction::Received, &frame);
        ProtocolMessage::from_frame(&frame)
    }
}

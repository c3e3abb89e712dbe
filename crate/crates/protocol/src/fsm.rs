//! Message-order state machine shared by both roles.
//!
//! ```text
//! Init      --EvkTransfer-->      Idle
//! Idle      --RoundData-->        AwaitModel
//! AwaitModel --ModelResult-->     AwaitLoo
//! AwaitLoo  --LooModelResult-->   AwaitLoo
//! AwaitModel|AwaitLoo --RefreshRequest--> Refreshing --RefreshResponse--> (back)
//! AwaitLoo  --Continue-->         Idle
//! AwaitLoo  --Terminate-->        Done
//! ```
//!
//! Comp sends EvkTransfer, RoundData, RefreshResponse, Continue and
//! Terminate; ML sends the rest. Each role runs the same table with the
//! directions mirrored.

use std::fmt;

use crate::error::{ProtocolError, Result};
use crate::frame::MessageKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Comp,
    Ml,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Comp => "comp",
            Role::Ml => "ml",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Sent,
    Received,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum State {
    Init,
    Idle,
    AwaitModel,
    AwaitLoo,
    /// A refresh is outstanding; the flag says whether the model result has
    /// already arrived.
    Refreshing { after_model: bool },
    Done,
}

impl State {
    pub fn name(self) -> &'static str {
        match self {
            State::Init => "Init",
            State::Idle => "Idle",
            State::AwaitModel => "AwaitModel",
            State::AwaitLoo => "AwaitLoo",
            State::Refreshing { .. } => "Refreshing",
            State::Done => "Done",
        }
    }

    pub fn next(self, kind: MessageKind) -> Option<State> {
        use MessageKind as K;
        Some(match (self, kind) {
            (State::Init, K::EvkTransfer) => State::Idle,
            (State::Idle, K::RoundData) => State::AwaitModel,
            (State::AwaitModel, K::ModelResult) => State::AwaitLoo,
            (State::AwaitLoo, K::LooModelResult) => State::AwaitLoo,
            (State::AwaitModel, K::RefreshRequest) => State::Refreshing { after_model: false },
            (State::AwaitLoo, K::RefreshRequest) => State::Refreshing { after_model: true },
            (State::Refreshing { after_model: false }, K::RefreshResponse) => State::AwaitModel,
            (State::Refreshing { after_model: true }, K::RefreshResponse) => State::AwaitLoo,
            (State::AwaitLoo, K::Continue) => State::Idle,
            (State::AwaitLoo, K::Terminate) => State::Done,
            _ => return None,
        })
    }
}

/// Tracks state and round number for one role.
#[derive(Clone, Debug)]
pub struct StateMachine {
    role: Role,
    state: State,
    round: u32,
}

impl StateMachine {
    pub fn new(role: Role) -> Self {
        StateMachine { role, state: State::Init, round: 0 }
    }

    pub fn state(&self) -> State {
        self.state
    }

    pub fn round(&self) -> u32 {
        self.round
    }

    /// Round number the next outgoing message of `kind` must carry.
    pub fn round_for(&self, kind: MessageKind) -> u32 {
        if kind == MessageKind::RoundData {
            self.round + 1
        } else {
            self.round
        }
    }

    /// Validate and apply one message. On error the state is unchanged.
    pub fn observe(&mut self, dir: Direction, kind: MessageKind, round: u32) -> Result<()> {
        let sender_is_comp = kind.from_comp();
        let i_send = dir == Direction::Sent;
        let me_comp = self.role == Role::Comp;
        let next = self.state.next(kind).filter(|_| sender_is_comp == (i_send == me_comp));
        let Some(next) = next else {
            return Err(ProtocolError::UnexpectedMessage { state: self.state.name(), kind });
        };
        let want = self.round_for(kind);
        if round != want {
            return Err(ProtocolError::BadRound { kind, current: self.round, got: round });
        }
        self.state = next;
        self.round = round;
        Ok(())
    }

    /// Replay a sequence of `(direction, kind, round)` from the start.
    pub fn accepts(role: Role, events: impl IntoIterator<Item = (Direction, MessageKind, u32)>) -> bool {
        let mut m = StateMachine::new(role);
        events.into_iter().all(|(d, k, r)| m.observe(d, k, r).is_ok())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Direction::*;
    use MessageKind as K;

    #[test]
    fn one_round_session() {
        let comp = [
            (Sent, K::EvkTransfer, 0),
            (Sent, K::RoundData, 1),
            (Received, K::RefreshRequest, 1),
            (Sent, K::RefreshResponse, 1),
            (Received, K::ModelResult, 1),
            (Received, K::LooModelResult, 1),
            (Sent, K::Terminate, 1),
        ];
        assert!(StateMachine::accepts(Role::Comp, comp));
        let ml = comp.map(|(d, k, r)| (if d == Sent { Received } else { Sent }, k, r));
        assert!(StateMachine::accepts(Role::Ml, ml));
        assert!(!StateMachine::accepts(Role::Ml, comp));
    }

    #[test]
    fn rejects_out_of_order() {
        let mut m = StateMachine::new(Role::Comp);
        assert!(m.observe(Sent, K::RoundData, 1).is_err());
        m.observe(Sent, K::EvkTransfer, 0).unwrap();
        assert!(m.observe(Received, K::ModelResult, 0).is_err());
        assert!(m.observe(Sent, K::RoundData, 3).is_err());
        m.observe(Sent, K::RoundData, 1).unwrap();
        assert!(m.observe(Sent, K::Terminate, 1).is_err());
        assert_eq!(m.state(), State::AwaitModel);
    }
}

//! Two-party fairness screening.
//!
//! Comp owns a dataset and the secret key. ML owns a learning algorithm and
//! only ever sees the evaluation key and ciphertexts. Each round Comp sends
//! the encrypted design columns, ML trains a model on the unprotected
//! columns plus one leave-one-out model per sensitive feature, and Comp
//! decrypts them, Wald-tests every shared coefficient and either accepts the
//! model or removes (or recodes) the flagged columns and goes again.
//!
//! Messages travel in CRC-checked frames ([`frame`]) over an in-process
//! channel or TCP ([`transport`]); both roles validate the message order
//! against the same state machine ([`fsm`]).
//!
//! Encrypted Select is subset selection of column ciphertexts, and the
//! learners are gradient descent circuits ([`learn`]). The `*_exact`
//! learners compute closed-form fits and exist for the cleartext backend
//! only, where they stand in for a learner run to convergence.

pub mod audit;
mod codec;
pub mod comp;
pub mod config;
pub mod error;
pub mod frame;
pub mod fsm;
pub mod learn;
pub mod link;
pub mod local;
pub mod message;
pub mod ml;
pub mod policy;
pub mod synthetic;
pub mod transport;

pub use comp::{comp_one_round, run_comp, train_local, CompContext, CompReport, Flagger, RoundOutcome, Screen, WaldFlagger};
pub use config::{LearnAlgorithm, LearnConfig, SessionConfig};
pub use error::{FrameError, ProtocolError, Result};
pub use frame::{Frame, MessageKind};
pub use fsm::{Direction, Role, StateMachine};
pub use link::{Link, Transcript};
pub use message::{ProtocolMessage, RoundData};
pub use ml::{ml_one_round, run_ml, MlSummary};
pub use policy::RecodePolicy;
pub use transport::{channel_pair, ChannelTransport, TcpTransport, Transport};

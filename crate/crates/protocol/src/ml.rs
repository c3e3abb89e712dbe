//! The ML party: holds the evaluation key only, trains on ciphertexts.

use fairgate_fhe::{refresh_request, Ciphertext, EvalKey};

use crate::config::{LearnConfig, SessionConfig};
use crate::error::{ProtocolError, Result};
use crate::fsm::State;
use crate::learn::{train, Refresher, TrainingSet};
use crate::link::Link;
use crate::message::{ProtocolMessage, RoundData};

/// Sends refresh requests to Comp over the session link.
struct LinkRefresher<'a> {
    link: &'a mut Link,
}

impl Refresher for LinkRefresher<'_> {
    fn refresh(&mut self, cts: Vec<Ciphertext>) -> Result<Vec<Ciphertext>> {
        let n = cts.len();
        let tokens = cts.iter().map(refresh_request).collect();
        self.link.send(&ProtocolMessage::RefreshRequest(tokens))?;
        match self.link.recv()? {
            ProtocolMessage::RefreshResponse(v) if v.len() == n => Ok(v),
            ProtocolMessage::RefreshResponse(v) => Err(ProtocolError::Malformed {
                kind: crate::frame::MessageKind::RefreshResponse,
                reason: format!("{} ciphertexts for {n} requested", v.len()),
            }),
            other => Err(unexpected(self.link, &other)),
        }
    }
}

fn unexpected(link: &Link, msg: &ProtocolMessage) -> ProtocolError {
    ProtocolError::UnexpectedMessage { state: link.state_machine().state().name(), kind: msg.kind() }
}

/// Homomorphic Select: the training view of `data` restricted to `keys`,
/// in that order.
pub fn select<'a>(data: &'a RoundData, keys: Vec<String>) -> Result<TrainingSet<'a>> {
    let columns = keys
        .iter()
        .map(|k| {
            data.column(k)
                .map(|c| c.blocks.as_slice())
                .ok_or_else(|| ProtocolError::Learn(format!("no ciphertexts for {k:?}")))
        })
        .collect::<Result<_>>()?;
    Ok(TrainingSet { keys, columns, target: &data.target, rows: data.rows as usize })
}

/// Train M on S_U, then one M' per sensitive feature on S_U plus its
/// columns, sending each result as soon as it is ready.
pub fn ml_one_round(link: &mut Link, evk: &EvalKey, data: &RoundData, learn: &LearnConfig) -> Result<()> {
    // the training features S_T are all of S_U
    let m = {
        let set = select(data, data.unprotected.clone())?;
        train(evk, &set, learn, &mut LinkRefresher { link })?
    };
    link.send(&ProtocolMessage::ModelResult(m))?;
    for g in &data.sensitive {
        let keys = data.unprotected.iter().chain(&g.columns).cloned().collect();
        let set = select(data, keys)?;
        let model = train(evk, &set, learn, &mut LinkRefresher { link })?;
        link.send(&ProtocolMessage::LooModelResult { label: g.label.clone(), model })?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MlSummary {
    pub rounds: u32,
}

/// Serve rounds until Comp terminates the session.
pub fn run_ml(link: &mut Link, config: &SessionConfig) -> Result<MlSummary> {
    let evk = match link.recv()? {
        ProtocolMessage::EvkTransfer { config_digest, evk } => {
            if config_digest != config.digest() {
                return Err(ProtocolError::ConfigMismatch);
            }
            if evk.params() != &config.params || evk.backend() != config.backend {
                return Err(ProtocolError::ConfigMismatch);
            }
            evk
        }
        other => return Err(unexpected(link, &other)),
    };
    config.learn.validate(evk.max_level(), evk.slot_count())?;
    let mut rounds = 0;
    loop {
        match link.recv()? {
            ProtocolMessage::RoundData(data) => {
                ml_one_round(link, &evk, &data, &config.learn)?;
                rounds += 1;
            }
            other => return Err(unexpected(link, &other)),
        }
        match link.recv()? {
            ProtocolMessage::Continue => {}
            ProtocolMessage::Terminate => {
                debug_assert_eq!(link.state_machine().state(), State::Done);
                return Ok(MlSummary { rounds });
            }
            other => return Err(unexpected(link, &other)),
        }
    }
}

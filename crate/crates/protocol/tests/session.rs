//! Whole sessions on synthetic data with the cleartext backend.

use std::collections::BTreeSet;
use std::net::TcpListener;

use fairgate_core::regress::{fit_ols, FitConfig, TargetCoding};
use fairgate_core::wald::wald_test;
use fairgate_core::{DesignMatrix64, ModelFit64};
use fairgate_fhe::{keygen, BackendKind, FheParams, KeySet};
use fairgate_protocol::comp::{encrypt_round, sensitive_groups};
use fairgate_protocol::frame::Frame;
use fairgate_protocol::local::{run_in_process, LocalSession};
use fairgate_protocol::ml::select;
use fairgate_protocol::synthetic::{Synthetic, SyntheticSpec};
use fairgate_protocol::{
    channel_pair, run_comp, run_ml, CompContext, Flagger, LearnAlgorithm, LearnConfig, Link, MessageKind,
    ProtocolError, ProtocolMessage, RecodePolicy, Role, SessionConfig, StateMachine, TcpTransport, Transport,
    WaldFlagger,
};

fn config(algorithm: LearnAlgorithm) -> SessionConfig {
    let mut c = SessionConfig::default();
    c.learn = LearnConfig::new(algorithm, c.params.level_count);
    c.sensitive = vec!["s".into()];
    c.profile = "synthetic".into();
    c
}

fn clear_keys() -> KeySet {
    keygen(&FheParams::default(), BackendKind::Cleartext).unwrap()
}

fn session(cfg: &SessionConfig, syn: &Synthetic, flagger: &mut dyn Flagger) -> LocalSession {
    run_in_process(cfg, &clear_keys(), &syn.dataset, &syn.profile, &RecodePolicy::remove_only(), flagger)
}

fn assert_fsm(s: &LocalSession) {
    assert!(StateMachine::accepts(Role::Comp, s.comp_transcript.events()));
    assert!(StateMachine::accepts(Role::Ml, s.ml_transcript.events()));
}

fn model_messages(s: &LocalSession) -> usize {
    s.ml_transcript.count(MessageKind::ModelResult) + s.ml_transcript.count(MessageKind::LooModelResult)
}

#[test]
fn empty_sensitive_set_is_one_round() {
    let mut syn = SyntheticSpec::independent(200, 3).generate(1);
    syn.profile.sensitive.clear();
    let cfg = config(LearnAlgorithm::LinearExact);
    let s = session(&cfg, &syn, &mut WaldFlagger(cfg.wald_options()));
    let report = s.comp.as_ref().unwrap();
    assert_eq!(report.rounds.len(), 1);
    assert!(report.rounds[0].flagged.is_empty());
    assert_eq!(report.accepted().unwrap().columns.len(), 4);
    assert_eq!(model_messages(&s), 1);
    assert_eq!(s.ml.as_ref().unwrap().rounds, 1);
    assert_fsm(&s);
}

#[test]
fn one_sensitive_feature_sends_two_models() {
    let syn = SyntheticSpec::independent(200, 3).generate(2);
    let cfg = config(LearnAlgorithm::LinearGd);
    let s = session(&cfg, &syn, &mut |_: &str, _: &ModelFit64, _: &ModelFit64| BTreeSet::new());
    assert_eq!(s.comp.as_ref().unwrap().rounds.len(), 1);
    assert_eq!(model_messages(&s), 2);
    assert_eq!(s.ml_transcript.count(MessageKind::Terminate), 1);
    assert_fsm(&s);
}

#[test]
fn continue_twice_then_terminate() {
    let syn = SyntheticSpec::independent(200, 4).generate(3);
    let cfg = config(LearnAlgorithm::LinearExact);
    let mut script = vec![BTreeSet::from(["x0".to_string()]), BTreeSet::from(["x2".to_string()])].into_iter();
    let mut flagger = |_: &str, _: &ModelFit64, _: &ModelFit64| script.next().unwrap_or_default();
    let s = session(&cfg, &syn, &mut flagger);
    let report = s.comp.as_ref().unwrap();
    assert_eq!(report.rounds.len(), 3);
    assert_eq!(s.ml.as_ref().unwrap().rounds, 3);
    assert_eq!(s.ml_transcript.count(MessageKind::Continue), 2);
    let protected: Vec<&str> = report.partition.protected().iter().map(String::as_str).collect();
    assert_eq!(protected, ["x0", "x2"]);
    assert_eq!(report.accepted().unwrap().columns.len(), 3);
    assert_fsm(&s);
}

// Plaintext oracle: fit M and M' directly and Wald-test them.
fn plaintext_flags(syn: &Synthetic, cfg: &SessionConfig) -> BTreeSet<String> {
    let d = syn.profile.prepare(&syn.dataset).unwrap();
    let mp: DesignMatrix64 = syn.profile.design(&d).unwrap();
    let m = mp.without_columns(&["s"]).unwrap();
    let fit = FitConfig { target_coding: TargetCoding::PlusMinusOne, ..FitConfig::default() };
    let (a, b) = (fit_ols(&m, &fit).unwrap(), fit_ols(&mp, &fit).unwrap());
    wald_test(&a, &b, &cfg.wald_options()).unwrap().flagged
}

#[test]
fn independent_columns_terminate_in_one_round() {
    let mut cfg = config(LearnAlgorithm::LinearExact);
    cfg.bonferroni = true;
    for seed in 10..15 {
        let syn = SyntheticSpec::independent(400, 4).generate(seed);
        assert!(plaintext_flags(&syn, &cfg).is_empty(), "seed {seed}");
        let s = session(&cfg, &syn, &mut WaldFlagger(cfg.wald_options()));
        assert_eq!(s.comp.as_ref().unwrap().rounds.len(), 1, "seed {seed}");
    }
}

#[test]
fn injected_correlation_is_protected() {
    let spec = SyntheticSpec {
        correlated: vec![0],
        strength: 2.0,
        ..SyntheticSpec::independent(600, 3)
    };
    let syn = spec.generate(4);
    let cfg = config(LearnAlgorithm::LinearExact);
    let expected = plaintext_flags(&syn, &cfg);
    assert!(expected.contains("x0"));
    let s = session(&cfg, &syn, &mut WaldFlagger(cfg.wald_options()));
    let report = s.comp.as_ref().unwrap();
    assert_eq!(report.rounds[0].flagged, expected);
    assert!(report.partition.protected().contains("x0"));
    assert!(report.rounds.last().unwrap().flagged.is_empty());
    assert_fsm(&s);
}

#[test]
fn logistic_exact_session() {
    let syn = SyntheticSpec { correlated: vec![1], strength: 1.5, ..SyntheticSpec::independent(500, 3) }.generate(5);
    let cfg = config(LearnAlgorithm::LogisticExact);
    let s = session(&cfg, &syn, &mut WaldFlagger(cfg.wald_options()));
    let report = s.comp.as_ref().unwrap();
    assert!(report.rounds.len() <= 4);
    assert!(report.rounds.last().unwrap().flagged.is_empty());
}

#[test]
fn flagging_outside_unprotected_set_is_refused() {
    let syn = SyntheticSpec::independent(100, 2).generate(6);
    let cfg = config(LearnAlgorithm::LinearExact);
    let s = session(&cfg, &syn, &mut |_: &str, _: &ModelFit64, _: &ModelFit64| BTreeSet::from(["s".to_string()]));
    assert!(matches!(s.comp, Err(ProtocolError::Policy(_))), "{:?}", s.comp.map(|_| ()));
    assert!(matches!(s.ml, Err(ProtocolError::Disconnected)));
}

#[test]
fn ml_rejects_mismatched_config() {
    let syn = SyntheticSpec::independent(100, 2).generate(7);
    let cfg = config(LearnAlgorithm::LinearExact);
    let keys = clear_keys();
    let (a, b) = channel_pair();
    let mut other = cfg.clone();
    other.alpha = 0.01;
    let ml = std::thread::spawn(move || run_ml(&mut Link::new(Role::Ml, b), &other));
    let mut link = Link::new(Role::Comp, a);
    let mut ctx = CompContext::new(&keys, &cfg);
    let mut flagger = WaldFlagger(cfg.wald_options());
    let comp = run_comp(&mut link, &syn.dataset, &syn.profile, &RecodePolicy::remove_only(), &mut ctx, &mut flagger);
    assert!(matches!(ml.join().unwrap(), Err(ProtocolError::ConfigMismatch)));
    assert!(matches!(comp, Err(ProtocolError::Disconnected)));
}

#[test]
fn dropped_ml_aborts_comp_without_a_model() {
    let syn = SyntheticSpec::independent(100, 2).generate(8);
    let cfg = config(LearnAlgorithm::LinearExact);
    let keys = clear_keys();
    let (a, b) = channel_pair();
    let ml = std::thread::spawn(move || {
        let mut link = Link::new(Role::Ml, b);
        link.recv().unwrap();
        link.recv().unwrap();
        // vanish mid-round
    });
    let mut link = Link::new(Role::Comp, a);
    let mut ctx = CompContext::new(&keys, &cfg);
    let mut flagger = WaldFlagger(cfg.wald_options());
    let comp = run_comp(&mut link, &syn.dataset, &syn.profile, &RecodePolicy::remove_only(), &mut ctx, &mut flagger);
    ml.join().unwrap();
    assert!(matches!(comp, Err(ProtocolError::Disconnected)));
}

#[test]
fn dropped_comp_aborts_ml() {
    let syn = SyntheticSpec::independent(100, 2).generate(9);
    let cfg = config(LearnAlgorithm::LinearExact);
    let keys = clear_keys();
    let (a, b) = channel_pair();
    let comp_cfg = cfg.clone();
    let comp = std::thread::spawn(move || {
        let mut link = Link::new(Role::Comp, a);
        link.send(&ProtocolMessage::EvkTransfer { config_digest: comp_cfg.digest(), evk: keys.evk.clone() })
            .unwrap();
        let d = syn.profile.prepare(&syn.dataset).unwrap();
        let design: DesignMatrix64 = syn.profile.design(&d).unwrap();
        let groups = sensitive_groups(&design, &syn.profile.sensitive).unwrap();
        let mut ctx = CompContext::new(&keys, &comp_cfg);
        let su: Vec<String> = design.keys().into_iter().filter(|k| k != "s").collect();
        let data = encrypt_round(&design, &su, &groups, &mut ctx).unwrap();
        link.send(&ProtocolMessage::RoundData(data)).unwrap();
        // vanish before reading any result
    });
    comp.join().unwrap();
    let mut link = Link::new(Role::Ml, b);
    let r = run_ml(&mut link, &cfg);
    assert!(matches!(r, Err(ProtocolError::Disconnected)), "{r:?}");
}

#[test]
fn out_of_order_message_is_rejected() {
    let cfg = config(LearnAlgorithm::LinearExact);
    let (mut raw, b) = channel_pair();
    raw.send_bytes(&Frame::new(MessageKind::Continue, 0, Vec::new()).encode(1 << 20).unwrap())
        .unwrap();
    let r = run_ml(&mut Link::new(Role::Ml, b), &cfg);
    assert!(
        matches!(r, Err(ProtocolError::UnexpectedMessage { state: "Init", kind: MessageKind::Continue })),
        "{r:?}"
    );
}

#[test]
fn select_returns_exactly_the_requested_columns() {
    let syn = SyntheticSpec { levels: 3, ..SyntheticSpec::independent(64, 3) }.generate(11);
    let keys = keygen(&FheParams::preset("small").unwrap(), BackendKind::Rlwe).unwrap();
    let cfg = config(LearnAlgorithm::LinearGd);
    let d = syn.profile.prepare(&syn.dataset).unwrap();
    let design: DesignMatrix64 = syn.profile.design(&d).unwrap();
    let groups = sensitive_groups(&design, &syn.profile.sensitive).unwrap();
    let su: Vec<String> = design.keys().into_iter().filter(|k| k != "s").collect();
    let mut ctx = CompContext::local(&keys, cfg.learn, 0);
    let data = encrypt_round(&design, &su, &groups, &mut ctx).unwrap();
    let want = vec!["x2".to_string(), "c=L1".to_string()];
    let set = select(&data, want.clone()).unwrap();
    assert_eq!(set.keys, want);
    assert_eq!(set.columns.len(), 2);
    for (key, blocks) in want.iter().zip(&set.columns) {
        let j = design.column_index(key).unwrap();
        let col = design.column(j);
        let scale = col.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let got = keys.sk.decrypt(&blocks[0]).unwrap();
        for (g, v) in got.values().iter().zip(&col) {
            assert!((g - v / scale).abs() < 1e-5, "{key}");
        }
    }
    assert!(select(&data, vec!["nope".into()]).is_err());
}

#[test]
fn tcp_session() {
    let syn = SyntheticSpec { correlated: vec![0], strength: 2.0, ..SyntheticSpec::independent(300, 3) }.generate(12);
    let cfg = config(LearnAlgorithm::LinearExact);
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let ml_cfg = cfg.clone();
    let ml = std::thread::spawn(move || {
        let t = TcpTransport::connect(addr).unwrap();
        run_ml(&mut Link::new(Role::Ml, t), &ml_cfg)
    });
    let t = TcpTransport::accept(&listener).unwrap();
    let keys = clear_keys();
    let mut link = Link::new(Role::Comp, t);
    let mut ctx = CompContext::new(&keys, &cfg);
    let mut flagger = WaldFlagger(cfg.wald_options());
    let report = run_comp(&mut link, &syn.dataset, &syn.profile, &RecodePolicy::remove_only(), &mut ctx, &mut flagger)
        .unwrap();
    let ml = ml.join().unwrap().unwrap();
    assert_eq!(ml.rounds as usize, report.rounds.len());
    assert!(StateMachine::accepts(Role::Comp, link.transcript().events()));
    let ndjson = link.transcript().to_ndjson();
    assert_eq!(ndjson.lines().count(), link.transcript().records.len());
    assert!(ndjson.lines().next().unwrap().contains(r#""kind":"EvkTransfer""#));
}

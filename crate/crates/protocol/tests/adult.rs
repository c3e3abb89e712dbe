//! The Adult experiments run through the full protocol (cleartext backend).

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::time::Instant;

use fairgate_core::data::{load_adult, Dataset, Profile};
use fairgate_core::gd::GdConfig;
use fairgate_core::regress::ModelKind;
use fairgate_fhe::{keygen, BackendKind, FheParams};
use fairgate_protocol::local::run_in_process;
use fairgate_protocol::{LearnAlgorithm, LearnConfig, RecodePolicy, SessionConfig, WaldFlagger};

fn train() -> Dataset {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/adult/adult.data");
    load_adult(path, "?").unwrap()
}

fn names(keys: &BTreeSet<String>) -> Vec<&str> {
    keys.iter().map(|k| k.split_once('=').map_or(k.as_str(), |(_, l)| l)).collect()
}

fn full_config(algorithm: LearnAlgorithm, table_precision: bool) -> SessionConfig {
    let mut c = SessionConfig::default();
    c.learn = LearnConfig::new(algorithm, c.params.level_count);
    c.profile = "full".into();
    c.table_precision = table_precision;
    c.recode = vec!["marital-status".into()];
    c
}

#[test]
fn linear_two_rounds_with_marital_recode() {
    let d = train();
    let keys = keygen(&FheParams::default(), BackendKind::Cleartext).unwrap();
    for table in [true, false] {
        let cfg = full_config(LearnAlgorithm::LinearExact, table);
        let t = Instant::now();
        let s = run_in_process(
            &cfg,
            &keys,
            &d,
            &Profile::full(),
            &RecodePolicy::marital(),
            &mut WaldFlagger(cfg.wald_options()),
        );
        let report = s.comp.unwrap();
        let flags: Vec<Vec<&str>> = report.rounds.iter().map(|r| names(&r.flagged)).collect();
        eprintln!("table precision {table}: flags per round {flags:?} in {:.1?}", t.elapsed());
        assert_eq!(report.rounds.len(), 2);
        assert_eq!(flags[0], ["Never-married", "Widowed"]);
        assert!(report.rounds[1].flagged.is_empty());
        assert_eq!(report.recoded, ["marital-status"]);
        assert_eq!(report.accepted().unwrap().columns.len(), 82);
        assert_eq!(s.ml.unwrap().rounds, 2);
    }
}

#[test]
fn logistic_round_one_flags_nothing() {
    let d = train();
    let keys = keygen(&FheParams::default(), BackendKind::Cleartext).unwrap();
    let mut cfg = full_config(LearnAlgorithm::LogisticGd, false);
    let gd = GdConfig::analysis(ModelKind::Logistic);
    cfg.learn.epochs = gd.epochs;
    cfg.learn.learning_rate = gd.learning_rate;
    let t = Instant::now();
    let s = run_in_process(&cfg, &keys, &d, &Profile::full(), &RecodePolicy::marital(), &mut WaldFlagger(cfg.wald_options()));
    let report = s.comp.unwrap();
    eprintln!("logistic gd session in {:.1?}", t.elapsed());
    assert_eq!(report.rounds.len(), 1);
    assert!(report.rounds[0].flagged.is_empty());
}

//! Same hyperparameters, different backends: the screening outcome must not
//! depend on whether training ran under encryption.

use std::collections::BTreeSet;
use std::path::PathBuf;

use fairgate_core::data::{load_adult, Profile};
use fairgate_fhe::{keygen, BackendKind, FheParams};
use fairgate_protocol::local::run_in_process;
use fairgate_protocol::synthetic::SyntheticSpec;
use fairgate_protocol::{CompReport, LearnAlgorithm, LearnConfig, RecodePolicy, SessionConfig, WaldFlagger};

fn flags(r: &CompReport) -> Vec<BTreeSet<String>> {
    r.rounds.iter().map(|o| o.flagged.clone()).collect()
}

fn max_coef_diff(a: &CompReport, b: &CompReport) -> f64 {
    let (a, b) = (a.accepted().unwrap(), b.accepted().unwrap());
    assert_eq!(a.columns, b.columns);
    a.coefficients.iter().zip(&b.coefficients).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn run_both(cfg: &SessionConfig, dataset: &fairgate_core::data::Dataset, profile: &Profile) -> (CompReport, CompReport) {
    let mut out = Vec::new();
    for backend in [BackendKind::Cleartext, BackendKind::Rlwe] {
        let cfg = SessionConfig { backend, ..cfg.clone() };
        let keys = keygen(&cfg.params, backend).unwrap();
        let s = run_in_process(&cfg, &keys, dataset, profile, &RecodePolicy::remove_only(), &mut WaldFlagger(cfg.wald_options()));
        out.push(s.comp.unwrap());
    }
    let rlwe = out.pop().unwrap();
    (out.pop().unwrap(), rlwe)
}

#[test]
fn subsample_logistic_agrees() {
    let d = load_adult(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/adult/adult.data"), "?").unwrap();
    let mut cfg = SessionConfig::default();
    cfg.learn = LearnConfig::new(LearnAlgorithm::LogisticGd, cfg.params.level_count);
    let (clear, rlwe) = run_both(&cfg, &d, &Profile::subsample());
    let diff = max_coef_diff(&clear, &rlwe);
    eprintln!("subsample logistic: flags {:?}, max coefficient difference {diff:.3e}", flags(&clear));
    assert_eq!(flags(&clear), flags(&rlwe));
    assert!(diff <= 2e-2);
}

#[test]
fn synthetic_sets_agree() {
    let mut cfg = SessionConfig { params: FheParams::preset("small").unwrap(), ..SessionConfig::default() };
    cfg.learn = LearnConfig::new(LearnAlgorithm::LinearGd, cfg.params.level_count);
    // the 32-epoch encrypted default stops far short of the optimum, where
    // M and M' barely differ and nothing is ever flagged
    cfg.learn.epochs = 128;
    cfg.learn.learning_rate = 0.5;
    cfg.sensitive = vec!["s".into()];
    let specs = [
        SyntheticSpec { correlated: vec![0], strength: 1.5, ..SyntheticSpec::independent(512, 3) },
        SyntheticSpec { correlated: vec![1, 2], strength: 1.0, ..SyntheticSpec::independent(512, 3) },
        SyntheticSpec::independent(512, 2),
    ];
    let mut multi_round = 0;
    for (case, spec) in specs.iter().enumerate() {
        let syn = spec.generate(case as u64);
        let (clear, rlwe) = run_both(&cfg, &syn.dataset, &syn.profile);
        let diff = max_coef_diff(&clear, &rlwe);
        eprintln!("case {case}: flags {:?}, max coefficient difference {diff:.3e}", flags(&clear));
        assert_eq!(flags(&clear), flags(&rlwe), "case {case}");
        assert!(diff <= 1e-2);
        multi_round += usize::from(clear.rounds.len() > 1);
    }
    assert!(multi_round >= 1, "no synthetic case flagged anything");
}

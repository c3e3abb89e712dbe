//! Encrypted gradient descent against its plaintext twin on the 1024-row
//! Adult subsample.

use std::path::PathBuf;
use std::time::Instant;

use fairgate_core::data::{load_adult, Profile};
use fairgate_core::gd::train_gd;
use fairgate_core::regress::ModelKind;
use fairgate_core::DesignMatrix64;
use fairgate_fhe::{keygen, BackendKind, FheParams};
use fairgate_protocol::comp::fit_config;
use fairgate_protocol::{train_local, LearnAlgorithm, LearnConfig};

fn subsample() -> DesignMatrix64 {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/adult/adult.data");
    let d = load_adult(path, "?").unwrap();
    let p = Profile::subsample();
    let d = p.prepare(&d).unwrap();
    let d = d.select(&p.features).unwrap();
    p.design(&d).unwrap()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn check(kind: ModelKind, tol: f64) {
    let design = subsample();
    assert_eq!((design.rows(), design.cols()), (1024, 9));
    let learn = LearnConfig::new(LearnAlgorithm::new(kind, false), 6);
    let coding = fit_config(kind).target_coding;
    let y: Vec<f64> = design.target().iter().map(|&v| coding.code(v)).collect();
    let plain = train_gd(design.x(), &y, &learn.gd_config()).unwrap();

    let clear = keygen(&FheParams::default(), BackendKind::Cleartext).unwrap();
    let via_clear = train_local(&clear, &design, &learn, 1).unwrap();
    assert!(max_diff(&via_clear, &plain) < 1e-9, "cleartext backend drifted");

    let keys = keygen(&FheParams::default(), BackendKind::Rlwe).unwrap();
    let t = Instant::now();
    let enc = train_local(&keys, &design, &learn, 1).unwrap();
    let diff = max_diff(&enc, &plain);
    eprintln!("{kind}: max |encrypted - plaintext| = {diff:.3e} in {:.1?}", t.elapsed());
    assert!(diff <= tol, "{enc:?} vs {plain:?}");
}

#[test]
fn linear_matches_plaintext() {
    check(ModelKind::Linear, 1e-2);
}

#[test]
fn logistic_matches_plaintext() {
    check(ModelKind::Logistic, 2e-2);
}

//! Operation contract, run against both backends: exact for cleartext,
//! toleranced for rlwe.

use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use fairgate_fhe::circuit::{max_abs_error, relative_error, Circuit};
use fairgate_fhe::{
    keygen, precision_bound, refresh_apply, refresh_request, BackendKind, Ciphertext, EvalKey, FheError, FheParams,
    KeySet, ModulusChain, PlainVector, PublicKey, SecretKey,
};

fn keys(backend: BackendKind) -> &'static KeySet {
    static CLEAR: OnceLock<KeySet> = OnceLock::new();
    static RLWE: OnceLock<KeySet> = OnceLock::new();
    let cell = match backend {
        BackendKind::Cleartext => &CLEAR,
        BackendKind::Rlwe => &RLWE,
    };
    cell.get_or_init(|| keygen(&FheParams::default(), backend).unwrap())
}

fn random_vec(rng: &mut impl Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(-1.0..=1.0)).collect()
}

fn pv(v: &[f64]) -> PlainVector {
    PlainVector::new(v.to_vec()).unwrap()
}

fn dec(k: &KeySet, ct: &Ciphertext, len: usize) -> Vec<f64> {
    k.sk.decrypt(ct).unwrap().values()[..len].to_vec()
}

/// Both backends, with the check to apply to a difference.
fn each_backend(mut f: impl FnMut(BackendKind, &KeySet, f64)) {
    for b in BackendKind::ALL {
        let tol = match b {
            BackendKind::Cleartext => 0.0,
            BackendKind::Rlwe => precision_bound(&FheParams::default()),
        };
        f(b, keys(b), tol);
    }
}

#[test]
fn slot_count_and_levels() {
    each_backend(|_, k, _| {
        assert_eq!(k.pk.slot_count(), 2048);
        let ct = k.pk.encrypt_seeded(&pv(&[1.0]), 1).unwrap();
        assert_eq!(ct.level(), 6);
        assert_eq!(ct.scale(), (30f64).exp2());
    });
}

#[test]
fn round_trip_within_bound() {
    each_backend(|b, k, bound| {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let mut errs = Vec::new();
        for _ in 0..100 {
            let m = random_vec(&mut rng, 64);
            let ct = k.pk.encrypt(&pv(&m), &mut rng).unwrap();
            let out = k.sk.decrypt(&ct).unwrap();
            errs.push(max_abs_error(&out.values()[..64], &m));
            assert!(out.values()[64..].iter().all(|v| v.abs() <= bound.max(0.0)));
        }
        errs.sort_by(f64::total_cmp);
        let worst = *errs.last().unwrap();
        println!("{b}: round-trip p99 {:.3e}, max {worst:.3e}, bound {bound:.3e}", errs[98]);
        match b {
            BackendKind::Cleartext => assert_eq!(worst, 0.0),
            BackendKind::Rlwe => assert!(worst <= bound),
        }
        let zero = k.pk.encrypt_seeded(&pv(&[0.0; 64]), 3).unwrap();
        assert!(dec(k, &zero, 2048).iter().all(|v| v.abs() <= bound));
    });
}

#[test]
fn identities_and_products() {
    each_backend(|_, k, bound| {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let m = random_vec(&mut rng, 64);
        let ct = k.pk.encrypt(&pv(&m), &mut rng).unwrap();
        let zero = k.pk.encrypt(&pv(&[]), &mut rng).unwrap();
        let one = k.pk.encrypt(&pv(&[1.0; 64]), &mut rng).unwrap();
        assert!(max_abs_error(&dec(k, &k.evk.add(&ct, &zero).unwrap(), 64), &m) <= 2.0 * bound);
        let prod = k.evk.mul(&ct, &one).unwrap();
        assert_eq!(prod.level(), ct.level() - 1);
        assert!(max_abs_error(&dec(k, &prod, 64), &m) <= 2.0 * bound);

        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let a = random_vec(&mut rng, 64);
            let b = random_vec(&mut rng, 64);
            let ca = k.pk.encrypt(&pv(&a), &mut rng).unwrap();
            let cb = k.pk.encrypt(&pv(&b), &mut rng).unwrap();
            let want: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
            worst = worst.max(relative_error(&dec(k, &k.evk.mul(&ca, &cb).unwrap(), 64), &want));
        }
        assert!(worst <= if bound == 0.0 { 0.0 } else { 1e-3 }, "{worst}");
    });
}

#[test]
fn add_sub_plain_ops() {
    each_backend(|_, k, bound| {
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let a = random_vec(&mut rng, 32);
        let b = random_vec(&mut rng, 32);
        let ca = k.pk.encrypt(&pv(&a), &mut rng).unwrap();
        let cb = k.pk.encrypt(&pv(&b), &mut rng).unwrap();
        let diff: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        assert!(max_abs_error(&dec(k, &k.evk.sub(&ca, &cb).unwrap(), 32), &diff) <= 2.0 * bound);
        let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        assert!(max_abs_error(&dec(k, &k.evk.add_plain(&ca, &pv(&b)).unwrap(), 32), &sum) <= 2.0 * bound);
        let prod: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
        let mp = k.evk.mul_plain(&ca, &pv(&b)).unwrap();
        assert_eq!(mp.level(), 5);
        assert!(max_abs_error(&dec(k, &mp, 32), &prod) <= 2.0 * bound);
        // operands at different levels are aligned downwards
        let mixed = k.evk.add(&mp, &ca).unwrap();
        assert_eq!(mixed.level(), 5);
        let want: Vec<f64> = prod.iter().zip(&a).map(|(x, y)| x + y).collect();
        assert!(max_abs_error(&dec(k, &mixed, 32), &want) <= 4.0 * bound);
    });
}

#[test]
fn rotation_and_inner_sum() {
    each_backend(|_, k, bound| {
        let slots = k.pk.slot_count();
        let m: Vec<f64> = (0..slots).map(|i| ((i * 37) % 101) as f64 / 101.0).collect();
        let ct = k.pk.encrypt_seeded(&pv(&m), 9).unwrap();
        for steps in [1isize, 3, 64, 1000, -1, -5] {
            let r = k.evk.rotate(&ct, steps).unwrap();
            assert_eq!(r.level(), ct.level());
            let mut want = m.clone();
            want.rotate_left(steps.rem_euclid(slots as isize) as usize);
            assert!(max_abs_error(&dec(k, &r, slots), &want) <= 4.0 * bound, "step {steps}");
        }
        let ones = k.pk.encrypt_seeded(&pv(&[1.0; 8]), 1).unwrap();
        assert!((dec(k, &k.evk.inner_sum(&ones, 8).unwrap(), 1)[0] - 8.0).abs() <= 8.0 * bound);
        let e0 = k.pk.encrypt_seeded(&pv(&[1.0]), 2).unwrap();
        assert!((dec(k, &k.evk.inner_sum(&e0, 64).unwrap(), 1)[0] - 1.0).abs() <= 8.0 * bound);
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let a = random_vec(&mut rng, 64);
        let ca = k.pk.encrypt(&pv(&a), &mut rng).unwrap();
        let s = dec(k, &k.evk.inner_sum(&ca, 64).unwrap(), 1)[0];
        let want: f64 = a.iter().sum();
        assert!((s - want).abs() <= 1e-3 * want.abs().max(1.0));
        assert!(matches!(k.evk.inner_sum(&ca, 12), Err(FheError::Width { .. })));
        assert!(matches!(k.evk.inner_sum(&ca, 4096), Err(FheError::Width { .. })));
        // full width replicates the total into every slot
        let full = dec(k, &k.evk.inner_sum(&ca, slots).unwrap(), slots);
        assert!(full.iter().all(|v| (v - want).abs() <= 1e-3 * want.abs().max(1.0)));
    });
}

#[test]
fn depth_is_enforced() {
    each_backend(|_, k, _| {
        let mut ct = k.pk.encrypt_seeded(&pv(&[1.05; 4]), 4).unwrap();
        for expected in (0..6).rev() {
            ct = k.evk.mul(&ct, &ct).unwrap();
            assert_eq!(ct.level(), expected);
        }
        assert!(matches!(k.evk.mul(&ct, &ct), Err(FheError::LevelExhausted { .. })));
        assert!(matches!(k.evk.mul_scalar(&ct, 2.0), Err(FheError::LevelExhausted { .. })));
        assert_eq!(k.evk.add(&ct, &ct).unwrap().level(), 0);
        assert_eq!(k.evk.rotate(&ct, 1).unwrap().level(), 0);
    });
}

#[test]
fn random_circuits_match_interpreter() {
    each_backend(|b, k, _| {
        let mut rng = ChaCha20Rng::seed_from_u64(2024);
        let slots = k.pk.slot_count();
        let mut worst: f64 = 0.0;
        let mut trials = 0;
        while trials < 100 {
            let c = Circuit::random(&mut rng, 3, 64, 4, 10);
            assert!(c.depth() <= 4);
            let inputs: Vec<Vec<f64>> = (0..3).map(|_| random_vec(&mut rng, 64)).collect();
            let want = c.eval_plain(&inputs, slots);
            // relative error is undefined for outputs that cancel to zero (e.g. x - x)
            if want.iter().all(|v| v.abs() < 1e-2) {
                continue;
            }
            trials += 1;
            let cts: Vec<Ciphertext> = inputs.iter().map(|m| k.pk.encrypt(&pv(m), &mut rng).unwrap()).collect();
            let got = k.sk.decrypt(&c.eval_encrypted(&k.evk, &cts).unwrap()).unwrap();
            worst = worst.max(relative_error(got.values(), &want));
        }
        println!("{b}: worst circuit relative error {worst:.3e}");
        match b {
            BackendKind::Cleartext => assert_eq!(worst, 0.0),
            BackendKind::Rlwe => assert!(worst <= 1e-3),
        }
    });
}

#[test]
fn refresh_restores_level() {
    each_backend(|_, k, bound| {
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let m = random_vec(&mut rng, 64);
        let ct = k.pk.encrypt(&pv(&m), &mut rng).unwrap();
        let fresh = refresh_apply(&k.sk, &k.pk, &refresh_request(&ct), &mut rng).unwrap();
        assert_eq!(fresh.level(), 6);
        assert!(max_abs_error(&dec(k, &fresh, 64), &m) <= 2.0 * bound);

        let mut low = ct.clone();
        while low.level() > 0 {
            low = k.evk.mul_scalar(&low, 1.0).unwrap();
        }
        let back = refresh_apply(&k.sk, &k.pk, &refresh_request(&low), &mut rng).unwrap();
        assert_eq!(back.level(), 6);

        // three multiplications, refresh, three more
        let a = random_vec(&mut rng, 64);
        let b: Vec<f64> = random_vec(&mut rng, 64).iter().map(|v| 0.5 + v.abs() / 2.0).collect();
        let ca = k.pk.encrypt(&pv(&a), &mut rng).unwrap();
        let cb = k.pk.encrypt(&pv(&b), &mut rng).unwrap();
        let mut acc = ca.clone();
        let mut want = a.clone();
        for round in 0..2 {
            for _ in 0..3 {
                acc = k.evk.mul(&acc, &cb).unwrap();
                want.iter_mut().zip(&b).for_each(|(w, y)| *w *= y);
            }
            if round == 0 {
                acc = refresh_apply(&k.sk, &k.pk, &refresh_request(&acc), &mut rng).unwrap();
            }
        }
        let err = relative_error(&dec(k, &acc, 64), &want);
        assert!(err <= 5e-3, "{err}");
    });
}

#[test]
fn refresh_rejects_wrong_key_and_tampering() {
    for b in BackendKind::ALL {
        let k = keys(b);
        let other = keygen(&FheParams::preset("default").unwrap().with_seed(77), b).unwrap();
        let ct = k.pk.encrypt_seeded(&pv(&[0.5; 8]), 1).unwrap();
        let token = refresh_request(&ct);
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        assert!(matches!(refresh_apply(&other.sk, &other.pk, &token, &mut rng), Err(FheError::KeyMismatch)));
        assert!(matches!(other.sk.decrypt(&ct), Err(FheError::KeyMismatch)));
        assert!(matches!(other.evk.add(&ct, &ct), Err(FheError::KeyMismatch)));
        let mut bad = token.clone();
        bad.checksum[0] ^= 1;
        assert!(matches!(refresh_apply(&k.sk, &k.pk, &bad, &mut rng), Err(FheError::Checksum)));
    }
}

#[test]
fn serialization_round_trips() {
    each_backend(|_, k, _| {
        let ct = k.pk.encrypt_seeded(&pv(&[0.25, -3.0]), 5).unwrap();
        let bytes = ct.to_bytes();
        assert_eq!(&bytes[..4], b"FGCT");
        let back = Ciphertext::from_bytes(&bytes).unwrap();
        assert_eq!(back, ct);
        assert_eq!(back.to_bytes(), bytes);
        assert!(Ciphertext::from_bytes(&bytes[..bytes.len() - 1]).is_err());

        let evk = EvalKey::from_bytes(&k.evk.to_bytes()).unwrap();
        assert_eq!(evk.to_bytes(), k.evk.to_bytes());
        let pk = PublicKey::from_bytes(&k.pk.to_bytes()).unwrap();
        let sk = SecretKey::from_bytes(&k.sk.to_bytes()).unwrap();
        assert_eq!(sk.to_bytes(), k.sk.to_bytes());
        let sq = evk.mul(&back, &pk.encrypt_seeded(&pv(&[2.0, 2.0]), 6).unwrap()).unwrap();
        let out = sk.decrypt(&sq).unwrap();
        assert!((out.values()[1] + 6.0).abs() < 1e-3);
    });
}

#[test]
fn determinism_under_seed() {
    for b in BackendKind::ALL {
        let p = FheParams::preset("small").unwrap();
        let k1 = keygen(&p, b).unwrap();
        let k2 = keygen(&p, b).unwrap();
        assert_eq!(k1.pk.to_bytes(), k2.pk.to_bytes());
        assert_eq!(k1.sk.to_bytes(), k2.sk.to_bytes());
        assert_eq!(k1.evk.to_bytes(), k2.evk.to_bytes());
        let m = pv(&[1.0, 2.0, 3.0]);
        assert_eq!(k1.pk.encrypt_seeded(&m, 4).unwrap(), k2.pk.encrypt_seeded(&m, 4).unwrap());
        if b == BackendKind::Rlwe {
            let k3 = keygen(&p.clone().with_seed(1), b).unwrap();
            assert_ne!(k1.pk.to_bytes(), k3.pk.to_bytes());
        }
    }
}

#[test]
fn invalid_parameters_and_inputs() {
    for b in BackendKind::ALL {
        let mut p = FheParams::default();
        // 2^30 + 3 is not 1 mod 8192
        p.modulus_chain = ModulusChain::Primes(vec![(1 << 30) + 3; 7]);
        assert!(matches!(keygen(&p, b), Err(FheError::InvalidParams(_))));
        let mut p = FheParams::default();
        p.ring_degree = 3000;
        assert!(keygen(&p, b).is_err());
        let k = keys(b);
        assert!(matches!(k.pk.encrypt_seeded(&pv(&vec![0.0; 2049]), 1), Err(FheError::TooLong { .. })));
        assert!(matches!(PlainVector::new(vec![f64::NAN]), Err(FheError::NonFinite(0))));
    }
}

#[test]
fn explicit_primes_accepted() {
    let p = FheParams::preset("small").unwrap();
    let mut q = p.clone();
    // a chain of explicit NTT-friendly primes works as well
    q.modulus_chain = ModulusChain::Primes(vec![1_099_511_592_961, 1_073_707_009, 1_073_698_817]);
    q.level_count = 2;
    match keygen(&q, BackendKind::Rlwe) {
        Ok(k) => {
            let ct = k.pk.encrypt_seeded(&pv(&[0.5]), 1).unwrap();
            let sq = k.evk.mul(&ct, &ct).unwrap();
            assert!((k.sk.decrypt(&sq).unwrap().values()[0] - 0.25).abs() < 1e-3);
        }
        Err(FheError::InvalidParams(msg)) => panic!("explicit primes rejected: {msg}"),
        Err(e) => panic!("{e}"),
    }
}

#[test]
fn shared_across_threads() {
    fn assert_send_sync<T: Send + Sync>() {}
    assert_send_sync::<KeySet>();
    assert_send_sync::<Ciphertext>();
    let k = keys(BackendKind::Rlwe);
    let ct = k.pk.encrypt_seeded(&pv(&[0.5; 4]), 1).unwrap();
    let outs: Vec<Ciphertext> = std::thread::scope(|s| {
        let hs: Vec<_> = (0..4).map(|_| s.spawn(|| k.evk.mul(&ct, &ct).unwrap())).collect();
        hs.into_iter().map(|h| h.join().unwrap()).collect()
    });
    assert!(outs.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn cleartext_hook_is_backend_gated() {
    let clear = keys(BackendKind::Cleartext);
    let a = clear.pk.encrypt_seeded(&pv(&[1.0, 2.0]), 1).unwrap();
    let b = clear.evk.mul(&a, &a).unwrap();
    let out = clear
        .evk
        .apply_cleartext(&[a, b], |v| vec![vec![v[0][1] + v[1][1]]])
        .unwrap();
    assert_eq!(out.len(), 1);
    assert_eq!(out[0].level(), 5);
    assert_eq!(dec(clear, &out[0], 2), vec![6.0, 0.0]);

    let rlwe = keys(BackendKind::Rlwe);
    let c = rlwe.pk.encrypt_seeded(&pv(&[1.0]), 1).unwrap();
    let err = rlwe.evk.apply_cleartext(&[c], |v| vec![v[0].to_vec()]).unwrap_err();
    assert_eq!(err, FheError::Unsupported("rlwe"));
}

//! Wire format: layout, round trips and corruption handling.

use fairgate_fhe::{keygen, refresh_request, BackendKind, FheParams, KeySet, PlainVector};
use fairgate_protocol::frame::{Frame, DEFAULT_MAX_PAYLOAD, HEADER_LEN};
use fairgate_protocol::message::{EncryptedColumn, EncryptedModel, ModelLayout, SensitiveGroup};
use fairgate_protocol::{FrameError, MessageKind, ProtocolError, ProtocolMessage, RoundData};
use proptest::prelude::*;

fn kind() -> impl Strategy<Value = MessageKind> {
    (0usize..8).prop_map(|i| MessageKind::ALL[i])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn frames_round_trip(kind in kind(), round in any::<u32>(), payload in prop::collection::vec(any::<u8>(), 0..2048)) {
        let f = Frame::new(kind, round, payload);
        let bytes = f.encode(DEFAULT_MAX_PAYLOAD).unwrap();
        prop_assert_eq!(bytes.len(), f.payload.len() + 22);
        prop_assert_eq!(Frame::decode(&bytes, DEFAULT_MAX_PAYLOAD).unwrap(), f.clone());
        let mut cursor = &bytes[..];
        prop_assert_eq!(Frame::read_from(&mut cursor, DEFAULT_MAX_PAYLOAD).unwrap(), f);
    }

    #[test]
    fn any_payload_bit_flip_fails_the_crc(payload in prop::collection::vec(any::<u8>(), 1..512), at in any::<prop::sample::Index>(), bit in 0u8..8) {
        let mut bytes = Frame::new(MessageKind::RoundData, 1, payload.clone()).encode(DEFAULT_MAX_PAYLOAD).unwrap();
        bytes[HEADER_LEN + at.index(payload.len())] ^= 1 << bit;
        let err = Frame::decode(&bytes, DEFAULT_MAX_PAYLOAD).unwrap_err();
        prop_assert!(matches!(err, ProtocolError::Frame(FrameError::Crc { .. })), "{err}");
    }

    #[test]
    fn truncation_is_detected(payload in prop::collection::vec(any::<u8>(), 0..256), cut in any::<prop::sample::Index>()) {
        let bytes = Frame::new(MessageKind::ModelResult, 2, payload).encode(DEFAULT_MAX_PAYLOAD).unwrap();
        let n = cut.index(bytes.len());
        let err = Frame::decode(&bytes[..n], DEFAULT_MAX_PAYLOAD).unwrap_err();
        let ok = matches!(err, ProtocolError::Frame(FrameError::Truncated { .. }) | ProtocolError::Disconnected);
        prop_assert!(ok, "{}", err);
    }
}

#[test]
fn terminate_frame_is_22_bytes() {
    let bytes = ProtocolMessage::Terminate.to_frame(3).encode(DEFAULT_MAX_PAYLOAD).unwrap();
    assert_eq!(bytes.len(), 22);
    assert_eq!(&bytes[..4], b"FGP1");
    // crc32 of the empty string is zero
    assert_eq!(&bytes[18..], &[0, 0, 0, 0]);
}

#[test]
fn header_corruption() {
    let good = Frame::new(MessageKind::Continue, 1, vec![]).encode(64).unwrap();
    let mut bad = good.clone();
    bad[0] = b'X';
    assert!(matches!(Frame::decode(&bad, 64), Err(ProtocolError::Frame(FrameError::BadMagic(_)))));
    let mut bad = good.clone();
    bad[4] = 9;
    assert!(matches!(Frame::decode(&bad, 64), Err(ProtocolError::Frame(FrameError::BadVersion(9)))));
    let mut bad = good.clone();
    bad[5] = 42;
    assert!(matches!(Frame::decode(&bad, 64), Err(ProtocolError::Frame(FrameError::UnknownKind(42)))));
    let mut long = good.clone();
    long.push(0);
    assert!(matches!(Frame::decode(&long, 64), Err(ProtocolError::Frame(FrameError::Trailing(1)))));
}

#[test]
fn oversize_payloads_are_refused_both_ways() {
    let f = Frame::new(MessageKind::RoundData, 1, vec![0; 100]);
    assert!(matches!(f.encode(99), Err(ProtocolError::Frame(FrameError::Oversize { len: 100, limit: 99 }))));
    let bytes = f.encode(100).unwrap();
    assert!(matches!(Frame::decode(&bytes, 99), Err(ProtocolError::Frame(FrameError::Oversize { .. }))));
    // a forged length is rejected before anything is allocated
    let mut forged = bytes.clone();
    forged[10..18].copy_from_slice(&u64::MAX.to_le_bytes());
    assert!(matches!(Frame::decode(&forged, DEFAULT_MAX_PAYLOAD), Err(ProtocolError::Frame(FrameError::Oversize { .. }))));
}

fn messages(keys: &KeySet) -> Vec<ProtocolMessage> {
    let ct = |v: f64, seed| keys.pk.encrypt_seeded(&PlainVector::new(vec![v, -v]).unwrap(), seed).unwrap();
    let model = EncryptedModel { columns: vec!["a".into(), "b=x".into()], layout: ModelLayout::Replicated, ciphertexts: vec![ct(1.0, 1), ct(2.0, 2)] };
    vec![
        ProtocolMessage::EvkTransfer { config_digest: [7; 32], evk: keys.evk.clone() },
        ProtocolMessage::RoundData(RoundData {
            rows: 2,
            columns: vec![
                EncryptedColumn { key: "a".into(), blocks: vec![ct(0.5, 3)] },
                EncryptedColumn { key: "s".into(), blocks: vec![ct(0.25, 4)] },
            ],
            target: vec![ct(1.0, 5)],
            unprotected: vec!["a".into()],
            sensitive: vec![SensitiveGroup { label: "s".into(), columns: vec!["s".into()] }],
        }),
        ProtocolMessage::ModelResult(model.clone()),
        ProtocolMessage::LooModelResult { label: "s".into(), model: EncryptedModel { layout: ModelLayout::Packed, ..model } },
        ProtocolMessage::RefreshRequest(vec![refresh_request(&ct(3.0, 6))]),
        ProtocolMessage::RefreshResponse(vec![ct(4.0, 7)]),
        ProtocolMessage::Continue,
        ProtocolMessage::Terminate,
    ]
}

#[test]
fn messages_round_trip_bit_exactly() {
    for backend in BackendKind::ALL {
        let keys = keygen(&FheParams::preset("small").unwrap(), backend).unwrap();
        for (i, m) in messages(&keys).into_iter().enumerate() {
            let frame = m.to_frame(i as u32);
            let bytes = frame.encode(DEFAULT_MAX_PAYLOAD).unwrap();
            let back = ProtocolMessage::from_frame(&Frame::decode(&bytes, DEFAULT_MAX_PAYLOAD).unwrap()).unwrap();
            assert_eq!(back.kind(), m.kind());
            assert_eq!(back.to_frame(i as u32).encode(DEFAULT_MAX_PAYLOAD).unwrap(), bytes, "{backend} {}", m.kind());
        }
    }
}

#[test]
fn round_data_with_overlapping_sets_is_malformed() {
    let keys = keygen(&FheParams::preset("small").unwrap(), BackendKind::Cleartext).unwrap();
    let ProtocolMessage::RoundData(mut d) = messages(&keys).swap_remove(1) else { unreachable!() };
    d.unprotected.push("s".into());
    let frame = ProtocolMessage::RoundData(d).to_frame(1);
    let err = ProtocolMessage::from_frame(&frame).unwrap_err();
    assert!(matches!(err, ProtocolError::Malformed { kind: MessageKind::RoundData, .. }), "{err}");
}

#[test]
fn garbage_bodies_are_malformed_not_panics() {
    for kind in MessageKind::ALL {
        for body in [vec![], vec![0xff; 7], vec![1, 0, 0, 0, 0, 0, 0, 0, 0xff, 0xff, 0xff, 0x7f]] {
            let r = ProtocolMessage::from_frame(&Frame::new(kind, 0, body.clone()));
            if matches!(kind, MessageKind::Continue | MessageKind::Terminate) && body.is_empty() {
                assert!(r.is_ok());
            } else {
                assert!(matches!(r, Err(ProtocolError::Malformed { .. })), "{kind} {body:?}");
            }
        }
    }
}

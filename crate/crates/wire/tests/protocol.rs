use std::io::Cursor;

use proptest::prelude::*;
use steer_wire::codec::{HEADER_LEN, MAGIC};
use steer_wire::{
    decode, encode, Codec, Connection, Decoded, DisplacementMsg, FrameReader, FrameWriter, Message, Method,
    SnapshotMsg, SurfaceMeshMsg, WireError,
};

fn real() -> impl Strategy<Value = f64> {
    prop_oneof![4 => -1e6..1e6f64, 1 => any::<f64>().prop_filter("not NaN", |v| !v.is_nan())]
}

fn vec3() -> impl Strategy<Value = [f64; 3]> {
    [real(), real(), real()]
}

fn surface() -> impl Strategy<Value = SurfaceMeshMsg> {
    (0usize..30, 0usize..30).prop_flat_map(|(nv, nt)| {
        (
            prop::collection::vec(vec3(), nv),
            prop::collection::vec([any::<u64>(), any::<u64>(), any::<u64>()], nt),
            prop::collection::vec(any::<i64>(), nt),
            prop::collection::vec(any::<u64>(), nv),
        )
            .prop_map(|(vertices, triangles, tags, volume_ids)| SurfaceMeshMsg { vertices, triangles, tags, volume_ids })
    })
}

fn message() -> impl Strategy<Value = Message> {
    prop_oneof![
        ".{0,20}".prop_map(|version| Message::Hello { version }),
        surface().prop_map(Message::SurfaceMesh),
        (prop::collection::vec(vec3(), 0..30), any::<u32>(), any::<u32>(), any::<bool>()).prop_map(
            |(values, schedule_steps, steps_between, h)| {
                let method = if h { Method::Harmonic } else { Method::Elasticity };
                Message::Displacement(DisplacementMsg { values, schedule_steps, steps_between, method })
            }
        ),
        (any::<u32>(), ".{0,20}").prop_map(|(code, detail)| Message::Ack { code, detail }),
        (any::<u64>(), "[a-z_]{0,8}", prop::collection::vec(real(), 0..30))
            .prop_map(|(step, field, values)| Message::Snapshot(SnapshotMsg { step, field, values })),
        Just(Message::Bye),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn round_trip_is_identity(msg in message(), crc in any::<bool>()) {
        let codec = Codec { checksum: crc, ..Codec::default() };
        let bytes = codec.encode(&msg);
        prop_assert_eq!(bytes.len(), HEADER_LEN + msg.payload_len() + if crc { 4 } else { 0 });
        prop_assert_eq!(codec.decode(&bytes).unwrap(), Decoded::Frame { message: msg, consumed: bytes.len() });
    }

    #[test]
    fn distinct_messages_encode_differently(a in message(), b in message()) {
        prop_assume!(a != b);
        prop_assert_ne!(encode(&a), encode(&b));
    }

    #[test]
    fn every_strict_prefix_needs_more(msg in message(), crc in any::<bool>()) {
        let codec = Codec { checksum: crc, ..Codec::default() };
        let bytes = codec.encode(&msg);
        for cut in 0..bytes.len() {
            prop_assert_eq!(codec.decode(&bytes[..cut]).unwrap(), Decoded::NeedMore);
        }
    }

    #[test]
    fn back_to_back_frames_split_cleanly(msgs in prop::collection::vec(message(), 1..6)) {
        let mut stream = Vec::new();
        for m in &msgs {
            stream.extend(encode(m));
        }
        let mut reader = FrameReader::new(Cursor::new(stream));
        for m in &msgs {
            let got = reader.recv().unwrap();
            prop_assert_eq!(got.as_ref(), Some(m));
        }
        prop_assert!(reader.recv().unwrap().is_none());
    }

    #[test]
    fn checksum_catches_any_single_bit_flip(msg in message(), bit in any::<prop::sample::Index>()) {
        let codec = Codec::with_checksum();
        let mut bytes = codec.encode(&msg);
        let i = bit.index(bytes.len() * 8);
        bytes[i / 8] ^= 1 << (i % 8);
        // Header flips surface as header errors or an incomplete frame; all
        // others must be caught by the checksum.
        match codec.decode(&bytes) {
            Ok(Decoded::Frame { .. }) => prop_assert!(false, "flip at bit {} went unnoticed", i),
            Ok(Decoded::NeedMore) => prop_assert!(i / 8 >= 6 && i / 8 < HEADER_LEN),
            Err(_) => {}
        }
    }
}

#[test]
fn empty_arrays_and_strings_round_trip() {
    for msg in [
        Message::Hello { version: String::new() },
        Message::SurfaceMesh(SurfaceMeshMsg::default()),
        Message::Displacement(DisplacementMsg::default()),
        Message::Ack { code: 0, detail: String::new() },
        Message::Snapshot(SnapshotMsg::default()),
        Message::Bye,
    ] {
        let bytes = encode(&msg);
        assert_eq!(decode(&bytes).unwrap(), Decoded::Frame { message: msg, consumed: bytes.len() });
    }
}

#[test]
fn corrupted_first_byte_is_bad_magic() {
    let mut bytes = encode(&Message::Hello { version: "1.0".into() });
    bytes[0] = b'X';
    assert!(matches!(decode(&bytes), Err(WireError::BadMagic(m)) if m == b"XHRL"));
}

#[test]
fn header_field_errors() {
    let mut bytes = encode(&Message::Bye);
    bytes[4] = 2;
    assert!(matches!(decode(&bytes), Err(WireError::UnsupportedVersion(2))));
    let mut bytes = encode(&Message::Bye);
    bytes[5] = 0;
    assert!(matches!(decode(&bytes), Err(WireError::UnknownType(0))));
}

#[test]
fn declared_array_longer_than_payload_overflows() {
    let msg = Message::Displacement(DisplacementMsg { values: vec![[1.0, 2.0, 3.0]; 2], ..Default::default() });
    let mut bytes = encode(&msg);
    bytes[HEADER_LEN..HEADER_LEN + 8].copy_from_slice(&3u64.to_le_bytes());
    assert!(matches!(decode(&bytes), Err(WireError::PayloadOverflow { what: "displacements", .. })));
    bytes[HEADER_LEN..HEADER_LEN + 8].copy_from_slice(&u64::MAX.to_le_bytes());
    assert!(matches!(decode(&bytes), Err(WireError::PayloadOverflow { .. })));
    bytes[HEADER_LEN..HEADER_LEN + 8].copy_from_slice(&1u64.to_le_bytes());
    assert!(matches!(decode(&bytes), Err(WireError::TrailingBytes(24))));
}

#[test]
fn bad_method_and_utf8_are_rejected() {
    let mut bytes = encode(&Message::Displacement(DisplacementMsg::default()));
    *bytes.last_mut().unwrap() = 7;
    assert!(matches!(decode(&bytes), Err(WireError::UnknownMethod(7))));
    let mut bytes = encode(&Message::Hello { version: "ab".into() });
    bytes[HEADER_LEN + 4] = 0xff;
    assert!(matches!(decode(&bytes), Err(WireError::InvalidUtf8)));
}

#[test]
fn little_endian_layout() {
    let msg = Message::Ack { code: 0x0102_0304, detail: "ok".into() };
    let bytes = encode(&msg);
    assert_eq!(&bytes[..4], &MAGIC);
    assert_eq!(&bytes[HEADER_LEN..], &[4, 3, 2, 1, 2, 0, 0, 0, b'o', b'k']);
}

#[test]
fn eof_inside_a_frame_is_an_error() {
    let bytes = encode(&Message::Hello { version: "x".into() });
    let mut reader = FrameReader::new(Cursor::new(bytes[..bytes.len() - 1].to_vec()));
    assert!(matches!(reader.recv(), Err(WireError::UnexpectedEof(_))));
}

#[test]
fn request_reply_over_tcp() {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let server = std::thread::spawn(move || {
        let (stream, _) = listener.accept().unwrap();
        let (mut rx, mut tx) = Connection::new(stream).split().unwrap();
        while let Some(msg) = rx.recv().unwrap() {
            match msg {
                Message::Hello { version } => tx.send(&Message::Ack { code: 1, detail: version }).unwrap(),
                Message::Bye => break,
                other => panic!("unexpected {other:?}"),
            }
        }
    });
    let mut conn = Connection::connect(addr).unwrap();
    let reply = conn.request(&Message::Hello { version: "test".into() }).unwrap();
    assert_eq!(reply, Message::Ack { code: 1, detail: "test".into() });
    conn.send(&Message::Bye).unwrap();
    server.join().unwrap();
    let mut out = FrameWriter::new(Vec::new());
    out.send(&Message::Bye).unwrap();
    assert_eq!(out.get_mut().len(), HEADER_LEN);
}

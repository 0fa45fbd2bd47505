use std::collections::BTreeSet;
use std::path::PathBuf;

use afv_core::protocol::{decode, encode, wire_size, WireMessage};
use serde::Deserialize;

#[derive(Deserialize)]
struct Fixture {
    message: WireMessage,
    hex: String,
}

fn fixtures() -> Vec<(String, Fixture)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/protocol");
    let mut out: Vec<_> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .map(|p| {
            let text = std::fs::read_to_string(&p).unwrap();
            let name = p.file_stem().unwrap().to_string_lossy().into_owned();
            (name, serde_json::from_str(&text).unwrap())
        })
        .collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

fn unhex(s: &str) -> Vec<u8> {
    hex::decode(s).expect("fixture hex is valid")
}

#[test]
fn golden_fixtures_match_bit_for_bit() {
    let all = fixtures();
    assert!(all.len() >= 5);
    for (name, fx) in &all {
        let bytes = unhex(&fx.hex);
        assert_eq!(encode(&fx.message).unwrap(), bytes, "{name}: encode");
        assert_eq!(decode(&bytes).unwrap(), fx.message, "{name}: decode");
        assert_eq!(wire_size(&fx.message), bytes.len(), "{name}: size");
    }
}

#[test]
fn fixtures_cover_every_message_type() {
    let types: BTreeSet<u8> = fixtures()
        .iter()
        .map(|(_, fx)| fx.message.message_type() as u8)
        .collect();
    assert_eq!(types, (1..=5).collect());
}

#[test]
fn truncated_fixtures_are_rejected() {
    for (name, fx) in fixtures() {
        let bytes = unhex(&fx.hex);
        for cut in 0..bytes.len() {
            // An empty Data message is just its type byte; any shorter Data
            // prefix that ends on an entry boundary is itself valid.
            if let Ok(m) = decode(&bytes[..cut]) {
                assert!(
                    matches!(m, WireMessage::Data(_)),
                    "{name}: prefix of {cut} bytes decoded as {m:?}"
                );
            }
        }
    }
}

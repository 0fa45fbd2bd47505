//! Hex front end for the message codec, plus a random message generator
//! for round-trip checks.

use afv_core::model::{DeviceKind, FunctionType, MovingStatus, NetworkKind};
use afv_core::protocol::{
    decode, encode, AssignmentsMsg, ContextRequestMsg, ContextSensorMsg, DataEntry, DataMsg,
    InitializationMsg, WireFunction, WireMessage, WireNetwork,
};
use anyhow::Context;
use rand::seq::IndexedRandom;
use rand::Rng;

/// JSON message in, lowercase hex out.
pub fn encode_json(json: &str) -> anyhow::Result<String> {
    let msg: WireMessage = serde_json::from_str(json).context("parsing message JSON")?;
    Ok(hex::encode(encode(&msg)?))
}

/// Hex in (whitespace ignored), pretty JSON out.
pub fn decode_hex(text: &str) -> anyhow::Result<String> {
    let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let bytes = hex::decode(compact).context("parsing hex")?;
    Ok(serde_json::to_string_pretty(&decode(&bytes)?)?)
}

const NETWORKS: [NetworkKind; 3] = [
    NetworkKind::WiFi,
    NetworkKind::Cellular,
    NetworkKind::Bluetooth,
];

fn bytes<R: Rng>(rng: &mut R, max_len: usize) -> Vec<u8> {
    let n = rng.random_range(0..=max_len);
    (0..n).map(|_| rng.random()).collect()
}

/// Any finite f32, including signed zeros and subnormals.
fn finite_f32<R: Rng>(rng: &mut R) -> f32 {
    loop {
        let v = f32::from_bits(rng.random());
        if v.is_finite() {
            return v;
        }
    }
}

fn pick<R: Rng, T: Copy>(rng: &mut R, items: &[T]) -> T {
    *items.choose(rng).expect("non-empty")
}

/// A uniformly chosen message type with random, encodable contents.
pub fn random_message<R: Rng>(rng: &mut R) -> WireMessage {
    match rng.random_range(0..5) {
        0 => WireMessage::Initialization(InitializationMsg {
            device_id: rng.random(),
            device_type: pick(rng, &DeviceKind::ALL),
            networks: (0..rng.random_range(0..4))
                .map(|_| WireNetwork {
                    id: bytes(rng, 32),
                    monetary_cost: finite_f32(rng),
                })
                .collect(),
            functions: (0..rng.random_range(0..9))
                .map(|_| WireFunction {
                    function_type: pick(rng, &FunctionType::ALL),
                    energy: finite_f32(rng),
                })
                .collect(),
        }),
        1 => {
            let network_kind = if rng.random_bool(0.2) {
                None
            } else {
                Some(pick(rng, &NETWORKS))
            };
            WireMessage::ContextSensor(ContextSensorMsg {
                device_id: rng.random(),
                battery_level: rng.random_range(0..=100),
                charging: rng.random(),
                moving: pick(rng, &MovingStatus::ALL),
                network_kind,
                net_id: bytes(rng, 32),
                avg_link_speed: finite_f32(rng),
            })
        }
        2 => WireMessage::ContextRequest(ContextRequestMsg {
            request_type: rng.random(),
            info: bytes(rng, 600),
        }),
        3 => {
            let mut pairs = |max: usize| -> Vec<(u8, u8)> {
                (0..rng.random_range(0..=max))
                    .map(|_| (rng.random(), rng.random()))
                    .collect()
            };
            let rd_pairs = pairs(255);
            let vd_pairs = pairs(40);
            WireMessage::Assignments(AssignmentsMsg { rd_pairs, vd_pairs })
        }
        _ => WireMessage::Data(DataMsg {
            entries: (0..rng.random_range(0..5))
                .map(|_| DataEntry {
                    request_type: rng.random(),
                    data: bytes(rng, 300),
                })
                .collect(),
        }),
    }
}

/// Golden message encodings, independently constructed byte by byte.
pub const GOLDEN_FIXTURES: [(&str, &str); 8] = [
    (
        "initialization",
        include_str!("../../core/tests/fixtures/protocol/initialization.json"),
    ),
    (
        "context_sensor",
        include_str!("../../core/tests/fixtures/protocol/context_sensor.json"),
    ),
    (
        "context_sensor_offline",
        include_str!("../../core/tests/fixtures/protocol/context_sensor_offline.json"),
    ),
    (
        "context_request",
        include_str!("../../core/tests/fixtures/protocol/context_request.json"),
    ),
    (
        "assignments",
        include_str!("../../core/tests/fixtures/protocol/assignments.json"),
    ),
    (
        "assignments_two_requests",
        include_str!("../../core/tests/fixtures/protocol/assignments_two_requests.json"),
    ),
    (
        "data_empty",
        include_str!("../../core/tests/fixtures/protocol/data_empty.json"),
    ),
    (
        "data_two_entries",
        include_str!("../../core/tests/fixtures/protocol/data_two_entries.json"),
    ),
];

#[derive(serde::Deserialize)]
struct Fixture {
    message: WireMessage,
    hex: String,
}

/// Checks every golden fixture; returns the names that do not match.
pub fn golden_mismatches() -> Vec<&'static str> {
    GOLDEN_FIXTURES
        .iter()
        .filter(|(_, text)| {
            let Ok(fx) = serde_json::from_str::<Fixture>(text) else {
                return true;
            };
            let Ok(expected) = hex::decode(&fx.hex) else {
                return true;
            };
            encode(&fx.message).ok() != Some(expected.clone())
                || decode(&expected).ok() != Some(fx.message)
        })
        .map(|(name, _)| *name)
        .collect()
}

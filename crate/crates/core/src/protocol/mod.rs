//! Inter-device message formats.
//!
//! Every message starts with a one-byte type id followed by its fields in a
//! fixed order. Multi-byte integers are big-endian and 4-byte reals are
//! IEEE-754 single precision, also big-endian. Variable-length fields are
//! preceded by their length; list counts use one byte.
//!
//! | id   | message        | layout after the id byte                                   |
//! |------|----------------|------------------------------------------------------------|
//! | 0x01 | Initialization | device_id u64, type u8, n u8, n x (len u8, id, cost f32),  |
//! |      |                | m u8, m x (function u8, energy f32)                        |
//! | 0x02 | ContextSensor  | device_id u64, battery u8, charging u8, moving u8,         |
//! |      |                | network u8, len u8, id, link speed f32                     |
//! | 0x03 | ContextRequest | request type u8, len u32, info                             |
//! | 0x04 | Assignments    | n u8, n x (request u8, device u8), m u8, m x (fn u8, dev u8)|
//! | 0x05 | Data           | repeated until end: (request type u8, len u32, data)       |

mod codec;

pub use codec::{decode, encode, wire_size};

use serde::{Deserialize, Serialize};

use crate::model::{DeviceId, DeviceKind, FunctionType, MovingStatus, NetworkKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum MessageType {
    Initialization = 0x01,
    ContextSensor = 0x02,
    ContextRequest = 0x03,
    Assignments = 0x04,
    Data = 0x05,
}

impl TryFrom<u8> for MessageType {
    type Error = ProtocolError;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        match v {
            0x01 => Ok(Self::Initialization),
            0x02 => Ok(Self::ContextSensor),
            0x03 => Ok(Self::ContextRequest),
            0x04 => Ok(Self::Assignments),
            0x05 => Ok(Self::Data),
            other => Err(ProtocolError::UnknownType(other)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProtocolError {
    #[error("unknown message type 0x{0:02x}")]
    UnknownType(u8),
    #[error("message truncated at byte {offset}")]
    Truncated { offset: usize },
    #[error("{count} trailing bytes after message")]
    TrailingBytes { count: usize },
    #[error("invalid value {value} for {field}")]
    InvalidEnum { field: &'static str, value: u64 },
    #[error("{field} has {len} entries/bytes, more than its length field allows")]
    FieldOverflow { field: &'static str, len: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireNetwork {
    /// SSID or operator id.
    pub id: Vec<u8>,
    pub monetary_cost: f32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireFunction {
    pub function_type: FunctionType,
    pub energy: f32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitializationMsg {
    pub device_id: DeviceId,
    pub device_type: DeviceKind,
    pub networks: Vec<WireNetwork>,
    pub functions: Vec<WireFunction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextSensorMsg {
    pub device_id: DeviceId,
    pub battery_level: u8,
    pub charging: bool,
    pub moving: MovingStatus,
    /// `None` when the device has no connected network.
    pub network_kind: Option<NetworkKind>,
    pub net_id: Vec<u8>,
    pub avg_link_speed: f32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextRequestMsg {
    pub request_type: u8,
    pub info: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentsMsg {
    /// (request index, device index) pairs.
    pub rd_pairs: Vec<(u8, u8)>,
    /// (function, requesting device index) pairs.
    pub vd_pairs: Vec<(u8, u8)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataEntry {
    pub request_type: u8,
    pub data: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataMsg {
    pub entries: Vec<DataEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum WireMessage {
    Initialization(InitializationMsg),
    ContextSensor(ContextSensorMsg),
    ContextRequest(ContextRequestMsg),
    Assignments(AssignmentsMsg),
    Data(DataMsg),
}

impl WireMessage {
    pub fn message_type(&self) -> MessageType {
        match self {
            WireMessage::Initialization(_) => MessageType::Initialization,
            WireMessage::ContextSensor(_) => MessageType::ContextSensor,
            WireMessage::ContextRequest(_) => MessageType::ContextRequest,
            WireMessage::Assignments(_) => MessageType::Assignments,
            WireMessage::Data(_) => MessageType::Data,
        }
    }
}

pub(crate) fn device_kind_code(kind: DeviceKind) -> u8 {
    match kind {
        DeviceKind::Phone => 1,
        DeviceKind::Watch => 2,
        DeviceKind::Glass => 3,
        DeviceKind::Tier2Sensor => 4,
    }
}

pub(crate) fn network_kind_code(kind: Option<NetworkKind>) -> u8 {
    match kind {
        None => 0,
        Some(NetworkKind::WiFi) => 1,
        Some(NetworkKind::Cellular) => 2,
        Some(NetworkKind::Bluetooth) => 3,
    }
}

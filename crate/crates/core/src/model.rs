//! Domain model shared by the catalog, allocator, protocol and simulator.
//!
//! Units are fixed across the crate: energy in mJ, time in seconds, data in
//! bytes, money in currency units per MB and battery capacity in mAh.

use std::fmt;

use serde::{Deserialize, Serialize};

pub type DeviceId = u64;
pub type RegistrationId = u32;

/// Nominal Li-ion cell voltage used for mAh to joule conversion.
pub const DEFAULT_NOMINAL_VOLTAGE_V: f64 = 3.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DeviceKind {
    Phone,
    Watch,
    Glass,
    Tier2Sensor,
}

impl DeviceKind {
    pub const ALL: [DeviceKind; 4] = [
        DeviceKind::Phone,
        DeviceKind::Watch,
        DeviceKind::Glass,
        DeviceKind::Tier2Sensor,
    ];
}

impl fmt::Display for DeviceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Tier {
    Tier1,
    Tier2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NetworkKind {
    WiFi,
    Cellular,
    Bluetooth,
}

impl fmt::Display for NetworkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkProfile {
    pub network_kind: NetworkKind,
    /// SSID or operator id. At most 255 bytes so it fits one length byte.
    pub network_id: String,
    #[serde(rename = "monetary_cost_per_MB")]
    pub monetary_cost_per_mb: f64,
    #[serde(rename = "link_speed_Bps", default)]
    pub link_speed_bps: f64,
}

impl NetworkProfile {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.network_id.len() > u8::MAX as usize {
            return Err(ModelError::Invalid(format!(
                "network id `{}` is longer than 255 bytes",
                self.network_id
            )));
        }
        if !(self.monetary_cost_per_mb >= 0.0) || !self.monetary_cost_per_mb.is_finite() {
            return Err(ModelError::Invalid(format!(
                "network `{}` has invalid monetary cost {}",
                self.network_id, self.monetary_cost_per_mb
            )));
        }
        if !(self.link_speed_bps >= 0.0) {
            return Err(ModelError::Invalid(format!(
                "network `{}` has negative link speed",
                self.network_id
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FunctionCategory {
    Sensing,
    Connectivity,
    Processing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FunctionType {
    Accelerometer,
    Gyroscope,
    Magnetometer,
    HeartRate,
    InternetUpload,
    InternetDownload,
    Compression,
    Encoding,
}

impl FunctionType {
    pub const ALL: [FunctionType; 8] = [
        FunctionType::Accelerometer,
        FunctionType::Gyroscope,
        FunctionType::Magnetometer,
        FunctionType::HeartRate,
        FunctionType::InternetUpload,
        FunctionType::InternetDownload,
        FunctionType::Compression,
        FunctionType::Encoding,
    ];

    pub fn category(self) -> FunctionCategory {
        match self {
            FunctionType::Accelerometer
            | FunctionType::Gyroscope
            | FunctionType::Magnetometer
            | FunctionType::HeartRate => FunctionCategory::Sensing,
            FunctionType::InternetUpload | FunctionType::InternetDownload => {
                FunctionCategory::Connectivity
            }
            FunctionType::Compression | FunctionType::Encoding => FunctionCategory::Processing,
        }
    }

    pub fn is_sensing(self) -> bool {
        self.category() == FunctionCategory::Sensing
    }

    /// One-byte code used on the wire.
    pub fn code(self) -> u8 {
        match self {
            FunctionType::Accelerometer => 1,
            FunctionType::Gyroscope => 2,
            FunctionType::Magnetometer => 3,
            FunctionType::HeartRate => 4,
            FunctionType::InternetUpload => 5,
            FunctionType::InternetDownload => 6,
            FunctionType::Compression => 7,
            FunctionType::Encoding => 8,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.iter().copied().find(|f| f.code() == code)
    }
}

impl fmt::Display for FunctionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Android sensor delivery speeds, ordered slowest to fastest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum SamplingSpeed {
    Normal,
    Ui,
    Game,
    Fastest,
}

impl SamplingSpeed {
    pub const ALL: [SamplingSpeed; 4] = [
        SamplingSpeed::Normal,
        SamplingSpeed::Ui,
        SamplingSpeed::Game,
        SamplingSpeed::Fastest,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionImplementation {
    pub function_type: FunctionType,
    /// Per-device cost override, in objective units. Zero means "take it from
    /// the catalog".
    #[serde(default)]
    pub cost_f: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceProfile {
    pub device_id: DeviceId,
    pub device_kind: DeviceKind,
    pub tier: Tier,
    #[serde(rename = "battery_capacity_mAh")]
    pub battery_capacity_mah: f64,
    #[serde(default = "default_voltage")]
    pub nominal_voltage_v: f64,
    #[serde(default)]
    pub networks: Vec<NetworkProfile>,
    #[serde(default)]
    pub implementations: Vec<FunctionImplementation>,
    #[serde(default)]
    pub paired_host: Option<DeviceId>,
}

fn default_voltage() -> f64 {
    DEFAULT_NOMINAL_VOLTAGE_V
}

impl DeviceProfile {
    pub fn capacity_joules(&self) -> f64 {
        self.battery_capacity_mah * 3.6 * self.nominal_voltage_v
    }

    pub fn implements(&self, function: FunctionType) -> bool {
        self.implementations
            .iter()
            .any(|imp| imp.function_type == function)
    }

    pub fn network(&self, network_id: &str) -> Option<&NetworkProfile> {
        self.networks.iter().find(|n| n.network_id == network_id)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for net in &self.networks {
            net.validate()?;
        }
        match self.tier {
            Tier::Tier1 => {
                if !(self.battery_capacity_mah > 0.0) {
                    return Err(ModelError::Invalid(format!(
                        "tier-1 device {} needs a positive battery capacity",
                        self.device_id
                    )));
                }
                if self.paired_host.is_some() {
                    return Err(ModelError::Invalid(format!(
                        "tier-1 device {} cannot have a paired host",
                        self.device_id
                    )));
                }
            }
            Tier::Tier2 => {
                if !self.networks.is_empty() {
                    return Err(ModelError::Invalid(format!(
                        "tier-2 device {} cannot own networks",
                        self.device_id
                    )));
                }
                if self.paired_host.is_none() {
                    return Err(ModelError::Invalid(format!(
                        "tier-2 device {} has no paired host",
                        self.device_id
                    )));
                }
                if let Some(imp) = self
                    .implementations
                    .iter()
                    .find(|imp| !imp.function_type.is_sensing())
                {
                    return Err(ModelError::Invalid(format!(
                        "tier-2 device {} implements non-sensing function {}",
                        self.device_id, imp.function_type
                    )));
                }
                if self.battery_capacity_mah < 0.0 {
                    return Err(ModelError::Invalid(format!(
                        "device {} has negative battery capacity",
                        self.device_id
                    )));
                }
            }
        }
        if !(self.nominal_voltage_v > 0.0) {
            return Err(ModelError::Invalid(format!(
                "device {} needs a positive nominal voltage",
                self.device_id
            )));
        }
        Ok(())
    }
}

/// A (name, value) context pair, e.g. `("moving", "Walking")`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ContextPair {
    pub name: String,
    pub value: String,
}

impl ContextPair {
    pub fn new(name: impl Into<String>, value: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            value: value.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecisionSpec {
    pub context: String,
    pub min_percent: f64,
    pub max_percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForcedMapping {
    pub when: ContextPair,
    pub device: DeviceId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Registration {
    pub id: RegistrationId,
    pub app_id: String,
    pub function_type: FunctionType,
    pub origin_device: DeviceId,
    #[serde(default)]
    pub sampling_speed: Option<SamplingSpeed>,
    pub report_interval_s: f64,
    #[serde(default)]
    pub payload_bytes_per_report: u64,
    #[serde(default)]
    pub precision_spec: Vec<PrecisionSpec>,
    #[serde(default)]
    pub forced_mapping: Vec<ForcedMapping>,
}

impl Registration {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.report_interval_s > 0.0) || !self.report_interval_s.is_finite() {
            return Err(ModelError::Invalid(format!(
                "registration {} needs a positive report interval",
                self.id
            )));
        }
        if let Some(p) = self
            .precision_spec
            .iter()
            .find(|p| !(p.min_percent <= p.max_percent))
        {
            return Err(ModelError::Invalid(format!(
                "registration {} has precision range {}..{} for `{}`",
                self.id, p.min_percent, p.max_percent, p.context
            )));
        }
        if self.sampling_speed.is_some() && !self.function_type.is_sensing() {
            return Err(ModelError::Invalid(format!(
                "registration {} sets a sampling speed on non-sensing function {}",
                self.id, self.function_type
            )));
        }
        Ok(())
    }

    /// Sampling speed with the Android default for sensing functions.
    pub fn speed(&self) -> SamplingSpeed {
        self.sampling_speed.unwrap_or(SamplingSpeed::Normal)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PreferenceScope {
    Device,
    User,
    Application,
}

impl PreferenceScope {
    /// Higher number wins when two scopes constrain the same context.
    pub fn priority(self) -> u8 {
        match self {
            PreferenceScope::Device => 3,
            PreferenceScope::User => 2,
            PreferenceScope::Application => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "id")]
pub enum PreferenceSubject {
    App(String),
    Device(DeviceId),
    User,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preference {
    pub scope: PreferenceScope,
    pub subject: PreferenceSubject,
    /// (context-name, allowed-value) rules; the value `any` allows everything.
    pub rules: Vec<ContextPair>,
}

impl Preference {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.rules.is_empty() {
            return Err(ModelError::Invalid("preference without rules".into()));
        }
        let subject_ok = matches!(
            (self.scope, &self.subject),
            (PreferenceScope::Device, PreferenceSubject::Device(_))
                | (PreferenceScope::User, PreferenceSubject::User)
                | (PreferenceScope::Application, PreferenceSubject::App(_))
        );
        if !subject_ok {
            return Err(ModelError::Invalid(format!(
                "{:?} preference cannot target {:?}",
                self.scope, self.subject
            )));
        }
        Ok(())
    }
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
pub enum MovingStatus {
    #[default]
    Still,
    Walking,
    BodyStretch,
    HeadStretch,
}

impl MovingStatus {
    pub const ALL: [MovingStatus; 4] = [
        MovingStatus::Still,
        MovingStatus::Walking,
        MovingStatus::BodyStretch,
        MovingStatus::HeadStretch,
    ];

    pub fn code(self) -> u8 {
        match self {
            MovingStatus::Still => 0,
            MovingStatus::Walking => 1,
            MovingStatus::BodyStretch => 2,
            MovingStatus::HeadStretch => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.iter().copied().find(|m| m.code() == code)
    }

    pub fn name(self) -> &'static str {
        match self {
            MovingStatus::Still => "Still",
            MovingStatus::Walking => "Walking",
            MovingStatus::BodyStretch => "BodyStretch",
            MovingStatus::HeadStretch => "HeadStretch",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnectedNetwork {
    pub network_kind: NetworkKind,
    pub network_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextSnapshot {
    pub device_id: DeviceId,
    pub battery_soc_percent: u8,
    #[serde(default)]
    pub charging: bool,
    #[serde(default = "default_moving")]
    pub moving: MovingStatus,
    #[serde(default)]
    pub connected_network: Option<ConnectedNetwork>,
    #[serde(rename = "avg_link_speed_Bps", default)]
    pub avg_link_speed_bps: f64,
}

fn default_moving() -> MovingStatus {
    MovingStatus::Still
}

impl ContextSnapshot {
    pub fn new(device_id: DeviceId, battery_soc_percent: u8) -> Self {
        Self {
            device_id,
            battery_soc_percent,
            charging: false,
            moving: MovingStatus::Still,
            connected_network: None,
            avg_link_speed_bps: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.battery_soc_percent > 100 {
            return Err(ModelError::Invalid(format!(
                "device {} reports SoC {}%",
                self.device_id, self.battery_soc_percent
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum ObjectiveMode {
    Quality,
    #[default]
    Energy,
    Monetary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Objective {
    pub mode: ObjectiveMode,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ModelError {
    #[error("invalid model value: {0}")]
    Invalid(String),
}

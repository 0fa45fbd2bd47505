use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::allocator::MasterRule;
use crate::catalog::CatalogFile;
use crate::model::{
    ConnectedNetwork, ContextPair, DeviceId, DeviceProfile, FunctionType, MovingStatus, Objective,
    Preference, Registration, Tier,
};

use super::SimError;

pub const DEFAULT_SOC_THRESHOLD_PERCENT: u8 = 20;
pub const DEFAULT_DEBOUNCE_S: f64 = 10.0;
pub const DEFAULT_SAMPLE_INTERVAL_S: f64 = 60.0;

fn full() -> f64 {
    100.0
}

fn yes() -> bool {
    true
}

fn default_threshold() -> u8 {
    DEFAULT_SOC_THRESHOLD_PERCENT
}

fn default_debounce() -> f64 {
    DEFAULT_DEBOUNCE_S
}

fn default_sample() -> f64 {
    DEFAULT_SAMPLE_INTERVAL_S
}

/// A device together with its initial runtime state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimDevice {
    #[serde(flatten)]
    pub profile: DeviceProfile,
    #[serde(default = "full")]
    pub initial_soc_percent: f64,
    /// Hours a full battery lasts on background load alone, drained linearly.
    /// `None` means no background drain.
    #[serde(default)]
    pub baseline_lifetime_h: Option<f64>,
    #[serde(default)]
    pub moving: MovingStatus,
    #[serde(default)]
    pub charging: bool,
    /// Charger input while `charging` is set.
    #[serde(default)]
    pub charge_power_mw: f64,
    #[serde(default)]
    pub connected_network: Option<ConnectedNetwork>,
    #[serde(default, rename = "avg_link_speed_Bps")]
    pub avg_link_speed_bps: f64,
    /// Absent devices join later through a scripted event.
    #[serde(default = "yes")]
    pub present: bool,
}

impl SimDevice {
    pub fn new(profile: DeviceProfile) -> Self {
        Self {
            profile,
            initial_soc_percent: 100.0,
            baseline_lifetime_h: None,
            moving: MovingStatus::Still,
            charging: false,
            charge_power_mw: 0.0,
            connected_network: None,
            avg_link_speed_bps: 0.0,
            present: true,
        }
    }

    /// Background power in mW implied by the linear full-battery lifetime.
    pub fn baseline_power_mw(&self) -> f64 {
        match self.baseline_lifetime_h {
            Some(h) if self.profile.tier == Tier::Tier1 => {
                self.profile.capacity_joules() * 1000.0 / (h * 3600.0)
            }
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimedRegistration {
    #[serde(flatten)]
    pub registration: Registration,
    #[serde(default)]
    pub start_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScriptChange {
    Activity {
        moving: MovingStatus,
    },
    Network {
        network: Option<ConnectedNetwork>,
        #[serde(default, rename = "avg_link_speed_Bps")]
        avg_link_speed_bps: f64,
    },
    /// Tariff change on one of the device's networks, e.g. a data cap hit.
    MonetaryCost {
        network_id: String,
        #[serde(rename = "cost_per_MB")]
        cost_per_mb: f64,
    },
    Charging {
        charging: bool,
        #[serde(default)]
        power_mw: Option<f64>,
    },
    Join,
    Leave,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptEvent {
    pub t_s: f64,
    pub device: DeviceId,
    #[serde(flatten)]
    pub change: ScriptChange,
}

/// Context-dependent device preference for one function type, used by the
/// Quality objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityRule {
    pub function_type: FunctionType,
    #[serde(default)]
    pub when: Option<ContextPair>,
    pub preferred: Vec<DeviceId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Strategy {
    /// Context-aware allocation with the greedy solver, including protocol
    /// and group-formation overheads.
    #[default]
    Afv,
    /// Everything runs on one device while it is alive.
    Pinned { device: DeviceId },
    /// Every request runs on its origin device.
    All,
    /// One randomly chosen device per function type, drawn from `rng_seed`.
    Manual,
}

impl Strategy {
    pub fn coordinated(self) -> bool {
        self == Strategy::Afv
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub devices: Vec<SimDevice>,
    #[serde(default)]
    pub registrations: Vec<TimedRegistration>,
    #[serde(default)]
    pub preferences: Vec<Preference>,
    #[serde(default)]
    pub objective: Objective,
    #[serde(default)]
    pub quality_rules: Vec<QualityRule>,
    #[serde(default)]
    pub context_script: Vec<ScriptEvent>,
    #[serde(default = "default_threshold")]
    pub soc_threshold_percent: u8,
    #[serde(default = "default_debounce")]
    pub debounce_s: f64,
    pub horizon_s: f64,
    #[serde(default)]
    pub rng_seed: u64,
    #[serde(default)]
    pub strategy: Strategy,
    #[serde(default)]
    pub master_rule: MasterRule,
    #[serde(default = "yes")]
    pub include_message_energy: bool,
    /// Context messages raised within this window are sent together. Zero
    /// sends each one immediately.
    #[serde(default)]
    pub batching_window_s: f64,
    #[serde(default = "default_sample")]
    pub sample_interval_s: f64,
    /// Scenario-local catalog entries, e.g. for device kinds outside the
    /// measured set.
    #[serde(default)]
    pub catalog_extra: Option<CatalogFile>,
}

impl Scenario {
    pub fn new(devices: Vec<SimDevice>, horizon_s: f64) -> Self {
        Self {
            devices,
            registrations: vec![],
            preferences: vec![],
            objective: Objective::default(),
            quality_rules: vec![],
            context_script: vec![],
            soc_threshold_percent: DEFAULT_SOC_THRESHOLD_PERCENT,
            debounce_s: DEFAULT_DEBOUNCE_S,
            horizon_s,
            rng_seed: 0,
            strategy: Strategy::Afv,
            master_rule: MasterRule::default(),
            include_message_energy: true,
            batching_window_s: 0.0,
            sample_interval_s: DEFAULT_SAMPLE_INTERVAL_S,
            catalog_extra: None,
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self, SimError> {
        let scenario: Scenario =
            serde_json::from_str(text).map_err(|e| SimError::InvalidScenario(e.to_string()))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn device(&self, id: DeviceId) -> Option<&SimDevice> {
        self.devices.iter().find(|d| d.profile.device_id == id)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::InvalidScenario(msg));
        if !(self.horizon_s.is_finite() && self.horizon_s > 0.0) {
            return bad(format!("horizon {} must be positive", self.horizon_s));
        }
        if self.soc_threshold_percent == 0 || self.soc_threshold_percent >= 100 {
            return bad("soc threshold must lie strictly between 0 and 100".into());
        }
        if !(self.debounce_s >= 0.0) || !(self.batching_window_s >= 0.0) {
            return bad("debounce and batching window must be non-negative".into());
        }
        if !(self.sample_interval_s > 0.0) {
            return bad("sample interval must be positive".into());
        }
        let mut ids = BTreeSet::new();
        for dev in &self.devices {
            let p = &dev.profile;
            p.validate()
                .map_err(|e| SimError::InvalidScenario(e.to_string()))?;
            if !ids.insert(p.device_id) {
                return bad(format!("duplicate device id {}", p.device_id));
            }
            if !(0.0..=100.0).contains(&dev.initial_soc_percent) {
                return bad(format!("device {} initial soc out of range", p.device_id));
            }
            if let Some(h) = dev.baseline_lifetime_h {
                if !(h.is_finite() && h > 0.0) {
                    return bad(format!("device {} lifetime must be positive", p.device_id));
                }
            }
            if !(dev.charge_power_mw >= 0.0) {
                return bad(format!("device {} charge power negative", p.device_id));
            }
        }
        for dev in &self.devices {
            if let Some(host) = dev.profile.paired_host {
                match self.device(host) {
                    Some(h) if h.profile.tier == Tier::Tier1 => {}
                    _ => return bad(format!("device {host} is not a tier-1 host")),
                }
            }
        }
        let mut reg_ids = BTreeSet::new();
        for tr in &self.registrations {
            let r = &tr.registration;
            r.validate()
                .map_err(|e| SimError::InvalidScenario(e.to_string()))?;
            if !reg_ids.insert(r.id) {
                return bad(format!("duplicate registration id {}", r.id));
            }
            match self.device(r.origin_device) {
                Some(d) if d.profile.tier == Tier::Tier1 => {}
                _ => {
                    return bad(format!(
                        "registration {} originates at unknown or tier-2 device",
                        r.id
                    ))
                }
            }
            if !(tr.start_s >= 0.0) {
                return bad(format!("registration {} starts before 0", r.id));
            }
        }
        let mut last = 0.0;
        for ev in &self.context_script {
            if !(ev.t_s >= last) {
                return bad("context script times must be non-negative and sorted".into());
            }
            last = ev.t_s;
            if self.device(ev.device).is_none() {
                return bad(format!("script references unknown device {}", ev.device));
            }
        }
        for p in &self.preferences {
            p.validate()
                .map_err(|e| SimError::InvalidScenario(e.to_string()))?;
        }
        if let Strategy::Pinned { device } = self.strategy {
            if self.device(device).is_none() {
                return bad(format!("strategy pins unknown device {device}"));
            }
        }
        Ok(())
    }
}

//! Turns device, user and application preferences plus the current context
//! into the binary mappability matrix consumed by the allocator.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::model::{
    ContextPair, ContextSnapshot, DeviceId, DeviceProfile, FunctionCategory, MovingStatus,
    Preference, PreferenceScope, PreferenceSubject, Registration, RegistrationId,
};

/// Rule value that matches every context value.
pub const ANY: &str = "any";

/// Context names understood by preference rules and forced mappings.
pub const CONTEXT_CONNECTIVITY: &str = "connectivity";
pub const CONTEXT_NETWORK: &str = "network";
pub const CONTEXT_CHARGING: &str = "charging";
pub const CONTEXT_MOVING: &str = "moving";

pub const KNOWN_CONTEXTS: [&str; 4] = [
    CONTEXT_CONNECTIVITY,
    CONTEXT_NETWORK,
    CONTEXT_CHARGING,
    CONTEXT_MOVING,
];

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum PreferenceError {
    #[error("preference references unknown {0}")]
    UnknownReference(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappabilityMatrix {
    pub registrations: Vec<RegistrationId>,
    pub devices: Vec<DeviceId>,
    /// `rows[r][d]` is m_{r,d}.
    pub rows: Vec<Vec<bool>>,
}

impl MappabilityMatrix {
    pub fn get(&self, registration: RegistrationId, device: DeviceId) -> Option<bool> {
        let r = self.registrations.iter().position(|&x| x == registration)?;
        let d = self.devices.iter().position(|&x| x == device)?;
        Some(self.rows[r][d])
    }

    pub fn row(&self, registration: RegistrationId) -> Option<&[bool]> {
        let r = self.registrations.iter().position(|&x| x == registration)?;
        Some(&self.rows[r])
    }

    /// Registrations that no device can serve. Callers drop these from the
    /// allocation problem.
    pub fn infeasible(&self) -> Vec<RegistrationId> {
        self.registrations
            .iter()
            .zip(&self.rows)
            .filter(|(_, row)| !row.iter().any(|&m| m))
            .map(|(&id, _)| id)
            .collect()
    }
}

/// Context values as seen by the decision engine.
#[derive(Debug, Clone, Copy)]
pub struct ContextView<'a> {
    devices: &'a [DeviceProfile],
    snapshots: &'a [ContextSnapshot],
}

impl<'a> ContextView<'a> {
    pub fn new(devices: &'a [DeviceProfile], snapshots: &'a [ContextSnapshot]) -> Self {
        Self { devices, snapshots }
    }

    fn snapshot(&self, device: DeviceId) -> Option<&'a ContextSnapshot> {
        let profile = self.devices.iter().find(|d| d.device_id == device);
        // Tier-2 devices share their host's context.
        let id = profile.and_then(|p| p.paired_host).unwrap_or(device);
        self.snapshots.iter().find(|s| s.device_id == id)
    }

    /// User activity: the first non-still status reported, in device order.
    pub fn user_activity(&self) -> MovingStatus {
        let mut snaps: Vec<_> = self.snapshots.iter().collect();
        snaps.sort_by_key(|s| s.device_id);
        snaps
            .into_iter()
            .map(|s| s.moving)
            .find(|&m| m != MovingStatus::Still)
            .unwrap_or(MovingStatus::Still)
    }

    /// Current value of a named context as observed for `device`.
    pub fn value(&self, name: &str, device: DeviceId) -> String {
        if name == CONTEXT_MOVING {
            return self.user_activity().name().to_string();
        }
        let Some(snap) = self.snapshot(device) else {
            return "unknown".into();
        };
        match name {
            CONTEXT_CONNECTIVITY => snap
                .connected_network
                .as_ref()
                .map(|n| n.network_kind.to_string())
                .unwrap_or_else(|| "none".into()),
            CONTEXT_NETWORK => snap
                .connected_network
                .as_ref()
                .map(|n| n.network_id.clone())
                .unwrap_or_else(|| "none".into()),
            CONTEXT_CHARGING => snap.charging.to_string(),
            _ => "unknown".into(),
        }
    }

    pub fn matches(&self, pair: &ContextPair, device: DeviceId) -> bool {
        pair.value == ANY || self.value(&pair.name, device) == pair.value
    }
}

// Network rules only constrain functions that actually use a network.
fn rule_applies(name: &str, registration: &Registration) -> bool {
    match name {
        CONTEXT_CONNECTIVITY | CONTEXT_NETWORK => {
            registration.function_type.category() == FunctionCategory::Connectivity
        }
        _ => true,
    }
}

fn check_references(
    registrations: &[Registration],
    preferences: &[Preference],
    devices: &[DeviceProfile],
) -> Result<(), PreferenceError> {
    let device_ids: BTreeSet<_> = devices.iter().map(|d| d.device_id).collect();
    let apps: BTreeSet<_> = registrations.iter().map(|r| r.app_id.as_str()).collect();
    let known_context = |name: &str| KNOWN_CONTEXTS.contains(&name);
    for pref in preferences {
        pref.validate()
            .map_err(|e| PreferenceError::UnknownReference(e.to_string()))?;
        match &pref.subject {
            PreferenceSubject::Device(id) if !device_ids.contains(id) => {
                return Err(PreferenceError::UnknownReference(format!("device {id}")));
            }
            PreferenceSubject::App(app) if !apps.contains(app.as_str()) => {
                return Err(PreferenceError::UnknownReference(format!("app `{app}`")));
            }
            _ => {}
        }
        if let Some(rule) = pref.rules.iter().find(|r| !known_context(&r.name)) {
            return Err(PreferenceError::UnknownReference(format!(
                "context `{}`",
                rule.name
            )));
        }
    }
    for reg in registrations {
        if !device_ids.contains(&reg.origin_device) {
            return Err(PreferenceError::UnknownReference(format!(
                "origin device {} of registration {}",
                reg.origin_device, reg.id
            )));
        }
        for forced in &reg.forced_mapping {
            if !device_ids.contains(&forced.device) {
                return Err(PreferenceError::UnknownReference(format!(
                    "forced device {}",
                    forced.device
                )));
            }
            if !known_context(&forced.when.name) {
                return Err(PreferenceError::UnknownReference(format!(
                    "context `{}`",
                    forced.when.name
                )));
            }
        }
    }
    Ok(())
}

/// Effective rules for serving `registration` on `device`. A higher-priority
/// scope replaces a lower one on the same context name.
fn effective_rules<'p>(
    registration: &Registration,
    device: DeviceId,
    preferences: &'p [Preference],
) -> BTreeMap<&'p str, (u8, &'p str)> {
    let mut rules: BTreeMap<&str, (u8, &str)> = BTreeMap::new();
    for pref in preferences {
        let applies = match (&pref.scope, &pref.subject) {
            (PreferenceScope::Application, PreferenceSubject::App(app)) => {
                *app == registration.app_id
            }
            (PreferenceScope::User, _) => true,
            (PreferenceScope::Device, PreferenceSubject::Device(id)) => *id == device,
            _ => false,
        };
        if !applies {
            continue;
        }
        let priority = pref.scope.priority();
        for rule in &pref.rules {
            let replace = rules
                .get(rule.name.as_str())
                .is_none_or(|&(existing, _)| priority >= existing);
            if replace {
                rules.insert(rule.name.as_str(), (priority, rule.value.as_str()));
            }
        }
    }
    rules
}

/// Computes m_{r,d} for every registration and device.
pub fn apply_preferences(
    registrations: &[Registration],
    preferences: &[Preference],
    devices: &[DeviceProfile],
    contexts: &[ContextSnapshot],
) -> Result<MappabilityMatrix, PreferenceError> {
    check_references(registrations, preferences, devices)?;
    let view = ContextView::new(devices, contexts);

    let rows = registrations
        .iter()
        .map(|reg| {
            let pinned = reg
                .forced_mapping
                .iter()
                .find(|f| view.matches(&f.when, f.device))
                .map(|f| f.device);
            devices
                .iter()
                .map(|dev| {
                    if !dev.implements(reg.function_type) {
                        return false;
                    }
                    if pinned.is_some_and(|p| p != dev.device_id) {
                        return false;
                    }
                    effective_rules(reg, dev.device_id, preferences)
                        .into_iter()
                        .filter(|(name, _)| rule_applies(name, reg))
                        .all(|(name, (_, allowed))| {
                            allowed == ANY || view.value(name, dev.device_id) == allowed
                        })
                })
                .collect()
        })
        .collect();

    Ok(MappabilityMatrix {
        registrations: registrations.iter().map(|r| r.id).collect(),
        devices: devices.iter().map(|d| d.device_id).collect(),
        rows,
    })
}

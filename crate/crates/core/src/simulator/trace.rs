use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::allocator::{Assignment, FapInstance};
use crate::model::{DeviceId, FunctionType, RegistrationId};

use super::monitor::ContextChange;
use super::scenario::Strategy;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SocSample {
    pub t_s: f64,
    pub device_id: DeviceId,
    pub soc_percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceEvent {
    GroupFormation {
        t_s: f64,
        participants: Vec<DeviceId>,
        energy_mj: f64,
    },
    MasterElected {
        t_s: f64,
        device: DeviceId,
    },
    Context {
        t_s: f64,
        device: DeviceId,
        change: ContextChange,
    },
    RegistrationArrived {
        t_s: f64,
        registration: RegistrationId,
    },
    /// No device may serve the registration under the current context.
    Unservable {
        t_s: f64,
        registration: RegistrationId,
    },
    Allocation {
        t_s: f64,
        function_type: FunctionType,
        strategy: Strategy,
        instance: FapInstance,
        assignment: Assignment,
    },
    Message {
        t_s: f64,
        from: DeviceId,
        to: DeviceId,
        message_type: String,
        wire_size: usize,
        sender_energy_mj: f64,
        receiver_energy_mj: f64,
    },
    Joined {
        t_s: f64,
        device: DeviceId,
    },
    Left {
        t_s: f64,
        device: DeviceId,
    },
    Depleted {
        t_s: f64,
        device: DeviceId,
    },
}

/// Where each device's energy went, in mJ.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub initial_mj: f64,
    pub final_mj: f64,
    pub baseline_mj: f64,
    pub function_mj: f64,
    pub message_mj: f64,
    pub init_mj: f64,
    pub charged_mj: f64,
}

impl EnergyLedger {
    pub fn consumed_mj(&self) -> f64 {
        self.baseline_mj + self.function_mj + self.message_mj + self.init_mj
    }

    /// Relative error of `final = initial - consumed + charged`.
    pub fn balance_error(&self) -> f64 {
        let expected = self.initial_mj - self.consumed_mj() + self.charged_mj;
        (self.final_mj - expected).abs() / self.initial_mj.abs().max(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub horizon_s: f64,
    pub samples: Vec<SocSample>,
    pub events: Vec<TraceEvent>,
    /// Time of depletion, or the horizon for devices that survive it.
    pub uptime_s: BTreeMap<DeviceId, f64>,
    /// Minimum uptime over tier-1 devices.
    pub system_uptime_s: f64,
    pub ledger: BTreeMap<DeviceId, EnergyLedger>,
}

impl Trace {
    pub fn samples_for(&self, device: DeviceId) -> impl Iterator<Item = &SocSample> {
        self.samples.iter().filter(move |s| s.device_id == device)
    }

    pub fn allocations(
        &self,
    ) -> impl Iterator<Item = (f64, FunctionType, &FapInstance, &Assignment)> {
        self.events.iter().filter_map(|e| match e {
            TraceEvent::Allocation {
                t_s,
                function_type,
                instance,
                assignment,
                ..
            } => Some((*t_s, *function_type, instance, assignment)),
            _ => None,
        })
    }

    /// Devices executing `function` right after each allocation.
    pub fn executors(&self, function: FunctionType) -> Vec<(f64, Vec<DeviceId>)> {
        self.allocations()
            .filter(|(_, f, _, _)| *f == function)
            .map(|(t, _, inst, a)| {
                let devices = inst
                    .devices
                    .iter()
                    .zip(&a.open)
                    .filter(|(_, &open)| open)
                    .map(|(&d, _)| d)
                    .collect();
                (t, devices)
            })
            .collect()
    }

    pub fn message_count(&self) -> usize {
        self.events
            .iter()
            .filter(|e| matches!(e, TraceEvent::Message { .. }))
            .count()
    }

    pub fn group_formation_energy_mj(&self) -> f64 {
        self.events
            .iter()
            .filter_map(|e| match e {
                TraceEvent::GroupFormation { energy_mj, .. } => Some(*energy_mj),
                _ => None,
            })
            .sum()
    }
}

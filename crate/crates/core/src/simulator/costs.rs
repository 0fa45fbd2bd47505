//! Per-function-type allocation instances under each objective, together
//! with the energy the chosen assignment actually costs.

use crate::aggregation::aggregate_requests;
use crate::allocator::{Assignment, FapInstance};
use crate::catalog::EnergyCatalog;
use crate::model::{
    ConnectedNetwork, DeviceId, DeviceProfile, FunctionCategory, FunctionType, NetworkKind,
    ObjectiveMode, Registration, Tier,
};
use crate::preferences::ContextView;

use super::scenario::QualityRule;
use super::SimError;

/// Cost of a remote delivery under the Quality objective: small enough to
/// only break ties between equally preferred devices.
pub const QUALITY_REMOTE_PENALTY: f64 = 1e-3;

/// Runtime view of one candidate device.
#[derive(Debug, Clone)]
pub struct Candidate<'a> {
    pub profile: &'a DeviceProfile,
    /// Tier-1 device that carries this device's costs: itself, or the host of
    /// a tier-2 device.
    pub carrier: &'a DeviceProfile,
    pub soc_percent: u8,
    pub connected_network: Option<&'a ConnectedNetwork>,
    pub link_speed_bps: f64,
    /// Monetary cost per MB of the connected network.
    pub cost_per_mb: f64,
}

#[derive(Debug, Clone)]
pub struct CostInputs<'a> {
    pub catalog: &'a EnergyCatalog,
    pub mode: ObjectiveMode,
    /// Energy mode only: devices at or below this SoC are avoided while an
    /// alternative exists.
    pub soc_threshold: Option<u8>,
    pub quality_rules: &'a [QualityRule],
    pub context: ContextView<'a>,
}

/// One function type's allocation problem. Energy figures are per `period_s`.
#[derive(Debug, Clone)]
pub struct TypeProblem {
    pub function_type: FunctionType,
    pub instance: FapInstance,
    pub period_s: f64,
    pub energy_impl_mj: Vec<f64>,
    pub energy_comm_mj: Vec<Vec<f64>>,
    pub carriers: Vec<DeviceId>,
}

impl TypeProblem {
    /// Average power each carrier spends on this function under `assignment`.
    pub fn loads_mw(&self, assignment: &Assignment) -> Vec<(DeviceId, f64)> {
        let mut loads = Vec::new();
        for (d, &open) in assignment.open.iter().enumerate() {
            if open {
                loads.push((self.carriers[d], self.energy_impl_mj[d] / self.period_s));
            }
        }
        for (r, &d) in assignment.assigned.iter().enumerate() {
            loads.push((self.carriers[d], self.energy_comm_mj[r][d] / self.period_s));
        }
        loads
    }
}

fn uses_network(function: FunctionType) -> bool {
    function.category() == FunctionCategory::Connectivity
}

/// Builds the instance for `members`, all of one function type.
/// `mappable[r][d]` already reflects capability and preferences.
pub fn build_type_problem(
    inputs: &CostInputs<'_>,
    members: &[&Registration],
    candidates: &[Candidate<'_>],
    mut mappable: Vec<Vec<bool>>,
) -> Result<TypeProblem, SimError> {
    let function_type = members[0].function_type;
    let owned: Vec<Registration> = members.iter().map(|&r| r.clone()).collect();
    let group = aggregate_requests(&owned)
        .into_iter()
        .next()
        .expect("members are non-empty");
    let period_s = group.report_interval_s;
    let catalog = inputs.catalog;
    let nd = candidates.len();

    // Real energy per aggregated period.
    let mut energy_impl_mj = vec![0.0; nd];
    let mut energy_comm_mj = vec![vec![0.0; nd]; members.len()];
    for (d, cand) in candidates.iter().enumerate() {
        if !cand.profile.implements(function_type) {
            continue;
        }
        let carrier_kind = cand.carrier.device_kind;
        if cand.profile.tier == Tier::Tier2 {
            // The host pulls one report per period over Bluetooth.
            energy_impl_mj[d] = catalog.transfer_energy(
                carrier_kind,
                NetworkKind::Bluetooth,
                group.payload_bytes_per_report,
            )?;
        } else {
            energy_impl_mj[d] = catalog.implementation_energy(
                cand.profile.device_kind,
                function_type,
                group.speed(),
                period_s,
            )?;
        }
        for (r, reg) in members.iter().enumerate() {
            let reports = period_s / reg.report_interval_s;
            let local = reg.origin_device == cand.carrier.device_id;
            let per_report = if cand.profile.tier == Tier::Tier2 {
                if local {
                    0.0
                } else {
                    catalog.transfer_energy(
                        carrier_kind,
                        NetworkKind::Bluetooth,
                        reg.payload_bytes_per_report,
                    )?
                }
            } else {
                catalog.delivery_energy(
                    cand.profile.device_kind,
                    function_type,
                    reg.payload_bytes_per_report,
                    local,
                )?
            };
            energy_comm_mj[r][d] = per_report * reports;
        }
    }

    // A connectivity function needs a connected network.
    if uses_network(function_type) {
        for row in mappable.iter_mut() {
            for (d, m) in row.iter_mut().enumerate() {
                *m &= candidates[d].connected_network.is_some();
            }
        }
    }

    if let Some(threshold) = inputs.soc_threshold {
        for row in mappable.iter_mut() {
            let healthy: Vec<bool> = candidates
                .iter()
                .map(|c| c.soc_percent > threshold)
                .collect();
            if row.iter().zip(&healthy).any(|(&m, &h)| m && h) {
                for (m, h) in row.iter_mut().zip(&healthy) {
                    *m &= *h;
                }
            }
        }
    }

    let (impl_cost, comm_cost) = match inputs.mode {
        ObjectiveMode::Energy => (energy_impl_mj.clone(), energy_comm_mj.clone()),
        ObjectiveMode::Monetary => {
            let comm = members
                .iter()
                .map(|reg| {
                    let reports = period_s / reg.report_interval_s;
                    candidates
                        .iter()
                        .map(|c| {
                            if uses_network(function_type) {
                                reg.payload_bytes_per_report as f64 / 1e6 * c.cost_per_mb * reports
                            } else {
                                0.0
                            }
                        })
                        .collect()
                })
                .collect();
            (vec![0.0; nd], comm)
        }
        ObjectiveMode::Quality => {
            let preferred =
                preferred_devices(inputs, function_type, members, candidates, &mappable);
            let imp = candidates
                .iter()
                .map(|c| {
                    if preferred.is_empty() || preferred.contains(&c.profile.device_id) {
                        0.0
                    } else {
                        1.0
                    }
                })
                .collect();
            let comm = members
                .iter()
                .map(|reg| {
                    candidates
                        .iter()
                        .map(|c| {
                            if reg.origin_device == c.carrier.device_id {
                                0.0
                            } else {
                                QUALITY_REMOTE_PENALTY
                            }
                        })
                        .collect()
                })
                .collect();
            (imp, comm)
        }
    };

    // Per-device overrides, in objective units.
    let impl_cost = impl_cost
        .into_iter()
        .zip(candidates)
        .map(|(cost, c)| {
            c.profile
                .implementations
                .iter()
                .find(|i| i.function_type == function_type && i.cost_f > 0.0)
                .map_or(cost, |i| i.cost_f)
        })
        .collect();

    let instance = FapInstance {
        requests: members.iter().map(|r| r.id).collect(),
        devices: candidates.iter().map(|c| c.profile.device_id).collect(),
        impl_cost,
        comm_cost,
        mappable,
        origins: members.iter().map(|r| Some(r.origin_device)).collect(),
    };
    Ok(TypeProblem {
        function_type,
        instance,
        period_s,
        energy_impl_mj,
        energy_comm_mj,
        carriers: candidates.iter().map(|c| c.carrier.device_id).collect(),
    })
}

fn preferred_devices(
    inputs: &CostInputs<'_>,
    function_type: FunctionType,
    members: &[&Registration],
    candidates: &[Candidate<'_>],
    mappable: &[Vec<bool>],
) -> Vec<DeviceId> {
    let anchor = members[0].origin_device;
    let rule = inputs.quality_rules.iter().find(|q| {
        q.function_type == function_type
            && q.when
                .as_ref()
                .is_none_or(|w| inputs.context.matches(w, anchor))
    });
    if let Some(rule) = rule {
        return rule.preferred.clone();
    }
    if uses_network(function_type) {
        // Fastest usable link.
        let usable = |d: usize| mappable.iter().any(|row| row[d]);
        let best = (0..candidates.len())
            .filter(|&d| usable(d))
            .map(|d| candidates[d].link_speed_bps)
            .fold(f64::NEG_INFINITY, f64::max);
        return (0..candidates.len())
            .filter(|&d| usable(d) && candidates[d].link_speed_bps == best)
            .map(|d| candidates[d].profile.device_id)
            .collect();
    }
    Vec::new()
}

use std::collections::BTreeMap;

use crate::allocator::{
    baseline_all, baseline_manual, fap_greedy, select_master, Assignment, MasterCandidate,
};
use crate::catalog::EnergyCatalog;
use crate::model::{
    ConnectedNetwork, ContextSnapshot, DeviceId, FunctionType, MovingStatus, NetworkKind,
    ObjectiveMode, Registration, RegistrationId, Tier,
};
use crate::preferences::{apply_preferences, ContextView};
use crate::protocol::{
    wire_size, AssignmentsMsg, ContextRequestMsg, ContextSensorMsg, WireMessage,
};

use super::costs::{build_type_problem, Candidate, CostInputs};
use super::monitor::{
    context_monitor_step, soc_percent, ContextChange, MonitorConfig, MonitorState, RawContext,
};
use super::scenario::{Scenario, ScriptChange, Strategy};
use super::trace::{EnergyLedger, SocSample, Trace, TraceEvent};
use super::SimError;

/// Below this a battery counts as empty.
const EMPTY_MJ: f64 = 1e-6;

/// Group-formation energy for `n` tier-1 devices, in mJ.
pub fn group_formation_energy_mj(n: usize) -> f64 {
    if n < 2 {
        return 0.0;
    }
    (0.6 * (n - 1) as f64 + 1.8) * 1000.0
}

/// Runs `scenario` to its horizon.
pub fn run(scenario: &Scenario, catalog: &EnergyCatalog) -> Result<Trace, SimError> {
    scenario.validate()?;
    let mut catalog = catalog.clone();
    if let Some(extra) = &scenario.catalog_extra {
        catalog.extend(extra.clone())?;
    }
    Engine::new(scenario, catalog).run()
}

fn to_ms(s: f64) -> u64 {
    (s * 1000.0).round() as u64
}

fn to_s(ms: u64) -> f64 {
    ms as f64 / 1000.0
}

#[derive(Debug, Clone, Copy)]
enum Lump {
    Message,
    Init,
}

#[derive(Debug)]
struct DevState {
    tier: Tier,
    capacity_mj: f64,
    energy_mj: f64,
    baseline_mw: f64,
    load_mw: f64,
    charge_mw: f64,
    charging: bool,
    present: bool,
    depleted_ms: Option<u64>,
    moving: MovingStatus,
    network: Option<ConnectedNetwork>,
    link_speed_bps: f64,
    monitor: Option<MonitorState>,
    ledger: EnergyLedger,
}

impl DevState {
    fn powered(&self) -> bool {
        self.tier == Tier::Tier1 && self.present && self.depleted_ms.is_none()
    }

    fn net_power_mw(&self) -> f64 {
        let inflow = if self.charging { self.charge_mw } else { 0.0 };
        self.baseline_mw + self.load_mw - inflow
    }

    fn soc(&self) -> u8 {
        soc_percent(self.energy_mj, self.capacity_mj)
    }

    fn raw(&self) -> RawContext {
        RawContext {
            soc_percent: self.soc(),
            charging: self.charging,
            moving: self.moving,
            connected_network: self.network.clone(),
        }
    }
}

struct Engine<'a> {
    sc: &'a Scenario,
    catalog: EnergyCatalog,
    cfg: MonitorConfig,
    now: u64,
    devs: Vec<DevState>,
    master: Option<DeviceId>,
    reg_order: Vec<usize>,
    next_reg: usize,
    arrived: Vec<usize>,
    next_script: usize,
    next_sample_ms: u64,
    mapping: BTreeMap<RegistrationId, DeviceId>,
    cost_overrides: BTreeMap<(DeviceId, String), f64>,
    session_devices: Vec<DeviceId>,
    session_requests: Vec<RegistrationId>,
    batch: BTreeMap<DeviceId, Vec<WireMessage>>,
    batch_deadline: Option<u64>,
    dirty: bool,
    events: Vec<TraceEvent>,
    samples: Vec<SocSample>,
}

impl<'a> Engine<'a> {
    fn new(sc: &'a Scenario, catalog: EnergyCatalog) -> Self {
        let cfg = MonitorConfig {
            soc_threshold_percent: sc.soc_threshold_percent,
            debounce_ms: to_ms(sc.debounce_s),
        };
        let devs: Vec<DevState> = sc
            .devices
            .iter()
            .map(|d| {
                let capacity_mj = if d.profile.tier == Tier::Tier1 {
                    d.profile.capacity_joules() * 1000.0
                } else {
                    0.0
                };
                let energy_mj = capacity_mj * d.initial_soc_percent / 100.0;
                let mut st = DevState {
                    tier: d.profile.tier,
                    capacity_mj,
                    energy_mj,
                    baseline_mw: d.baseline_power_mw(),
                    load_mw: 0.0,
                    charge_mw: d.charge_power_mw,
                    charging: d.charging,
                    present: d.present,
                    depleted_ms: None,
                    moving: d.moving,
                    network: d.connected_network.clone(),
                    link_speed_bps: d.avg_link_speed_bps,
                    monitor: None,
                    ledger: EnergyLedger {
                        initial_mj: energy_mj,
                        ..Default::default()
                    },
                };
                if st.powered() {
                    st.monitor = Some(MonitorState::new(&st.raw(), &cfg));
                }
                st
            })
            .collect();
        let mut reg_order: Vec<usize> = (0..sc.registrations.len()).collect();
        reg_order.sort_by(|&a, &b| {
            sc.registrations[a]
                .start_s
                .total_cmp(&sc.registrations[b].start_s)
                .then(
                    sc.registrations[a]
                        .registration
                        .id
                        .cmp(&sc.registrations[b].registration.id),
                )
        });
        let session_devices = sc
            .devices
            .iter()
            .filter(|d| d.present)
            .map(|d| d.profile.device_id)
            .collect();
        Self {
            sc,
            catalog,
            cfg,
            now: 0,
            devs,
            master: None,
            reg_order,
            next_reg: 0,
            arrived: Vec::new(),
            next_script: 0,
            next_sample_ms: 0,
            mapping: BTreeMap::new(),
            cost_overrides: BTreeMap::new(),
            session_devices,
            session_requests: Vec::new(),
            batch: BTreeMap::new(),
            batch_deadline: None,
            dirty: false,
            events: Vec::new(),
            samples: Vec::new(),
        }
    }

    fn coordinated(&self) -> bool {
        self.sc.strategy.coordinated()
    }

    fn idx(&self, id: DeviceId) -> usize {
        self.sc
            .devices
            .iter()
            .position(|d| d.profile.device_id == id)
            .expect("validated device id")
    }

    fn id(&self, i: usize) -> DeviceId {
        self.sc.devices[i].profile.device_id
    }

    /// Tier-1 devices run while powered; tier-2 devices while present and
    /// their host runs.
    fn alive(&self, i: usize) -> bool {
        let st = &self.devs[i];
        match st.tier {
            Tier::Tier1 => st.powered(),
            Tier::Tier2 => {
                st.present
                    && self.sc.devices[i]
                        .profile
                        .paired_host
                        .is_some_and(|h| self.devs[self.idx(h)].powered())
            }
        }
    }

    fn t_s(&self) -> f64 {
        to_s(self.now)
    }

    fn run(mut self) -> Result<Trace, SimError> {
        let horizon = to_ms(self.sc.horizon_s);
        let sample_ms = to_ms(self.sc.sample_interval_s).max(1);
        if self.coordinated() {
            self.form_group();
            self.elect_master();
        }
        self.dirty = true;
        loop {
            self.process_instant()?;
            if self.now >= self.next_sample_ms {
                self.sample();
                self.next_sample_ms = self.now + sample_ms;
            }
            if self.now >= horizon {
                break;
            }
            let next = self.next_event_time(horizon);
            self.advance(next);
            self.now = next;
        }
        if self.samples.last().is_none_or(|s| to_ms(s.t_s) != horizon) {
            self.sample();
        }
        Ok(self.finish(horizon))
    }

    fn process_instant(&mut self) -> Result<(), SimError> {
        self.check_deaths();
        while let Some(ev) = self.sc.context_script.get(self.next_script) {
            if to_ms(ev.t_s) > self.now {
                break;
            }
            self.next_script += 1;
            self.apply_script(ev.device, &ev.change);
        }
        while let Some(&ri) = self.reg_order.get(self.next_reg) {
            if to_ms(self.sc.registrations[ri].start_s) > self.now {
                break;
            }
            self.next_reg += 1;
            self.arrive(ri);
        }
        for i in 0..self.devs.len() {
            if !self.devs[i].powered() {
                continue;
            }
            let raw = self.devs[i].raw();
            let cfg = self.cfg;
            let now = self.now;
            let changes = match self.devs[i].monitor.as_mut() {
                Some(m) => context_monitor_step(m, &cfg, now, &raw),
                None => continue,
            };
            for change in changes {
                self.context_change(i, change);
            }
        }
        if self.batch_deadline.is_some_and(|d| d <= self.now) {
            self.flush_batch();
        }
        for _ in 0..=self.devs.len() {
            if !self.dirty || self.batch_deadline.is_some() {
                break;
            }
            self.dirty = false;
            self.reallocate()?;
            self.check_deaths();
        }
        Ok(())
    }

    fn next_event_time(&self, horizon: u64) -> u64 {
        let mut next = horizon;
        let mut consider = |t: u64| {
            if t > self.now && t < next {
                next = t;
            }
        };
        if let Some(ev) = self.sc.context_script.get(self.next_script) {
            consider(to_ms(ev.t_s));
        }
        if let Some(&ri) = self.reg_order.get(self.next_reg) {
            consider(to_ms(self.sc.registrations[ri].start_s));
        }
        consider(self.next_sample_ms);
        if let Some(d) = self.batch_deadline {
            consider(d);
        }
        let threshold = f64::from(self.sc.soc_threshold_percent) / 100.0;
        let after = |dt_s: f64| -> u64 {
            let dt = (dt_s * 1000.0).ceil().max(1.0);
            if dt >= (horizon - self.now) as f64 {
                horizon
            } else {
                self.now + dt as u64
            }
        };
        for st in &self.devs {
            if !st.powered() {
                continue;
            }
            let Some(monitor) = &st.monitor else { continue };
            if let Some(deadline) = monitor.debounce_deadline(&self.cfg) {
                consider(deadline);
            }
            let p = st.net_power_mw();
            let target = threshold * st.capacity_mj;
            if p > 0.0 {
                consider(after(st.energy_mj / p));
                if !monitor.below_threshold() && st.energy_mj > target {
                    consider(after((st.energy_mj - target) / p));
                }
            } else if p < 0.0 && monitor.below_threshold() && st.energy_mj < st.capacity_mj {
                let gap = (target - st.energy_mj).max(0.0);
                let dt = ((gap / -p) * 1000.0).floor() + 1.0;
                consider(after(dt / 1000.0));
            }
        }
        next
    }

    /// Linear drain (or charge) of every powered device up to `to`.
    fn advance(&mut self, to: u64) {
        let dt_s = to_s(to - self.now);
        for st in &mut self.devs {
            if !st.powered() {
                continue;
            }
            let mut base = st.baseline_mw * dt_s;
            let mut func = st.load_mw * dt_s;
            let mut inflow = if st.charging {
                st.charge_mw * dt_s
            } else {
                0.0
            };
            let mut next = st.energy_mj - base - func + inflow;
            if next > st.capacity_mj {
                inflow -= next - st.capacity_mj;
                next = st.capacity_mj;
            }
            if next < 0.0 {
                let scale = (st.energy_mj + inflow) / (base + func);
                base *= scale;
                func *= scale;
                next = 0.0;
            }
            st.ledger.baseline_mj += base;
            st.ledger.function_mj += func;
            st.ledger.charged_mj += inflow;
            st.energy_mj = next;
        }
    }

    fn charge_lump(&mut self, i: usize, amount_mj: f64, kind: Lump) -> f64 {
        let st = &mut self.devs[i];
        if !st.powered() {
            return 0.0;
        }
        let actual = amount_mj.min(st.energy_mj).max(0.0);
        st.energy_mj -= actual;
        match kind {
            Lump::Message => st.ledger.message_mj += actual,
            Lump::Init => st.ledger.init_mj += actual,
        }
        actual
    }

    fn check_deaths(&mut self) {
        let mut master_died = false;
        for i in 0..self.devs.len() {
            if self.devs[i].powered() && self.devs[i].energy_mj <= EMPTY_MJ {
                self.devs[i].depleted_ms = Some(self.now);
                self.dirty = true;
                let device = self.id(i);
                self.events.push(TraceEvent::Depleted {
                    t_s: self.t_s(),
                    device,
                });
                master_died |= self.master == Some(device);
            }
        }
        if master_died && self.coordinated() {
            self.master = None;
            self.elect_master();
        }
    }

    fn tier1_alive(&self) -> Vec<usize> {
        (0..self.devs.len())
            .filter(|&i| self.devs[i].powered())
            .collect()
    }

    fn form_group(&mut self) {
        let participants = self.tier1_alive();
        let total = group_formation_energy_mj(participants.len());
        if total == 0.0 {
            return;
        }
        let share = total / participants.len() as f64;
        for &i in &participants {
            self.charge_lump(i, share, Lump::Init);
        }
        self.events.push(TraceEvent::GroupFormation {
            t_s: self.t_s(),
            participants: participants.iter().map(|&i| self.id(i)).collect(),
            energy_mj: total,
        });
    }

    fn elect_master(&mut self) {
        let candidates: Vec<MasterCandidate> = self
            .tier1_alive()
            .into_iter()
            .map(|i| {
                let st = &self.devs[i];
                MasterCandidate {
                    device_id: self.id(i),
                    soc_percent: 100.0 * st.energy_mj / st.capacity_mj,
                    avg_power_mw: st.baseline_mw + st.load_mw,
                }
            })
            .collect();
        let elected = select_master(&candidates, self.sc.master_rule).ok();
        if let Some(device) = elected.filter(|_| elected != self.master) {
            self.events.push(TraceEvent::MasterElected {
                t_s: self.t_s(),
                device,
            });
        }
        self.master = elected;
    }

    fn apply_script(&mut self, device: DeviceId, change: &ScriptChange) {
        let i = self.idx(device);
        match change {
            ScriptChange::Activity { moving } => self.devs[i].moving = *moving,
            ScriptChange::Network {
                network,
                avg_link_speed_bps,
            } => {
                self.devs[i].network = network.clone();
                self.devs[i].link_speed_bps = *avg_link_speed_bps;
            }
            ScriptChange::MonetaryCost {
                network_id,
                cost_per_mb,
            } => {
                self.cost_overrides
                    .insert((device, network_id.clone()), *cost_per_mb);
                if self.devs[i].powered() {
                    self.context_change(
                        i,
                        ContextChange::MonetaryCost {
                            network_id: network_id.clone(),
                            cost_per_mb: *cost_per_mb,
                        },
                    );
                }
            }
            ScriptChange::Charging { charging, power_mw } => {
                self.devs[i].charging = *charging;
                if let Some(p) = power_mw {
                    self.devs[i].charge_mw = *p;
                }
            }
            ScriptChange::Join => {
                if self.devs[i].present {
                    return;
                }
                self.devs[i].present = true;
                if !self.session_devices.contains(&device) {
                    self.session_devices.push(device);
                }
                if self.devs[i].powered() {
                    let raw = self.devs[i].raw();
                    self.devs[i].monitor = Some(MonitorState::new(&raw, &self.cfg));
                }
                self.events.push(TraceEvent::Joined {
                    t_s: self.t_s(),
                    device,
                });
                self.membership_changed();
            }
            ScriptChange::Leave => {
                if !self.devs[i].present {
                    return;
                }
                self.devs[i].present = false;
                self.devs[i].load_mw = 0.0;
                self.events.push(TraceEvent::Left {
                    t_s: self.t_s(),
                    device,
                });
                if self.master == Some(device) {
                    self.master = None;
                }
                self.membership_changed();
            }
        }
    }

    fn membership_changed(&mut self) {
        self.dirty = true;
        if self.coordinated() {
            self.form_group();
            if self.master.is_none() {
                self.elect_master();
            }
        }
    }

    fn arrive(&mut self, ri: usize) {
        let reg = &self.sc.registrations[ri].registration;
        self.arrived.push(ri);
        self.session_requests.push(reg.id);
        self.dirty = true;
        self.events.push(TraceEvent::RegistrationArrived {
            t_s: self.t_s(),
            registration: reg.id,
        });
        let origin = reg.origin_device;
        if let Some(master) = self.master {
            if origin != master && self.devs[self.idx(origin)].powered() {
                let msg = WireMessage::ContextRequest(ContextRequestMsg {
                    request_type: reg.function_type.code(),
                    info: reg.app_id.as_bytes().to_vec(),
                });
                self.send(origin, master, &[msg]);
            }
        }
    }

    fn context_change(&mut self, i: usize, change: ContextChange) {
        let device = self.id(i);
        self.events.push(TraceEvent::Context {
            t_s: self.t_s(),
            device,
            change,
        });
        self.dirty = true;
        let Some(master) = self.master else { return };
        if !self.coordinated() || device == master {
            return;
        }
        let msg = WireMessage::ContextSensor(self.context_sensor_msg(i));
        if self.sc.batching_window_s > 0.0 {
            self.batch.entry(device).or_default().push(msg);
            if self.batch_deadline.is_none() {
                self.batch_deadline = Some(self.now + to_ms(self.sc.batching_window_s));
            }
        } else {
            self.send(device, master, &[msg]);
        }
    }

    fn context_sensor_msg(&self, i: usize) -> ContextSensorMsg {
        let st = &self.devs[i];
        let monitor = st.monitor.as_ref();
        let network = monitor.and_then(|m| m.connected_network()).cloned();
        ContextSensorMsg {
            device_id: self.id(i),
            battery_level: st.soc(),
            charging: monitor.map_or(st.charging, |m| m.charging()),
            moving: monitor.map_or(st.moving, |m| m.moving()),
            network_kind: network.as_ref().map(|n| n.network_kind),
            net_id: network
                .map(|n| n.network_id.into_bytes())
                .unwrap_or_default(),
            avg_link_speed: st.link_speed_bps as f32,
        }
    }

    fn flush_batch(&mut self) {
        self.batch_deadline = None;
        let batch = std::mem::take(&mut self.batch);
        let Some(master) = self.master else { return };
        for (device, msgs) in batch {
            if self.devs[self.idx(device)].powered() {
                self.send(device, master, &msgs);
            }
        }
        self.dirty = true;
    }

    /// One Bluetooth burst carrying `msgs`, charged to both ends.
    fn send(&mut self, from: DeviceId, to: DeviceId, msgs: &[WireMessage]) {
        let (fi, ti) = (self.idx(from), self.idx(to));
        if !self.devs[fi].powered() || !self.devs[ti].powered() {
            return;
        }
        let size: usize = msgs.iter().map(wire_size).sum();
        let cost = |i: usize| {
            self.catalog
                .transfer_energy(
                    self.sc.devices[i].profile.device_kind,
                    NetworkKind::Bluetooth,
                    size as u64,
                )
                .unwrap_or(0.0)
        };
        let (mut sender, mut receiver) = (cost(fi), cost(ti));
        if self.sc.include_message_energy {
            sender = self.charge_lump(fi, sender, Lump::Message);
            receiver = self.charge_lump(ti, receiver, Lump::Message);
        } else {
            sender = 0.0;
            receiver = 0.0;
        }
        let names: Vec<String> = msgs
            .iter()
            .map(|m| format!("{:?}", m.message_type()))
            .collect();
        self.events.push(TraceEvent::Message {
            t_s: self.t_s(),
            from,
            to,
            message_type: names.join("+"),
            wire_size: size,
            sender_energy_mj: sender,
            receiver_energy_mj: receiver,
        });
    }

    fn snapshots(&self) -> Vec<ContextSnapshot> {
        self.tier1_alive()
            .into_iter()
            .map(|i| {
                let st = &self.devs[i];
                let m = st.monitor.as_ref();
                ContextSnapshot {
                    device_id: self.id(i),
                    battery_soc_percent: st.soc(),
                    charging: m.map_or(st.charging, |m| m.charging()),
                    moving: m.map_or(st.moving, |m| m.moving()),
                    connected_network: m.and_then(|m| m.connected_network()).cloned(),
                    avg_link_speed_bps: st.link_speed_bps,
                }
            })
            .collect()
    }

    fn cost_per_mb(&self, i: usize) -> f64 {
        let id = self.id(i);
        let Some(net) = &self.devs[i].network else {
            return 0.0;
        };
        self.cost_overrides
            .get(&(id, net.network_id.clone()))
            .copied()
            .or_else(|| {
                self.sc.devices[i]
                    .profile
                    .network(&net.network_id)
                    .map(|n| n.monetary_cost_per_mb)
            })
            .unwrap_or(0.0)
    }

    fn reallocate(&mut self) -> Result<(), SimError> {
        let sc = self.sc;
        let alive: Vec<usize> = (0..self.devs.len()).filter(|&i| self.alive(i)).collect();
        let mut active: Vec<&Registration> = self
            .arrived
            .iter()
            .map(|&ri| &sc.registrations[ri].registration)
            .filter(|r| self.devs[self.idx(r.origin_device)].powered())
            .collect();
        active.sort_by_key(|r| r.id);

        let snapshots = self.snapshots();
        let profiles: Vec<_> = sc.devices.iter().map(|d| d.profile.clone()).collect();
        let all_regs: Vec<Registration> = sc
            .registrations
            .iter()
            .map(|t| t.registration.clone())
            .collect();
        let matrix = if self.coordinated() {
            Some(apply_preferences(
                &all_regs,
                &sc.preferences,
                &profiles,
                &snapshots,
            )?)
        } else {
            None
        };

        // Carrier = host for tier-2 devices; its SoC and network apply.
        let carrier_of =
            |i: usize| -> usize { sc.devices[i].profile.paired_host.map_or(i, |h| self.idx(h)) };
        let candidates: Vec<Candidate> = alive
            .iter()
            .map(|&i| {
                let c = carrier_of(i);
                let own_network = self.sc.devices[i].profile.tier == Tier::Tier1;
                Candidate {
                    profile: &sc.devices[i].profile,
                    carrier: &sc.devices[c].profile,
                    soc_percent: self.devs[c].soc(),
                    connected_network: if own_network {
                        self.devs[i].network.as_ref()
                    } else {
                        None
                    },
                    link_speed_bps: self.devs[c].link_speed_bps,
                    cost_per_mb: self.cost_per_mb(i),
                }
            })
            .collect();

        let inputs = CostInputs {
            catalog: &self.catalog,
            mode: sc.objective.mode,
            soc_threshold: (self.coordinated() && sc.objective.mode == ObjectiveMode::Energy)
                .then_some(sc.soc_threshold_percent),
            quality_rules: &sc.quality_rules,
            context: ContextView::new(&profiles, &snapshots),
        };

        let mut by_type: BTreeMap<FunctionType, Vec<&Registration>> = BTreeMap::new();
        for r in active {
            by_type.entry(r.function_type).or_default().push(r);
        }

        let mut loads: BTreeMap<DeviceId, f64> = BTreeMap::new();
        let mut mapping = BTreeMap::new();
        let mut open_pairs: Vec<(FunctionType, DeviceId)> = Vec::new();
        let mut new_events = Vec::new();
        for (ft, mut members) in by_type {
            let problem = loop {
                let mappable: Vec<Vec<bool>> = members
                    .iter()
                    .map(|r| {
                        candidates
                            .iter()
                            .map(|c| {
                                c.profile.implements(ft)
                                    && matrix.as_ref().is_none_or(|m| {
                                        m.get(r.id, c.profile.device_id).unwrap_or(false)
                                    })
                            })
                            .collect()
                    })
                    .collect();
                let problem = build_type_problem(&inputs, &members, &candidates, mappable)?;
                let stuck: Vec<usize> = (0..members.len())
                    .filter(|&r| !problem.instance.mappable[r].iter().any(|&m| m))
                    .collect();
                if stuck.is_empty() {
                    break Some(problem);
                }
                for &r in stuck.iter().rev() {
                    new_events.push(TraceEvent::Unservable {
                        t_s: self.t_s(),
                        registration: members[r].id,
                    });
                    members.remove(r);
                }
                if members.is_empty() {
                    break None;
                }
            };
            let Some(problem) = problem else { continue };
            let inst = &problem.instance;
            let assignment = match sc.strategy {
                Strategy::Afv => fap_greedy(inst)?,
                Strategy::All => baseline_all(inst)?,
                Strategy::Manual => {
                    baseline_manual(inst, sc.rng_seed.wrapping_add(u64::from(ft.code())))?
                }
                Strategy::Pinned { device } => {
                    let fallback = baseline_all(inst)?;
                    let pinned = inst.devices.iter().position(|&d| d == device);
                    let mapped = (0..inst.n_requests())
                        .map(|r| match pinned {
                            Some(p) if inst.mappable[r][p] => p,
                            _ => fallback.assigned[r],
                        })
                        .collect();
                    Assignment::from_mapping(inst, mapped)
                }
            };
            for (d, v) in problem.loads_mw(&assignment) {
                *loads.entry(d).or_default() += v;
            }
            for (r, &d) in assignment.assigned.iter().enumerate() {
                mapping.insert(inst.requests[r], inst.devices[d]);
            }
            for (d, &open) in assignment.open.iter().enumerate() {
                if open {
                    open_pairs.push((ft, inst.devices[d]));
                }
            }
            new_events.push(TraceEvent::Allocation {
                t_s: self.t_s(),
                function_type: ft,
                strategy: sc.strategy,
                instance: problem.instance.clone(),
                assignment,
            });
        }
        self.events.extend(new_events);

        for i in 0..self.devs.len() {
            self.devs[i].load_mw = loads.get(&self.id(i)).copied().unwrap_or(0.0);
        }
        if self.coordinated() && mapping != self.mapping {
            self.broadcast_assignments(&mapping, &open_pairs)?;
        }
        self.mapping = mapping;
        Ok(())
    }

    fn session_index<T: PartialEq>(table: &[T], item: &T) -> Result<u8, SimError> {
        let pos = table
            .iter()
            .position(|x| x == item)
            .expect("session table holds every arrived item");
        u8::try_from(pos)
            .map_err(|_| SimError::InvalidScenario("session index exceeds one byte".into()))
    }

    fn broadcast_assignments(
        &mut self,
        mapping: &BTreeMap<RegistrationId, DeviceId>,
        open_pairs: &[(FunctionType, DeviceId)],
    ) -> Result<(), SimError> {
        let Some(master) = self.master else {
            return Ok(());
        };
        let rd_pairs = mapping
            .iter()
            .map(|(r, d)| {
                Ok((
                    Self::session_index(&self.session_requests, r)?,
                    Self::session_index(&self.session_devices, d)?,
                ))
            })
            .collect::<Result<Vec<_>, SimError>>()?;
        let vd_pairs = open_pairs
            .iter()
            .map(|(f, d)| Ok((f.code(), Self::session_index(&self.session_devices, d)?)))
            .collect::<Result<Vec<_>, SimError>>()?;
        let msg = WireMessage::Assignments(AssignmentsMsg { rd_pairs, vd_pairs });
        for i in self.tier1_alive() {
            let to = self.id(i);
            if to != master {
                self.send(master, to, std::slice::from_ref(&msg));
            }
        }
        Ok(())
    }

    fn sample(&mut self) {
        let t_s = self.t_s();
        for (i, st) in self.devs.iter().enumerate() {
            if st.tier == Tier::Tier1 && (st.present || st.depleted_ms.is_some()) {
                self.samples.push(SocSample {
                    t_s,
                    device_id: self.sc.devices[i].profile.device_id,
                    soc_percent: 100.0 * st.energy_mj / st.capacity_mj,
                });
            }
        }
    }

    fn finish(self, horizon: u64) -> Trace {
        let horizon_s = to_s(horizon);
        let mut uptime_s = BTreeMap::new();
        let mut ledger = BTreeMap::new();
        for (i, st) in self.devs.iter().enumerate() {
            let id = self.id(i);
            let own = |s: &DevState| s.depleted_ms.map_or(horizon_s, to_s);
            let up = match self.sc.devices[i].profile.paired_host {
                Some(h) => own(&self.devs[self.idx(h)]),
                None => own(st),
            };
            uptime_s.insert(id, up);
            if st.tier == Tier::Tier1 {
                ledger.insert(
                    id,
                    EnergyLedger {
                        final_mj: st.energy_mj,
                        ..st.ledger
                    },
                );
            }
        }
        let system_uptime_s = self
            .devs
            .iter()
            .enumerate()
            .filter(|(_, st)| st.tier == Tier::Tier1)
            .map(|(i, _)| uptime_s[&self.id(i)])
            .fold(horizon_s, f64::min);
        Trace {
            horizon_s,
            samples: self.samples,
            events: self.events,
            uptime_s,
            system_uptime_s,
            ledger,
        }
    }
}

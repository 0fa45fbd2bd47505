//! Ready-made scenarios used by the experiments and tests.

use crate::catalog::{CatalogFile, ConnectivityEntry, SensingEntry};
use crate::model::{
    ConnectedNetwork, ContextPair, DeviceId, DeviceKind, DeviceProfile, FunctionImplementation,
    FunctionType, MovingStatus, NetworkKind, NetworkProfile, Objective, ObjectiveMode,
    Registration, SamplingSpeed, Tier,
};
use crate::preferences::CONTEXT_MOVING;

use super::scenario::{
    QualityRule, Scenario, ScriptChange, ScriptEvent, SimDevice, Strategy, TimedRegistration,
};

pub const PHONE: DeviceId = 1;
pub const WATCH: DeviceId = 2;
pub const GLASS: DeviceId = 3;
pub const HEART_RATE_SENSOR: DeviceId = 10;

pub const PHONE_CAPACITY_MAH: f64 = 2300.0;
pub const WATCH_CAPACITY_MAH: f64 = 410.0;
pub const PHONE_LIFETIME_H: f64 = 48.0;
pub const WATCH_LIFETIME_H: f64 = 24.0;

fn implementations(functions: &[FunctionType]) -> Vec<FunctionImplementation> {
    functions
        .iter()
        .map(|&function_type| FunctionImplementation {
            function_type,
            cost_f: 0.0,
        })
        .collect()
}

pub fn profile(
    device_id: DeviceId,
    device_kind: DeviceKind,
    capacity_mah: f64,
    functions: &[FunctionType],
) -> DeviceProfile {
    DeviceProfile {
        device_id,
        device_kind,
        tier: Tier::Tier1,
        battery_capacity_mah: capacity_mah,
        nominal_voltage_v: crate::model::DEFAULT_NOMINAL_VOLTAGE_V,
        networks: vec![],
        implementations: implementations(functions),
        paired_host: None,
    }
}

fn sim_device(profile: DeviceProfile, soc: f64, lifetime_h: f64) -> SimDevice {
    SimDevice {
        initial_soc_percent: soc,
        baseline_lifetime_h: Some(lifetime_h),
        ..SimDevice::new(profile)
    }
}

pub fn registration(
    id: u32,
    app_id: &str,
    function_type: FunctionType,
    origin_device: DeviceId,
    speed: Option<SamplingSpeed>,
    report_interval_s: f64,
    payload_bytes_per_report: u64,
) -> TimedRegistration {
    TimedRegistration {
        registration: Registration {
            id,
            app_id: app_id.into(),
            function_type,
            origin_device,
            sampling_speed: speed,
            report_interval_s,
            payload_bytes_per_report,
            precision_spec: vec![],
            forced_mapping: vec![],
        },
        start_s: 0.0,
    }
}

/// Phone and watch both running an activity app that samples the
/// accelerometer at FASTEST and syncs 70 kB to the other device every
/// minute. Batteries drain linearly over two days (phone) and one day
/// (watch) on background load.
pub fn uptime_scenario(phone_soc: f64, watch_soc: f64, strategy: Strategy) -> Scenario {
    let accel = [FunctionType::Accelerometer];
    let devices = vec![
        sim_device(
            profile(PHONE, DeviceKind::Phone, PHONE_CAPACITY_MAH, &accel),
            phone_soc,
            PHONE_LIFETIME_H,
        ),
        sim_device(
            profile(WATCH, DeviceKind::Watch, WATCH_CAPACITY_MAH, &accel),
            watch_soc,
            WATCH_LIFETIME_H,
        ),
    ];
    let fastest = Some(SamplingSpeed::Fastest);
    let mut sc = Scenario::new(devices, 4.0 * 24.0 * 3600.0);
    sc.registrations = vec![
        registration(
            1,
            "activity",
            FunctionType::Accelerometer,
            PHONE,
            fastest,
            60.0,
            70_000,
        ),
        registration(
            2,
            "activity",
            FunctionType::Accelerometer,
            WATCH,
            fastest,
            60.0,
            70_000,
        ),
    ];
    sc.strategy = strategy;
    sc
}

/// The group-formation case: `n` tier-1 devices, nothing registered.
pub fn group_scenario(n: usize) -> Scenario {
    let devices = (0..n)
        .map(|i| {
            let (kind, mah) = if i % 2 == 0 {
                (DeviceKind::Phone, PHONE_CAPACITY_MAH)
            } else {
                (DeviceKind::Watch, WATCH_CAPACITY_MAH)
            };
            SimDevice::new(profile(i as DeviceId + 1, kind, mah, &[]))
        })
        .collect();
    Scenario::new(devices, 1.0)
}

fn glass_catalog() -> CatalogFile {
    // Not in the measured set; watch-class figures stand in.
    let rates = [9.52, 24.74, 57.61, 168.4];
    CatalogFile {
        sensing: SamplingSpeed::ALL
            .iter()
            .zip(rates)
            .map(|(&speed, mj_per_s)| SensingEntry {
                device: DeviceKind::Glass,
                sensor: FunctionType::Accelerometer,
                speed,
                mj_per_s,
            })
            .collect(),
        connectivity: vec![ConnectivityEntry {
            device: DeviceKind::Glass,
            transport: NetworkKind::Bluetooth,
            per_byte_mj: 0.0024,
            high_idle_mj: 126.07,
            low_idle_mj: Some(64.23),
        }],
        processing: vec![],
    }
}

/// Exercise tracking that wants the accelerometer on the body part that
/// moves: glass for head stretches, watch for body stretches, phone while
/// walking. The user's activity is scripted on the phone.
pub fn activity_quality_scenario() -> Scenario {
    let accel = [FunctionType::Accelerometer];
    let mut phone = sim_device(
        profile(PHONE, DeviceKind::Phone, PHONE_CAPACITY_MAH, &accel),
        100.0,
        PHONE_LIFETIME_H,
    );
    phone.moving = MovingStatus::HeadStretch;
    let devices = vec![
        phone,
        sim_device(
            profile(WATCH, DeviceKind::Watch, WATCH_CAPACITY_MAH, &accel),
            100.0,
            WATCH_LIFETIME_H,
        ),
        sim_device(profile(GLASS, DeviceKind::Glass, 570.0, &accel), 100.0, 8.0),
    ];
    let mut sc = Scenario::new(devices, 600.0);
    sc.objective = Objective {
        mode: ObjectiveMode::Quality,
    };
    sc.registrations = vec![registration(
        1,
        "exercise",
        FunctionType::Accelerometer,
        PHONE,
        Some(SamplingSpeed::Game),
        1.0,
        1_000,
    )];
    let rule = |moving: MovingStatus, device: DeviceId| QualityRule {
        function_type: FunctionType::Accelerometer,
        when: Some(ContextPair::new(CONTEXT_MOVING, moving.name())),
        preferred: vec![device],
    };
    sc.quality_rules = vec![
        rule(MovingStatus::HeadStretch, GLASS),
        rule(MovingStatus::BodyStretch, WATCH),
        rule(MovingStatus::Walking, PHONE),
    ];
    let activity = |t_s: f64, moving: MovingStatus| ScriptEvent {
        t_s,
        device: PHONE,
        change: ScriptChange::Activity { moving },
    };
    sc.context_script = vec![
        activity(120.0, MovingStatus::BodyStretch),
        activity(240.0, MovingStatus::Walking),
        activity(245.0, MovingStatus::BodyStretch),
        activity(360.0, MovingStatus::Walking),
    ];
    sc.catalog_extra = Some(glass_catalog());
    sc
}

fn network(kind: NetworkKind, id: &str, cost: f64) -> NetworkProfile {
    NetworkProfile {
        network_kind: kind,
        network_id: id.into(),
        monetary_cost_per_mb: cost,
        link_speed_bps: 1e6,
    }
}

fn connected(kind: NetworkKind, id: &str) -> Option<ConnectedNetwork> {
    Some(ConnectedNetwork {
        network_kind: kind,
        network_id: id.into(),
    })
}

/// A watch app uploading 1 MB a minute. The phone starts on free WiFi, then
/// moves to its cellular plan; later the watch's own plan hits its data cap.
pub fn monetary_scenario() -> Scenario {
    let upload = [FunctionType::InternetUpload];
    let mut phone = profile(PHONE, DeviceKind::Phone, PHONE_CAPACITY_MAH, &upload);
    phone.networks = vec![
        network(NetworkKind::WiFi, "home", 0.0),
        network(NetworkKind::Cellular, "carrier", 10.0),
    ];
    let mut watch = profile(WATCH, DeviceKind::Watch, WATCH_CAPACITY_MAH, &upload);
    watch.networks = vec![network(NetworkKind::Cellular, "watch-lte", 5.0)];
    let mut phone = sim_device(phone, 100.0, PHONE_LIFETIME_H);
    phone.connected_network = connected(NetworkKind::WiFi, "home");
    let mut watch = sim_device(watch, 100.0, WATCH_LIFETIME_H);
    watch.connected_network = connected(NetworkKind::Cellular, "watch-lte");

    let mut sc = Scenario::new(vec![phone, watch], 1800.0);
    sc.objective = Objective {
        mode: ObjectiveMode::Monetary,
    };
    sc.registrations = vec![registration(
        1,
        "backup",
        FunctionType::InternetUpload,
        WATCH,
        None,
        60.0,
        1_000_000,
    )];
    sc.context_script = vec![
        ScriptEvent {
            t_s: 600.0,
            device: PHONE,
            change: ScriptChange::Network {
                network: connected(NetworkKind::Cellular, "carrier"),
                avg_link_speed_bps: 1e6,
            },
        },
        ScriptEvent {
            t_s: 1200.0,
            device: WATCH,
            change: ScriptChange::MonetaryCost {
                network_id: "watch-lte".into(),
                cost_per_mb: 50.0,
            },
        },
    ];
    sc
}

/// A phone app reading a chest-strap heart-rate sensor paired to the watch.
pub fn heart_rate_scenario() -> Scenario {
    let sensor = DeviceProfile {
        device_id: HEART_RATE_SENSOR,
        device_kind: DeviceKind::Tier2Sensor,
        tier: Tier::Tier2,
        battery_capacity_mah: 0.0,
        nominal_voltage_v: crate::model::DEFAULT_NOMINAL_VOLTAGE_V,
        networks: vec![],
        implementations: implementations(&[FunctionType::HeartRate]),
        paired_host: Some(WATCH),
    };
    let devices = vec![
        sim_device(
            profile(PHONE, DeviceKind::Phone, PHONE_CAPACITY_MAH, &[]),
            100.0,
            PHONE_LIFETIME_H,
        ),
        sim_device(
            profile(WATCH, DeviceKind::Watch, WATCH_CAPACITY_MAH, &[]),
            100.0,
            WATCH_LIFETIME_H,
        ),
        SimDevice::new(sensor),
    ];
    let mut sc = Scenario::new(devices, 3600.0);
    sc.registrations = vec![registration(
        1,
        "fitness",
        FunctionType::HeartRate,
        PHONE,
        Some(SamplingSpeed::Normal),
        60.0,
        200,
    )];
    sc
}

//! Uptime comparisons between coordinated allocation and fixed strategies.

use afv_core::catalog::EnergyCatalog;
use afv_core::model::DeviceId;
use afv_core::simulator::presets::{uptime_scenario, PHONE, WATCH};
use afv_core::simulator::{run, uptime_metrics, Scenario, SimError, Strategy, Trace, UptimeGain};
use rayon::prelude::*;
use serde::Serialize;

/// Watch SoC for the preset comparisons; only the phone's SoC is swept.
pub const WATCH_SOC_PERCENT: f64 = 100.0;
pub const SINGLE_RUN_PHONE_SOC_PERCENT: f64 = 45.0;
pub const SWEEP_PHONE_SOCS: [f64; 4] = [70.0, 80.0, 90.0, 100.0];

pub fn strategy_label(strategy: &Strategy) -> String {
    match strategy {
        Strategy::Afv => "afv".into(),
        Strategy::All => "all".into(),
        Strategy::Manual => "manual".into(),
        Strategy::Pinned { device } => format!("only-{device}"),
    }
}

/// Fixed strategies worth comparing against for `scenario`: ALL, MANUAL and
/// one pinned strategy per tier-1 device.
pub fn default_baselines(scenario: &Scenario) -> Vec<Strategy> {
    let mut out = vec![Strategy::All, Strategy::Manual];
    out.extend(
        scenario
            .devices
            .iter()
            .filter(|d| d.profile.tier == afv_core::model::Tier::Tier1)
            .map(|d| Strategy::Pinned {
                device: d.profile.device_id,
            }),
    );
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UptimeRow {
    pub baseline: String,
    /// Empty for the whole-system row.
    pub device_id: Option<DeviceId>,
    pub uptime_s: f64,
    pub baseline_uptime_s: f64,
    pub gain_h: f64,
    pub gain_pct: f64,
}

impl UptimeRow {
    fn new(baseline: &str, device_id: Option<DeviceId>, g: &UptimeGain) -> Self {
        Self {
            baseline: baseline.into(),
            device_id,
            uptime_s: g.uptime_s,
            baseline_uptime_s: g.baseline_uptime_s,
            gain_h: g.gain_h,
            gain_pct: g.gain_pct,
        }
    }
}

pub struct Comparison {
    pub trace: Trace,
    pub rows: Vec<UptimeRow>,
}

/// Runs `scenario` as given and once per baseline strategy.
pub fn compare(
    scenario: &Scenario,
    catalog: &EnergyCatalog,
    baselines: &[Strategy],
) -> Result<Comparison, SimError> {
    let trace = run(scenario, catalog)?;
    let traces: Vec<Trace> = baselines
        .par_iter()
        .map(|s| {
            let mut sc = scenario.clone();
            sc.strategy = *s;
            run(&sc, catalog)
        })
        .collect::<Result<_, _>>()?;
    let mut rows = Vec::new();
    for (strategy, base) in baselines.iter().zip(&traces) {
        let label = strategy_label(strategy);
        let m = uptime_metrics(&trace, base);
        rows.extend(
            m.per_device
                .iter()
                .map(|(&id, g)| UptimeRow::new(&label, Some(id), g)),
        );
        rows.push(UptimeRow::new(&label, None, &m.system));
    }
    Ok(Comparison { trace, rows })
}

/// Per-device gains of the two-device preset at 45 % phone SoC: the watch
/// against the watch doing all the work, the phone against the phone doing
/// all the work.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeviceGains {
    pub watch: UptimeGain,
    pub phone: UptimeGain,
}

pub fn device_gains(catalog: &EnergyCatalog) -> Result<DeviceGains, SimError> {
    let soc = SINGLE_RUN_PHONE_SOC_PERCENT;
    let traces: Vec<Trace> = [
        Strategy::Afv,
        Strategy::Pinned { device: WATCH },
        Strategy::Pinned { device: PHONE },
    ]
    .into_par_iter()
    .map(|s| run(&uptime_scenario(soc, WATCH_SOC_PERCENT, s), catalog))
    .collect::<Result<_, _>>()?;
    let gain =
        |base: &Trace, id: DeviceId| UptimeGain::new(traces[0].uptime_s[&id], base.uptime_s[&id]);
    Ok(DeviceGains {
        watch: gain(&traces[1], WATCH),
        phone: gain(&traces[2], PHONE),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SocSweepRow {
    pub phone_soc_percent: f64,
    pub baseline: String,
    pub system_uptime_s: f64,
    pub baseline_system_uptime_s: f64,
    pub gain_h: f64,
    pub gain_pct: f64,
}

/// System uptime gain of coordinated allocation over each of `baselines`
/// as the phone's initial SoC varies.
pub fn soc_sweep(
    catalog: &EnergyCatalog,
    phone_socs: &[f64],
    baselines: &[Strategy],
) -> Result<Vec<SocSweepRow>, SimError> {
    let per_soc: Vec<Vec<SocSweepRow>> = phone_socs
        .par_iter()
        .map(|&soc| {
            let afv = run(
                &uptime_scenario(soc, WATCH_SOC_PERCENT, Strategy::Afv),
                catalog,
            )?;
            baselines
                .iter()
                .map(|s| {
                    let base = run(&uptime_scenario(soc, WATCH_SOC_PERCENT, *s), catalog)?;
                    let g = UptimeGain::new(afv.system_uptime_s, base.system_uptime_s);
                    Ok(SocSweepRow {
                        phone_soc_percent: soc,
                        baseline: strategy_label(s),
                        system_uptime_s: g.uptime_s,
                        baseline_system_uptime_s: g.baseline_uptime_s,
                        gain_h: g.gain_h,
                        gain_pct: g.gain_pct,
                    })
                })
                .collect()
        })
        .collect::<Result<_, SimError>>()?;
    Ok(per_soc.into_iter().flatten().collect())
}

pub fn sweep_baselines() -> Vec<Strategy> {
    vec![
        Strategy::Pinned { device: WATCH },
        Strategy::Pinned { device: PHONE },
        Strategy::All,
    ]
}

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::DeviceId;

use super::trace::Trace;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UptimeGain {
    pub uptime_s: f64,
    pub baseline_uptime_s: f64,
    pub gain_h: f64,
    /// Relative to the baseline uptime; 0 when the baseline uptime is 0.
    pub gain_pct: f64,
}

impl UptimeGain {
    pub fn new(uptime_s: f64, baseline_uptime_s: f64) -> Self {
        let gain_s = uptime_s - baseline_uptime_s;
        Self {
            uptime_s,
            baseline_uptime_s,
            gain_h: gain_s / 3600.0,
            gain_pct: if baseline_uptime_s > 0.0 {
                100.0 * gain_s / baseline_uptime_s
            } else {
                0.0
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UptimeMetrics {
    pub per_device: BTreeMap<DeviceId, UptimeGain>,
    pub system: UptimeGain,
}

/// Uptime of `trace` against `baseline`, per device present in both and for
/// the system as a whole.
pub fn uptime_metrics(trace: &Trace, baseline: &Trace) -> UptimeMetrics {
    let per_device = trace
        .uptime_s
        .iter()
        .filter_map(|(&id, &up)| {
            baseline
                .uptime_s
                .get(&id)
                .map(|&base| (id, UptimeGain::new(up, base)))
        })
        .collect();
    UptimeMetrics {
        per_device,
        system: UptimeGain::new(trace.system_uptime_s, baseline.system_uptime_s),
    }
}

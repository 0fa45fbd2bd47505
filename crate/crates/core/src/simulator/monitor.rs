//! Per-device context monitoring: turns raw readings into the few changes
//! the decision engine cares about.

use serde::{Deserialize, Serialize};

use crate::model::{ConnectedNetwork, MovingStatus};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "change", rename_all = "snake_case")]
pub enum ContextChange {
    SocBelowThreshold {
        soc_percent: u8,
    },
    SocAboveThreshold {
        soc_percent: u8,
    },
    Charging {
        charging: bool,
    },
    Activity {
        moving: MovingStatus,
    },
    Network {
        network: Option<ConnectedNetwork>,
    },
    MonetaryCost {
        network_id: String,
        cost_per_mb: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawContext {
    pub soc_percent: u8,
    pub charging: bool,
    pub moving: MovingStatus,
    pub connected_network: Option<ConnectedNetwork>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorConfig {
    pub soc_threshold_percent: u8,
    pub debounce_ms: u64,
}

/// Last reported values. Activity changes wait in `pending` until they have
/// persisted for the debounce period.
#[derive(Debug, Clone, PartialEq)]
pub struct MonitorState {
    below_threshold: bool,
    charging: bool,
    moving: MovingStatus,
    pending_moving: Option<(MovingStatus, u64)>,
    connected_network: Option<ConnectedNetwork>,
}

impl MonitorState {
    pub fn new(initial: &RawContext, config: &MonitorConfig) -> Self {
        Self {
            below_threshold: initial.soc_percent <= config.soc_threshold_percent,
            charging: initial.charging,
            moving: initial.moving,
            pending_moving: None,
            connected_network: initial.connected_network.clone(),
        }
    }

    pub fn moving(&self) -> MovingStatus {
        self.moving
    }

    pub fn below_threshold(&self) -> bool {
        self.below_threshold
    }

    pub fn charging(&self) -> bool {
        self.charging
    }

    pub fn connected_network(&self) -> Option<&ConnectedNetwork> {
        self.connected_network.as_ref()
    }

    /// When the pending activity, if it persists, becomes reportable.
    pub fn debounce_deadline(&self, config: &MonitorConfig) -> Option<u64> {
        self.pending_moving
            .map(|(_, since)| since + config.debounce_ms)
    }
}

/// Integer state of charge, rounded up so that a battery reads 0 % only when
/// it is empty.
pub fn soc_percent(energy_mj: f64, capacity_mj: f64) -> u8 {
    if capacity_mj <= 0.0 {
        return 0;
    }
    let pct = (100.0 * energy_mj / capacity_mj - 1e-9).ceil();
    pct.clamp(0.0, 100.0) as u8
}

pub fn context_monitor_step(
    state: &mut MonitorState,
    config: &MonitorConfig,
    t_ms: u64,
    raw: &RawContext,
) -> Vec<ContextChange> {
    let mut changes = Vec::new();

    let below = raw.soc_percent <= config.soc_threshold_percent;
    if below != state.below_threshold {
        state.below_threshold = below;
        changes.push(if below {
            ContextChange::SocBelowThreshold {
                soc_percent: raw.soc_percent,
            }
        } else {
            ContextChange::SocAboveThreshold {
                soc_percent: raw.soc_percent,
            }
        });
    }

    if raw.charging != state.charging {
        state.charging = raw.charging;
        changes.push(ContextChange::Charging {
            charging: raw.charging,
        });
    }

    if raw.connected_network != state.connected_network {
        state.connected_network = raw.connected_network.clone();
        changes.push(ContextChange::Network {
            network: raw.connected_network.clone(),
        });
    }

    if raw.moving == state.moving {
        state.pending_moving = None;
    } else {
        let since = match state.pending_moving {
            Some((m, since)) if m == raw.moving => since,
            _ => t_ms,
        };
        if t_ms >= since + config.debounce_ms {
            state.moving = raw.moving;
            state.pending_moving = None;
            changes.push(ContextChange::Activity { moving: raw.moving });
        } else {
            state.pending_moving = Some((raw.moving, since));
        }
    }

    changes
}

#[cfg(test)]
mod tests {
    use super::*;

    const CONFIG: MonitorConfig = MonitorConfig {
        soc_threshold_percent: 20,
        debounce_ms: 10_000,
    };

    fn raw(soc: u8, moving: MovingStatus) -> RawContext {
        RawContext {
            soc_percent: soc,
            charging: false,
            moving,
            connected_network: None,
        }
    }

    #[test]
    fn crossing_into_threshold_reports_once() {
        let mut st = MonitorState::new(&raw(21, MovingStatus::Still), &CONFIG);
        let got = context_monitor_step(&mut st, &CONFIG, 1, &raw(20, MovingStatus::Still));
        assert_eq!(
            got,
            vec![ContextChange::SocBelowThreshold { soc_percent: 20 }]
        );
        let again = context_monitor_step(&mut st, &CONFIG, 2, &raw(19, MovingStatus::Still));
        assert!(again.is_empty());
    }

    #[test]
    fn drop_away_from_threshold_is_silent() {
        let mut st = MonitorState::new(&raw(60, MovingStatus::Still), &CONFIG);
        assert!(
            context_monitor_step(&mut st, &CONFIG, 1, &raw(59, MovingStatus::Still)).is_empty()
        );
    }

    #[test]
    fn short_activity_blip_is_suppressed() {
        let mut st = MonitorState::new(&raw(80, MovingStatus::Walking), &CONFIG);
        assert!(
            context_monitor_step(&mut st, &CONFIG, 0, &raw(80, MovingStatus::Still)).is_empty()
        );
        assert_eq!(st.debounce_deadline(&CONFIG), Some(10_000));
        assert!(
            context_monitor_step(&mut st, &CONFIG, 5_000, &raw(80, MovingStatus::Walking))
                .is_empty()
        );
        assert_eq!(st.debounce_deadline(&CONFIG), None);
        assert!(
            context_monitor_step(&mut st, &CONFIG, 10_000, &raw(80, MovingStatus::Walking))
                .is_empty()
        );
        assert_eq!(st.moving(), MovingStatus::Walking);
    }

    #[test]
    fn persistent_activity_is_reported_after_debounce() {
        let mut st = MonitorState::new(&raw(80, MovingStatus::Still), &CONFIG);
        let walk = raw(80, MovingStatus::Walking);
        assert!(context_monitor_step(&mut st, &CONFIG, 1_000, &walk).is_empty());
        assert!(context_monitor_step(&mut st, &CONFIG, 10_999, &walk).is_empty());
        assert_eq!(
            context_monitor_step(&mut st, &CONFIG, 11_000, &walk),
            vec![ContextChange::Activity {
                moving: MovingStatus::Walking
            }]
        );
    }

    #[test]
    fn zero_debounce_reports_immediately() {
        let cfg = MonitorConfig {
            debounce_ms: 0,
            ..CONFIG
        };
        let mut st = MonitorState::new(&raw(80, MovingStatus::Still), &cfg);
        let got = context_monitor_step(&mut st, &cfg, 7, &raw(80, MovingStatus::HeadStretch));
        assert_eq!(got.len(), 1);
    }

    #[test]
    fn soc_rounds_up() {
        assert_eq!(soc_percent(20.0, 100.0), 20);
        assert_eq!(soc_percent(20.01, 100.0), 21);
        assert_eq!(soc_percent(0.0, 100.0), 0);
        assert_eq!(soc_percent(1e-6, 100.0), 1);
        assert_eq!(soc_percent(0.2 * 31_464_000.0, 31_464_000.0), 20);
    }
}

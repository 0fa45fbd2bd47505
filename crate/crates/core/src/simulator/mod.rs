//! Discrete-event simulation of a personal-area network: battery drain,
//! context monitoring, master-driven re-allocation and message accounting.
//!
//! Time advances in integer milliseconds from event to event. Between events
//! every device drains linearly at its background power plus the average
//! power of the functions it executes; messages and group formation are
//! charged as instantaneous lumps.

pub mod costs;
mod engine;
pub mod metrics;
pub mod monitor;
pub mod presets;
pub mod scenario;
pub mod trace;

pub use engine::{group_formation_energy_mj, run};
pub use metrics::{uptime_metrics, UptimeGain, UptimeMetrics};
pub use monitor::{context_monitor_step, ContextChange, MonitorConfig, MonitorState, RawContext};
pub use scenario::{
    QualityRule, Scenario, ScriptChange, ScriptEvent, SimDevice, Strategy, TimedRegistration,
};
pub use trace::{EnergyLedger, SocSample, Trace, TraceEvent};

use crate::allocator::AllocError;
use crate::catalog::CatalogError;
use crate::preferences::PreferenceError;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Alloc(#[from] AllocError),
    #[error(transparent)]
    Preference(#[from] PreferenceError),
}

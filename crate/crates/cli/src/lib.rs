//! Experiment harness around `afv_core`: Monte-Carlo allocator sweeps,
//! uptime comparisons, acceptance checks and a hex front end for the
//! message codec. The `afv` binary is a thin clap layer over these modules.

// `!(x >= 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod output;
pub mod sweep;
pub mod uptime;
pub mod validate;
pub mod wire;

use std::path::Path;

use afv_core::catalog::{load_energy_catalog, EnergyCatalog};
use anyhow::Context;

/// The catalog at `path`, or the built-in one when no path is given.
pub fn load_catalog(path: Option<&Path>) -> anyhow::Result<EnergyCatalog> {
    match path {
        Some(p) => {
            load_energy_catalog(p).with_context(|| format!("loading catalog {}", p.display()))
        }
        None => Ok(EnergyCatalog::shipped()),
    }
}

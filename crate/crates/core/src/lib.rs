//! Context-aware function allocation for wearable personal-area networks.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`], [`catalog`], [`preferences`] and [`aggregation`] describe
//!   devices, registrations, measured energy costs and context filtering;
//! * [`allocator`] solves the per-function allocation problem;
//! * [`protocol`] encodes the inter-device messages;
//! * [`simulator`] runs a deterministic discrete-event model of a PAN.

// `!(x >= 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aggregation;
pub mod allocator;
pub mod catalog;
pub mod model;
pub mod preferences;
pub mod protocol;
pub mod simulator;

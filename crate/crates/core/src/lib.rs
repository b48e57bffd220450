//! Deterministic discrete-event grid simulator with a deadline/budget
//! constrained economic broker.
//!
//! [`grid::run_scenario`] runs one simulation; [`harness::run_sweep`] runs a
//! grid of them from a TOML config. Runs depend only on their inputs, and
//! every run reports a hash of its event trace.

// `!(x > 0.0)` guards are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod broker;
pub mod grid;
pub mod harness;
pub mod kernel;
pub mod plan;
pub mod resource;
pub mod stats;
pub mod workload;

//! Automated capacity dimensioning and planning for multi-tenant small-cell
//! networks.
//!
//! The crate is organized bottom-up:
//!
//! - [`scenario`]: pixel grid, tenants, traffic maps, network state
//! - [`radio`]: pixel-level performance model (power, serving area, SINR,
//!   spectral efficiency, required bandwidth)
//! - [`sla`]: contracted capacity to busy-hour planning specifications
//! - [`monitor`]: conformance checks and counter-based estimation
//! - [`planner`]: the four-phase planner, channel selection, and the
//!   deploy-only baseline
//! - [`synth`]: synthetic traffic maps and daily profiles
//! - [`experiment`]: end-to-end planning / operation / re-planning runs
//!
//! Inner loops over pixels and candidate sites run on rayon when the
//! `parallel` feature is enabled (default); see [`par::Exec`].

// Negated comparisons are used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiment;
pub mod io;
pub mod monitor;
pub mod par;
pub mod planner;
pub mod radio;
pub mod scenario;
pub mod sla;
pub mod synth;

pub use error::{Error, Result};
pub use par::Exec;

//! Cost-aware WiFi offloading for a single mobile user.
//!
//! The pipeline forecasts WiFi availability from a second-order Markov
//! mobility model, forecasts per-application demand by moving average,
//! schedules deferrals and 3G rates as a multidimensional multiple-choice
//! knapsack, and re-optimizes that schedule once per period over the day.
//! A flow-level model of receiver-side advertisement-window rate control
//! and a trace-driven simulator comparing the scheduler with on-the-spot
//! and delayed offloading complete the crate.
//!
//! Periods are indexed from 0 throughout: a day has periods `0..n`.
//!
//! The crate is `no_std` and needs only `alloc`. File formats and the CLI
//! live in the companion `amuse` crate.

#![no_std]
#![warn(missing_debug_implementations, rust_2018_idioms)]
// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod baselines;
pub mod error;
pub mod execution;
pub mod optimizer;
pub mod ratectl;
pub mod sim;
pub mod trace;
pub mod usage;
pub mod utility;
pub mod wifi;

pub use error::{Error, Result};
pub use trace::{App, AppKind, AppUsage, DayTrace, KindMap, LocationId, PeriodRecord, PricingPlan, RateGrid};

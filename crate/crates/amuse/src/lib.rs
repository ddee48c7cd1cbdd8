//! File formats and batch tooling around `amuse-core`.
//!
//! - [`tracefile`]: the per-user trace CSV, read and written.
//! - [`config`]: the TOML run configuration and its hash.
//! - [`report`]: simulation run directories and the comparison tables.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
mod error;
pub mod report;
pub mod tracefile;

pub use error::{IoError, Result};

/// Formats a float with 6 significant digits and no trailing zeros.
pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let rounded: f64 = format!("{x:.5e}").parse().expect("scientific notation parses");
    format!("{rounded}")
}

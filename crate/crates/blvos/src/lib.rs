//! Gate-level laboratory for block-level voltage-overscaled (BL-VOS)
//! approximate multipliers.
//!
//! The crate builds block-based multiplier netlists, assigns per-block supply
//! voltages with level-shifter placement, runs event-driven two-vector timing
//! simulation to turn delay inflation into output errors, characterizes the
//! resulting error metrics, models threshold-drift aging and process
//! variation, explores the (structure, k, voltage) design space against
//! quality/energy constraints, and drives image sharpening/smoothing through
//! the simulated multipliers.

pub mod circuit;
pub mod config;
pub mod engine;
mod error;
pub mod explore;
pub mod imgbench;
pub mod metrics;
pub mod reliability;
pub mod report;
pub mod timesim;
pub mod volt;

pub use error::{Error, PgmError};

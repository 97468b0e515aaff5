//! Interchangeable multiply engines behind one trait, selected at runtime.
//!
//! The image pipeline and any other consumer of a "multiply function" take a
//! `&mut dyn Multiplier`; the exact engine is the arithmetic oracle, the
//! tabulated engine replays a precomputed RESET table, and the paired engine
//! streams every call through the event simulator.

use std::sync::Arc;

use crate::timesim::{ResetTable, Simulator, TimedNetlist};

/// An 8/16-bit unsigned multiply strategy with cumulative modeled energy.
pub trait Multiplier {
    fn mul(&mut self, a: u32, b: u32) -> u64;
    /// Total modeled toggle energy of all calls so far.
    fn energy(&self) -> f64;
    fn mode_name(&self) -> &'static str;
}

/// Plain machine arithmetic; the reference oracle. Consumes no modeled energy.
#[derive(Default)]
pub struct ExactMultiplier;

impl Multiplier for ExactMultiplier {
    fn mul(&mut self, a: u32, b: u32) -> u64 {
        a as u64 * b as u64
    }

    fn energy(&self) -> f64 {
        0.0
    }

    fn mode_name(&self) -> &'static str {
        "exact"
    }
}

/// Table-driven engine: every call is a lookup into a RESET table, with the
/// per-entry simulation energy accumulated.
pub struct TabulatedMultiplier {
    table: Arc<ResetTable>,
    energy: f64,
}

impl TabulatedMultiplier {
    pub fn new(table: Arc<ResetTable>) -> Self {
        TabulatedMultiplier { table, energy: 0.0 }
    }
}

impl Multiplier for TabulatedMultiplier {
    fn mul(&mut self, a: u32, b: u32) -> u64 {
        self.energy += self.table.energy_at(a, b);
        self.table.lookup(a, b) as u64
    }

    fn energy(&self) -> f64 {
        self.energy
    }

    fn mode_name(&self) -> &'static str {
        "reset"
    }
}

/// Streaming engine: each call's previous vector is the previous call.
pub struct PairedMultiplier {
    sim: Simulator,
    energy: f64,
}

impl PairedMultiplier {
    pub fn new(tn: Arc<TimedNetlist>) -> Self {
        PairedMultiplier { sim: Simulator::new(tn), energy: 0.0 }
    }
}

impl Multiplier for PairedMultiplier {
    fn mul(&mut self, a: u32, b: u32) -> u64 {
        let r = self.sim.stream_next((a as u64, b as u64));
        self.energy += r.energy;
        r.sampled
    }

    fn energy(&self) -> f64 {
        self.energy
    }

    fn mode_name(&self) -> &'static str {
        "paired"
    }
}

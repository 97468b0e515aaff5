//! Gate-level netlists for the block-based multiplier family.
//!
//! A multiplier is decomposed into four sub-products over the high/low operand
//! parts (split at bit `k`), merged by two n-bit ripple adders, one
//! 2(n−k)-bit ripple adder and a final half adder. Every gate carries the tag
//! of the block it belongs to, which is what the voltage-domain assignment
//! operates on.

mod build;
mod dump;
mod regions;
mod validate;

pub use build::{build_multiplier, decompose_operand};
pub use dump::dump_netlist;
pub use regions::{level_shifter_count, region_gate_sets, Region, RegionSets};
pub use validate::{validate, Diagnostic};

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// A net: one wire, driven by exactly one gate or one primary input.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct NetId(pub u32);

/// Index of a gate in [`Netlist::gates`].
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct GateId(pub u32);

/// Gate primitives the netlists are built from.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum GateKind {
    And2,
    Nand2,
    Nor2,
    Or2,
    Xor2,
    Inv,
    Buf,
    LevelShifter,
}

impl GateKind {
    pub fn arity(self) -> usize {
        match self {
            GateKind::Inv | GateKind::Buf | GateKind::LevelShifter => 1,
            _ => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::And2 => "AND2",
            GateKind::Nand2 => "NAND2",
            GateKind::Nor2 => "NOR2",
            GateKind::Or2 => "OR2",
            GateKind::Xor2 => "XOR2",
            GateKind::Inv => "INV",
            GateKind::Buf => "BUF",
            GateKind::LevelShifter => "LEVEL_SHIFTER",
        }
    }

    /// Combinational function of the gate over its input values.
    pub fn eval(self, inputs: &[bool]) -> bool {
        match self {
            GateKind::And2 => inputs[0] && inputs[1],
            GateKind::Nand2 => !(inputs[0] && inputs[1]),
            GateKind::Nor2 => !(inputs[0] || inputs[1]),
            GateKind::Or2 => inputs[0] || inputs[1],
            GateKind::Xor2 => inputs[0] ^ inputs[1],
            GateKind::Inv => !inputs[0],
            GateKind::Buf | GateKind::LevelShifter => inputs[0],
        }
    }
}

/// Which block of the multiplier a gate belongs to.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub enum BlockTag {
    /// A_L × B_L sub-product.
    Ll,
    /// A_H × B_L sub-product.
    Hl,
    /// A_L × B_H sub-product.
    Lh,
    /// A_H × B_H sub-product.
    Hh,
    /// n-bit adder merging the two middle sub-products.
    Adder1,
    /// n-bit adder folding the low sub-product into the middle sum.
    Adder2,
    /// 2(n−k)-bit adder producing the upper output bits.
    Adder3,
    /// Half adder combining the two merge carries.
    HaFinal,
    /// Anything that is not part of a named block (e.g. inserted level shifters).
    Glue,
}

impl BlockTag {
    pub fn name(self) -> &'static str {
        match self {
            BlockTag::Ll => "LL",
            BlockTag::Hl => "HL",
            BlockTag::Lh => "LH",
            BlockTag::Hh => "HH",
            BlockTag::Adder1 => "ADDER1",
            BlockTag::Adder2 => "ADDER2",
            BlockTag::Adder3 => "ADDER3",
            BlockTag::HaFinal => "HA_FINAL",
            BlockTag::Glue => "GLUE",
        }
    }
}

/// The five voltage-overscaling structures: each one overscales a nested set
/// of blocks, from none (`Blvos0`, the exact multiplier) to all of them
/// (`Blvos4`).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Structure {
    Blvos0,
    Blvos1,
    Blvos2,
    Blvos3,
    Blvos4,
}

impl Structure {
    pub const ALL: [Structure; 5] = [
        Structure::Blvos0,
        Structure::Blvos1,
        Structure::Blvos2,
        Structure::Blvos3,
        Structure::Blvos4,
    ];

    pub fn index(self) -> usize {
        match self {
            Structure::Blvos0 => 0,
            Structure::Blvos1 => 1,
            Structure::Blvos2 => 2,
            Structure::Blvos3 => 3,
            Structure::Blvos4 => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Structure::Blvos0 => "blvos0",
            Structure::Blvos1 => "blvos1",
            Structure::Blvos2 => "blvos2",
            Structure::Blvos3 => "blvos3",
            Structure::Blvos4 => "blvos4",
        }
    }

    pub fn parse(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "blvos0" => Ok(Structure::Blvos0),
            "blvos1" => Ok(Structure::Blvos1),
            "blvos2" => Ok(Structure::Blvos2),
            "blvos3" => Ok(Structure::Blvos3),
            "blvos4" => Ok(Structure::Blvos4),
            other => Err(Error::Spec(format!("unknown structure `{other}`"))),
        }
    }
}

impl std::fmt::Display for Structure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One point in the multiplier design space.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct MultiplierSpec {
    /// Operand width in bits.
    pub n: u32,
    /// Width of the lower operand parts, `0 < k < n`.
    pub k: u32,
    pub structure: Structure,
    /// Number of least-significant product columns removed (0 = no truncation).
    pub truncation: u32,
    /// Sub-products whose inputs are power-gated off (contribute constant zero).
    pub gated_blocks: BTreeSet<BlockTag>,
}

impl MultiplierSpec {
    pub fn new(n: u32, k: u32, structure: Structure) -> Self {
        MultiplierSpec {
            n,
            k,
            structure,
            truncation: 0,
            gated_blocks: BTreeSet::new(),
        }
    }

    /// Maximum supported operand width. Keeps operands in `u32`, products in
    /// `u64`, and simulations at desk scale.
    pub const MAX_N: u32 = 16;

    pub fn validate(&self) -> Result<(), Error> {
        if self.n < 2 || self.n > Self::MAX_N {
            return Err(Error::Spec(format!(
                "n must be in 2..={}, got {}",
                Self::MAX_N,
                self.n
            )));
        }
        if !(0 < self.k && self.k < self.n) {
            return Err(Error::Spec(format!(
                "0 < k < n required, got k = {}, n = {}",
                self.k, self.n
            )));
        }
        if self.truncation >= 2 * self.n {
            return Err(Error::Spec(format!(
                "truncation must be < 2n = {}, got {}",
                2 * self.n,
                self.truncation
            )));
        }
        for tag in &self.gated_blocks {
            if !matches!(tag, BlockTag::Ll | BlockTag::Hl | BlockTag::Lh) {
                return Err(Error::Spec(format!(
                    "only LL, HL and LH may be power-gated, got {}",
                    tag.name()
                )));
            }
        }
        Ok(())
    }
}

/// A primary-output bit: either a real net or a constant zero left behind by
/// truncation, gating, or a degenerate product width.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum OutputBit {
    Zero,
    Net(NetId),
}

#[derive(Clone, Debug)]
pub struct Gate {
    pub kind: GateKind,
    pub block_tag: BlockTag,
    pub inputs: Vec<NetId>,
    pub output: NetId,
    /// Delay in dimensionless time units at the nominal supply voltage.
    pub nominal_delay: f64,
}

/// An immutable combinational netlist. Gates are stored in topological order
/// (every gate only reads nets produced earlier); nets `0..n` are the bits of
/// operand A, nets `n..2n` the bits of operand B.
#[derive(Clone, Debug)]
pub struct Netlist {
    pub n: u32,
    pub k: u32,
    pub gates: Vec<Gate>,
    pub primary_inputs: Vec<NetId>,
    pub primary_outputs: Vec<OutputBit>,
    pub net_count: u32,
}

/// What drives a net.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Driver {
    PrimaryInput(u32),
    Gate(GateId),
}

impl Netlist {
    pub fn gate(&self, id: GateId) -> &Gate {
        &self.gates[id.0 as usize]
    }

    /// Driver of each net, `None` for undriven nets (a validation error).
    pub fn driver_map(&self) -> Vec<Option<Driver>> {
        let mut drivers = vec![None; self.net_count as usize];
        for (idx, &net) in self.primary_inputs.iter().enumerate() {
            drivers[net.0 as usize] = Some(Driver::PrimaryInput(idx as u32));
        }
        for (idx, gate) in self.gates.iter().enumerate() {
            drivers[gate.output.0 as usize] = Some(Driver::Gate(GateId(idx as u32)));
        }
        drivers
    }

    /// For each net, the gates reading it.
    pub fn consumer_map(&self) -> Vec<Vec<GateId>> {
        let mut consumers = vec![Vec::new(); self.net_count as usize];
        for (idx, gate) in self.gates.iter().enumerate() {
            for input in &gate.inputs {
                consumers[input.0 as usize].push(GateId(idx as u32));
            }
        }
        consumers
    }

    /// Steady-state (zero-delay) evaluation: the combinational ground truth.
    pub fn evaluate(&self, a: u64, b: u64) -> u64 {
        let n = self.n as usize;
        debug_assert!(a < 1 << n && b < 1 << n);
        let mut values = vec![false; self.net_count as usize];
        for i in 0..n {
            values[self.primary_inputs[i].0 as usize] = (a >> i) & 1 == 1;
            values[self.primary_inputs[n + i].0 as usize] = (b >> i) & 1 == 1;
        }
        let mut scratch = [false; 2];
        for gate in &self.gates {
            for (slot, input) in scratch.iter_mut().zip(&gate.inputs) {
                *slot = values[input.0 as usize];
            }
            values[gate.output.0 as usize] = gate.kind.eval(&scratch[..gate.inputs.len()]);
        }
        let mut out = 0u64;
        for (bit, ob) in self.primary_outputs.iter().enumerate() {
            if let OutputBit::Net(net) = ob {
                if values[net.0 as usize] {
                    out |= 1 << bit;
                }
            }
        }
        out
    }
}

/// Per-kind nominal gate delays in dimensionless time units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DelayTable {
    pub inv: f64,
    pub buf: f64,
    pub and2: f64,
    pub nand2: f64,
    pub nor2: f64,
    pub or2: f64,
    pub xor2: f64,
}

impl Default for DelayTable {
    fn default() -> Self {
        DelayTable {
            inv: 1.0,
            buf: 1.0,
            and2: 1.0,
            nand2: 1.0,
            nor2: 1.0,
            or2: 1.0,
            xor2: 2.0,
        }
    }
}

impl DelayTable {
    /// Nominal delay of a logic gate. Level shifters are not covered here:
    /// their delay depends on the voltage they convert from.
    pub fn nominal_delay(&self, kind: GateKind) -> f64 {
        match kind {
            GateKind::Inv => self.inv,
            GateKind::Buf => self.buf,
            GateKind::And2 => self.and2,
            GateKind::Nand2 => self.nand2,
            GateKind::Nor2 => self.nor2,
            GateKind::Or2 => self.or2,
            GateKind::Xor2 => self.xor2,
            GateKind::LevelShifter => self.buf,
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        for (name, d) in [
            ("inv", self.inv),
            ("buf", self.buf),
            ("and2", self.and2),
            ("nand2", self.nand2),
            ("nor2", self.nor2),
            ("or2", self.or2),
            ("xor2", self.xor2),
        ] {
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::Model(format!("delay for {name} must be > 0, got {d}")));
            }
        }
        Ok(())
    }
}

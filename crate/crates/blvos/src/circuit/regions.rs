//! Voltage-region membership per structure and the level-shifter count
//! formulas.

use std::collections::BTreeSet;

use super::{BlockTag, GateId, Netlist, Structure};
use crate::error::Error;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Region {
    Approx,
    Accurate,
}

/// Partition of a netlist's gates into the overscaled and nominal regions.
#[derive(Clone, Debug)]
pub struct RegionSets {
    pub approx: BTreeSet<GateId>,
    pub accurate: BTreeSet<GateId>,
    per_gate: Vec<Region>,
}

impl RegionSets {
    pub fn region_of(&self, gate: GateId) -> Region {
        self.per_gate[gate.0 as usize]
    }
}

/// Block tags whose voltage is overscaled in each structure. `Blvos4`
/// overscales every gate regardless of tag.
fn ticked_tags(structure: Structure) -> &'static [BlockTag] {
    match structure {
        Structure::Blvos0 => &[],
        Structure::Blvos1 => &[BlockTag::Ll],
        Structure::Blvos2 => &[BlockTag::Ll, BlockTag::Hl],
        Structure::Blvos3 => &[BlockTag::Ll, BlockTag::Hl, BlockTag::Lh, BlockTag::Adder1],
        Structure::Blvos4 => &[
            BlockTag::Ll,
            BlockTag::Hl,
            BlockTag::Lh,
            BlockTag::Hh,
            BlockTag::Adder1,
            BlockTag::Adder2,
            BlockTag::Adder3,
            BlockTag::HaFinal,
        ],
    }
}

/// Split the gates of `net` into APPROX and ACCURATE sets for `structure`.
pub fn region_gate_sets(net: &Netlist, structure: Structure) -> RegionSets {
    let all = matches!(structure, Structure::Blvos4);
    let ticked = ticked_tags(structure);
    let mut approx = BTreeSet::new();
    let mut accurate = BTreeSet::new();
    let mut per_gate = Vec::with_capacity(net.gates.len());
    for (idx, gate) in net.gates.iter().enumerate() {
        let id = GateId(idx as u32);
        let region = if all || ticked.contains(&gate.block_tag) {
            Region::Approx
        } else {
            Region::Accurate
        };
        per_gate.push(region);
        match region {
            Region::Approx => approx.insert(id),
            Region::Accurate => accurate.insert(id),
        };
    }
    RegionSets {
        approx,
        accurate,
        per_gate,
    }
}

/// Closed-form level-shifter requirement of each structure: `2k`, `2k + n`
/// and `2k + n + 1` for the first three overscaled structures; the
/// all-overscaled structure needs none.
pub fn level_shifter_count(structure: Structure, n: u32, k: u32) -> Result<u64, Error> {
    if !(0 < k && k < n) {
        return Err(Error::Spec(format!(
            "0 < k < n required, got k = {k}, n = {n}"
        )));
    }
    Ok(match structure {
        Structure::Blvos0 | Structure::Blvos4 => 0,
        Structure::Blvos1 => 2 * k as u64,
        Structure::Blvos2 => 2 * k as u64 + n as u64,
        Structure::Blvos3 => 2 * k as u64 + n as u64 + 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{build_multiplier, DelayTable, MultiplierSpec};

    #[test]
    fn shifter_count_formulas() {
        assert_eq!(level_shifter_count(Structure::Blvos1, 8, 2).unwrap(), 4);
        assert_eq!(level_shifter_count(Structure::Blvos2, 8, 2).unwrap(), 12);
        assert_eq!(level_shifter_count(Structure::Blvos3, 8, 2).unwrap(), 13);
        assert_eq!(level_shifter_count(Structure::Blvos4, 16, 8).unwrap(), 0);
        assert_eq!(level_shifter_count(Structure::Blvos0, 8, 4).unwrap(), 0);
        assert!(level_shifter_count(Structure::Blvos1, 8, 0).is_err());
        assert!(level_shifter_count(Structure::Blvos1, 8, 8).is_err());
    }

    #[test]
    fn region_extremes() {
        let net =
            build_multiplier(&MultiplierSpec::new(8, 4, Structure::Blvos0), &DelayTable::default())
                .unwrap();
        let r0 = region_gate_sets(&net, Structure::Blvos0);
        assert!(r0.approx.is_empty());
        assert_eq!(r0.accurate.len(), net.gates.len());
        let r4 = region_gate_sets(&net, Structure::Blvos4);
        assert!(r4.accurate.is_empty());
        assert_eq!(r4.approx.len(), net.gates.len());
    }

    #[test]
    fn regions_nest_strictly() {
        for n in [8u32, 16] {
            for k in 1..n {
                let net = build_multiplier(
                    &MultiplierSpec::new(n, k, Structure::Blvos0),
                    &DelayTable::default(),
                )
                .unwrap();
                let sets: Vec<_> = Structure::ALL
                    .iter()
                    .map(|&s| region_gate_sets(&net, s).approx)
                    .collect();
                for w in sets.windows(2) {
                    assert!(w[0].is_subset(&w[1]), "n={n} k={k}");
                    assert!(w[0].len() < w[1].len(), "n={n} k={k}");
                }
            }
        }
    }
}

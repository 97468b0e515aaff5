//! Structural netlist checks. Validation reports diagnostics instead of
//! aborting so that constructed faults can be inspected.

use std::collections::VecDeque;
use std::fmt;

use super::{GateId, NetId, Netlist};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Diagnostic {
    /// A net driven by more than one source.
    MultipleDrivers { net: NetId, gate: GateId },
    /// A gate input reading a net nothing drives.
    UndrivenInput { gate: GateId, net: NetId },
    /// Input count does not match the gate kind.
    BadArity { gate: GateId, expected: usize, got: usize },
    /// Gate participates in a combinational cycle.
    Cycle { gate: GateId },
    /// Gate output feeds nothing and is not a primary output.
    Dangling { gate: GateId },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::MultipleDrivers { net, gate } => {
                write!(f, "net n{} has more than one driver (gate g{})", net.0, gate.0)
            }
            Diagnostic::UndrivenInput { gate, net } => {
                write!(f, "gate g{} reads undriven net n{}", gate.0, net.0)
            }
            Diagnostic::BadArity { gate, expected, got } => {
                write!(f, "gate g{} has arity {got}, expected {expected}", gate.0)
            }
            Diagnostic::Cycle { gate } => {
                write!(f, "gate g{} is part of a combinational cycle", gate.0)
            }
            Diagnostic::Dangling { gate } => {
                write!(f, "gate g{} drives nothing", gate.0)
            }
        }
    }
}

/// Check acyclicity, single-driver, arity and structural coverage. Returns an
/// empty list when the netlist is well-formed.
pub fn validate(net: &Netlist) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let nets = net.net_count as usize;

    // Single driver per net.
    let mut driver_seen = vec![false; nets];
    for &pi in &net.primary_inputs {
        driver_seen[pi.0 as usize] = true;
    }
    for (idx, gate) in net.gates.iter().enumerate() {
        let out = gate.output.0 as usize;
        if driver_seen[out] {
            diags.push(Diagnostic::MultipleDrivers {
                net: gate.output,
                gate: GateId(idx as u32),
            });
        }
        driver_seen[out] = true;
    }

    // Arity and undriven inputs.
    for (idx, gate) in net.gates.iter().enumerate() {
        let expected = gate.kind.arity();
        if gate.inputs.len() != expected {
            diags.push(Diagnostic::BadArity {
                gate: GateId(idx as u32),
                expected,
                got: gate.inputs.len(),
            });
        }
        for input in &gate.inputs {
            if !driver_seen[input.0 as usize] {
                diags.push(Diagnostic::UndrivenInput {
                    gate: GateId(idx as u32),
                    net: *input,
                });
            }
        }
    }

    // Acyclicity via Kahn's algorithm on the gate graph.
    let drivers = net.driver_map();
    let consumers = net.consumer_map();
    let mut indeg = vec![0usize; net.gates.len()];
    for (idx, gate) in net.gates.iter().enumerate() {
        indeg[idx] = gate
            .inputs
            .iter()
            .filter(|i| matches!(drivers[i.0 as usize], Some(super::Driver::Gate(_))))
            .count();
    }
    let mut queue: VecDeque<usize> = indeg
        .iter()
        .enumerate()
        .filter_map(|(i, &d)| (d == 0).then_some(i))
        .collect();
    let mut visited = 0usize;
    while let Some(idx) = queue.pop_front() {
        visited += 1;
        for consumer in &consumers[net.gates[idx].output.0 as usize] {
            let c = consumer.0 as usize;
            indeg[c] -= 1;
            if indeg[c] == 0 {
                queue.push_back(c);
            }
        }
    }
    if visited < net.gates.len() {
        if let Some(idx) = indeg.iter().position(|&d| d > 0) {
            diags.push(Diagnostic::Cycle { gate: GateId(idx as u32) });
        }
    }

    // Coverage: every gate output must reach something.
    let mut consumed = vec![false; nets];
    for gate in &net.gates {
        for input in &gate.inputs {
            consumed[input.0 as usize] = true;
        }
    }
    for ob in &net.primary_outputs {
        if let super::OutputBit::Net(net_id) = ob {
            consumed[net_id.0 as usize] = true;
        }
    }
    for (idx, gate) in net.gates.iter().enumerate() {
        if !consumed[gate.output.0 as usize] {
            diags.push(Diagnostic::Dangling { gate: GateId(idx as u32) });
        }
    }

    diags
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{
        build_multiplier, BlockTag, DelayTable, Gate, GateKind, MultiplierSpec, OutputBit,
        Structure,
    };

    #[test]
    fn built_netlists_are_clean() {
        for structure in Structure::ALL {
            let net = build_multiplier(
                &MultiplierSpec::new(8, 3, structure),
                &DelayTable::default(),
            )
            .unwrap();
            assert!(validate(&net).is_empty());
        }
    }

    fn tiny_net(gates: Vec<Gate>, nets: u32) -> Netlist {
        Netlist {
            n: 1,
            k: 1,
            gates,
            primary_inputs: vec![NetId(0), NetId(1)],
            primary_outputs: vec![OutputBit::Net(NetId(2)), OutputBit::Zero],
            net_count: nets,
        }
    }

    #[test]
    fn flags_double_driver() {
        let gates = vec![
            Gate {
                kind: GateKind::And2,
                block_tag: BlockTag::Glue,
                inputs: vec![NetId(0), NetId(1)],
                output: NetId(2),
                nominal_delay: 1.0,
            },
            Gate {
                kind: GateKind::Or2,
                block_tag: BlockTag::Glue,
                inputs: vec![NetId(0), NetId(1)],
                output: NetId(2),
                nominal_delay: 1.0,
            },
        ];
        let diags = validate(&tiny_net(gates, 3));
        assert!(diags
            .iter()
            .any(|d| matches!(d, Diagnostic::MultipleDrivers { net, .. } if *net == NetId(2))));
        assert!(diags[0].to_string().contains("n2"));
    }

    #[test]
    fn flags_bad_arity() {
        let gates = vec![Gate {
            kind: GateKind::And2,
            block_tag: BlockTag::Glue,
            inputs: vec![NetId(0)],
            output: NetId(2),
            nominal_delay: 1.0,
        }];
        let diags = validate(&tiny_net(gates, 3));
        assert!(diags
            .iter()
            .any(|d| matches!(d, Diagnostic::BadArity { expected: 2, got: 1, .. })));
    }

    #[test]
    fn flags_cycle() {
        let gates = vec![
            Gate {
                kind: GateKind::And2,
                block_tag: BlockTag::Glue,
                inputs: vec![NetId(0), NetId(3)],
                output: NetId(2),
                nominal_delay: 1.0,
            },
            Gate {
                kind: GateKind::Or2,
                block_tag: BlockTag::Glue,
                inputs: vec![NetId(2), NetId(1)],
                output: NetId(3),
                nominal_delay: 1.0,
            },
        ];
        let diags = validate(&tiny_net(gates, 4));
        assert!(diags.iter().any(|d| matches!(d, Diagnostic::Cycle { .. })));
    }
}

//! Textual netlist dump, one gate per line, for inspection and golden tests.

use std::fmt::Write;

use super::{Netlist, OutputBit};

/// Render a netlist as text. Inputs are named `a<i>`/`b<i>`, other nets
/// `n<id>`, constant-zero output bits `-`.
pub fn dump_netlist(net: &Netlist) -> String {
    let n = net.n as usize;
    let name = |id: super::NetId| -> String {
        let raw = id.0 as usize;
        if raw < n {
            format!("a{raw}")
        } else if raw < 2 * n {
            format!("b{}", raw - n)
        } else {
            format!("n{raw}")
        }
    };

    let mut out = String::new();
    writeln!(out, "netlist n={} k={} gates={}", net.n, net.k, net.gates.len()).unwrap();
    let inputs: Vec<String> = net.primary_inputs.iter().map(|&i| name(i)).collect();
    writeln!(out, "inputs {}", inputs.join(" ")).unwrap();
    let outputs: Vec<String> = net
        .primary_outputs
        .iter()
        .map(|ob| match ob {
            OutputBit::Zero => "-".to_string(),
            OutputBit::Net(id) => name(*id),
        })
        .collect();
    writeln!(out, "outputs {}", outputs.join(" ")).unwrap();
    for (idx, gate) in net.gates.iter().enumerate() {
        let ins: Vec<String> = gate.inputs.iter().map(|&i| name(i)).collect();
        writeln!(
            out,
            "g{idx} {} {} {} -> {}",
            gate.kind.name(),
            gate.block_tag.name(),
            ins.join(" "),
            name(gate.output)
        )
        .unwrap();
    }
    out
}

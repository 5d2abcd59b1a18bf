use std::collections::HashSet;

use super::{Gate, Netlist, Reader};
use crate::gate::GateKind;

struct Names {
    used: HashSet<String>,
}

impl Names {
    fn fresh(&mut self, base: &str) -> String {
        let mut k = 1usize;
        loop {
            let candidate = format!("{base}{k}");
            if self.used.insert(candidate.clone()) {
                return candidate;
            }
            k += 1;
        }
    }
}

/// Replaces every illegal multi-reader net with a balanced binary tree of
/// COPY cells. A net with `k` readers gets `k` COPY leaves, each driving one
/// reader, so fanout `k` costs `2k - 2` cells and `ceil(log2 k)` levels.
/// Nets that are already legal are left alone.
///
/// When a gate-driven net is also a primary output, the driver is renamed
/// and the output keeps its name on the leaf that feeds it.
pub fn insert_splitters(netlist: &Netlist) -> Netlist {
    let readers = netlist.readers();
    let mut names = Names {
        used: netlist
            .inputs()
            .iter()
            .cloned()
            .chain(netlist.gates().iter().flat_map(|g| [g.id.clone(), g.output.clone()]))
            .collect(),
    };

    let mut gates: Vec<Gate> = netlist.gates().to_vec();
    let mut outputs: Vec<String> = netlist.outputs().to_vec();
    let mut new_gates: Vec<Gate> = Vec::new();

    // deterministic: visit nets in declaration / topological order
    let mut nets: Vec<String> = netlist.inputs().to_vec();
    nets.extend(netlist.gates().iter().map(|g| g.output.clone()));
    for net in nets {
        let Some(rs) = readers.get(net.as_str()) else { continue };
        if netlist.fanout_legal(rs) {
            continue;
        }
        let driver = netlist.gates().iter().position(|g| g.output == net);
        let mut source = net.clone();
        let mut keep_name_for: Option<Reader> = None;
        if let (Some(gi), Some(first_out)) = (driver, rs.iter().find(|r| matches!(r, Reader::Output(_)))) {
            source = names.fresh(&format!("{net}_src"));
            gates[gi].output = source.clone();
            keep_name_for = Some(*first_out);
        }
        let mut leaves: Vec<(Reader, String)> = Vec::new();
        build_tree(&source, &net, rs, keep_name_for, &mut names, &mut new_gates, &mut leaves);
        for (reader, leaf_net) in leaves {
            match reader {
                Reader::Gate(gi, pin) => gates[gi].inputs[pin] = leaf_net,
                Reader::Output(pos) => outputs[pos] = leaf_net,
            }
        }
    }

    gates.extend(new_gates);
    Netlist::new(netlist.name(), netlist.inputs().to_vec(), outputs, gates)
        .expect("splitter insertion preserves structural validity")
}

fn build_tree(
    source: &str,
    base: &str,
    readers: &[Reader],
    keep_name_for: Option<Reader>,
    names: &mut Names,
    gates: &mut Vec<Gate>,
    leaves: &mut Vec<(Reader, String)>,
) {
    let half = readers.len().div_ceil(2);
    for part in [&readers[..half], &readers[half..]] {
        let id = names.fresh(&format!("spl_{base}_"));
        let out = if part.len() == 1 && Some(part[0]) == keep_name_for {
            base.to_string()
        } else {
            names.fresh(&format!("{base}_s"))
        };
        gates.push(Gate::nominal(id, GateKind::Copy, &[source], out.clone()));
        if part.len() == 1 {
            leaves.push((part[0], out));
        } else {
            build_tree(&out, base, part, keep_name_for, names, gates, leaves);
        }
    }
}

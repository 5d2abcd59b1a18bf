use rand::seq::IndexedRandom;
use rand::Rng;

use super::{insert_splitters, Gate, Netlist, TIE_HIGH, TIE_LOW};
use crate::gate::GateKind;

/// Shape limits for [`random_netlist`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomShape {
    pub max_inputs: usize,
    /// Upper bound on gates after splitter insertion.
    pub max_gates: usize,
}

/// Random fanout-legal netlist at nominal biases. Gates draw operands from
/// primary inputs, earlier gate outputs and, rarely, the tie nets; every
/// gate output nobody reads becomes a primary output. Draws that need more
/// than `max_gates` cells after legalization are discarded and redrawn.
pub fn random_netlist<R: Rng + ?Sized>(rng: &mut R, shape: RandomShape) -> Netlist {
    assert!(shape.max_inputs >= 1 && shape.max_gates >= 1);
    loop {
        let n_in = rng.random_range(1..=shape.max_inputs);
        let n_gates = rng.random_range(1..=shape.max_gates);
        let inputs: Vec<String> = (0..n_in).map(|i| format!("x{i}")).collect();
        let mut nets: Vec<String> = inputs.clone();
        let mut gates = Vec::with_capacity(n_gates);
        for g in 0..n_gates {
            let kind = *GateKind::ALL.choose(rng).expect("nonempty");
            let ins: Vec<String> = (0..kind.arity())
                .map(|_| {
                    if rng.random_bool(0.05) {
                        (if rng.random_bool(0.5) { TIE_HIGH } else { TIE_LOW }).to_string()
                    } else {
                        nets.choose(rng).expect("nonempty").clone()
                    }
                })
                .collect();
            let out = format!("w{g}");
            let refs: Vec<&str> = ins.iter().map(String::as_str).collect();
            gates.push(Gate::nominal(format!("u{g}"), kind, &refs, out.clone()));
            nets.push(out);
        }
        let read: std::collections::HashSet<&str> =
            gates.iter().flat_map(|g| g.inputs.iter().map(String::as_str)).collect();
        let outputs: Vec<String> = gates
            .iter()
            .map(|g| g.output.clone())
            .filter(|o| !read.contains(o.as_str()))
            .collect();
        let raw = Netlist::new("", inputs, outputs, gates).expect("generated netlist is valid");
        let legal = insert_splitters(&raw);
        if legal.gate_count() <= shape.max_gates {
            return legal;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn respects_shape_and_is_deterministic() {
        let shape = RandomShape {
            max_inputs: 6,
            max_gates: 12,
        };
        let mut a = ChaCha8Rng::seed_from_u64(5);
        let mut b = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let n = random_netlist(&mut a, shape);
            assert!(n.is_legalized());
            assert!(n.inputs().len() <= 6 && n.gate_count() <= 12 && !n.outputs().is_empty());
            assert_eq!(n, random_netlist(&mut b, shape));
        }
    }
}

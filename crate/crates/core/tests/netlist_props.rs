use htron_core::gate::{input_rows, GateKind};
use htron_core::netlist::{
    camouflage_view, insert_splitters, parse_with, random_netlist, serialize, views_identical, Gate, Netlist,
    ParseOptions, RandomShape,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn netlist(seed: u64, max_inputs: usize, max_gates: usize) -> Netlist {
    random_netlist(
        &mut ChaCha8Rng::seed_from_u64(seed),
        RandomShape { max_inputs, max_gates },
    )
}

/// Random kinds of matching arity and random biases, same wiring.
fn rebias(n: &Netlist, seed: u64) -> Netlist {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gates: Vec<Gate> = n
        .gates()
        .iter()
        .map(|g| {
            let kinds: Vec<GateKind> = GateKind::ALL.into_iter().filter(|k| k.arity() == g.kind.arity()).collect();
            let mut h = g.clone();
            h.kind = kinds[rng.random_range(0..kinds.len())];
            h.bias.kind = h.kind;
            h.bias.i_b1 = rng.random_range(-150..150) as f64 + 0.25;
            h.bias.i_b2 = rng.random_range(1..100) as f64;
            h
        })
        .collect();
    Netlist::new(n.name(), n.inputs().to_vec(), n.outputs().to_vec(), gates).unwrap()
}

/// Gates sharing readers freely, as written by hand before legalization.
fn loose(seed: u64) -> Netlist {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_in = rng.random_range(1..=4);
    let mut nets: Vec<String> = (0..n_in).map(|i| format!("i{i}")).collect();
    let inputs = nets.clone();
    let mut gates = Vec::new();
    for g in 0..rng.random_range(1..=10) {
        let kind = GateKind::ALL[rng.random_range(0..5)];
        let ins: Vec<String> = (0..kind.arity()).map(|_| nets[rng.random_range(0..nets.len())].clone()).collect();
        let refs: Vec<&str> = ins.iter().map(String::as_str).collect();
        gates.push(Gate::nominal(format!("g{g}"), kind, &refs, format!("n{g}")));
        nets.push(format!("n{g}"));
    }
    let outputs = (0..rng.random_range(1..=3)).map(|_| nets[rng.random_range(0..nets.len())].clone()).collect();
    Netlist::new("", inputs, outputs, gates).unwrap()
}

proptest! {
    #[test]
    fn serialize_parse_round_trip(seed in any::<u64>(), bias_seed in any::<u64>()) {
        let n = rebias(&netlist(seed, 6, 12), bias_seed).with_name("rt");
        let text = serialize(&n);
        // rebiasing can turn splitter COPYs into NOTs, so fanout is not checked
        let back = parse_with(&text, ParseOptions { allow_fanout: true }).unwrap();
        prop_assert_eq!(&back, &n);
        prop_assert_eq!(serialize(&back), text);
    }

    #[test]
    fn splitters_preserve_function_and_legalize(seed in any::<u64>()) {
        let n = loose(seed);
        let s = insert_splitters(&n);
        prop_assert!(s.is_legalized());
        prop_assert_eq!(s.outputs().len(), n.outputs().len());
        for bits in input_rows(n.inputs().len()) {
            prop_assert_eq!(s.eval_ideal(&bits), n.eval_ideal(&bits));
        }
        prop_assert_eq!(insert_splitters(&s), s);
    }

    #[test]
    fn camouflage_ignores_kind_and_bias(seed in any::<u64>(), bias_seed in any::<u64>()) {
        let n = netlist(seed, 6, 12);
        let m = rebias(&n, bias_seed);
        prop_assert!(views_identical(&camouflage_view(&n), &camouflage_view(&m)));
        prop_assert_eq!(camouflage_view(&n).to_json(), camouflage_view(&m).to_json());
    }

    #[test]
    fn parser_never_panics(text in "[a-z0-9 ;=>#\\-\\n.]{0,80}") {
        let _ = parse_with(&text, ParseOptions { allow_fanout: true });
    }
}

#[test]
fn single_multi_reader_net_depth_bound() {
    // one net read k times: depth grows by exactly ceil(log2 k)
    for k in 2..=9usize {
        let mut text = String::from("input a;");
        let mut outs = Vec::new();
        for i in 0..k {
            text.push_str(&format!(" gate g{i} NOT a -> y{i};"));
            outs.push(format!("y{i}"));
        }
        text.push_str(&format!(" output {};", outs.join(" ")));
        let n = parse_with(&text, ParseOptions { allow_fanout: true }).unwrap();
        let s = insert_splitters(&n);
        let bound = (k as f64).log2().ceil() as usize;
        assert_eq!(s.depth() - n.depth(), bound, "k = {k}");
        assert_eq!(s.gate_count() - n.gate_count(), 2 * k - 2);
    }
}

use htron_core::device::{CalibrationTable, DeviceParams};
use htron_core::gate::{input_rows, LogicEncoding};
use htron_core::netlist::{parse, random_netlist, Netlist, RandomShape};
use htron_core::sim::{settle_time, simulate, steady_state, SimConfig, Stimulus, Waveform};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn threshold() -> CalibrationTable {
    CalibrationTable::two_knot_anchor(110.0, 55.0).unwrap()
}

fn settled_outputs(n: &Netlist, bits: &[bool]) -> Vec<bool> {
    let enc = LogicEncoding::default();
    let cfg = SimConfig {
        t_end: settle_time(n, &DeviceParams::default()) + 1e-9,
        ..Default::default()
    };
    let trace = simulate(n, &Stimulus::constant(n, bits, &enc).unwrap(), &threshold(), &cfg).unwrap();
    trace.final_bits(n.outputs(), &enc)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn settled_transient_matches_steady_state(seed in any::<u64>()) {
        let n = random_netlist(&mut ChaCha8Rng::seed_from_u64(seed), RandomShape { max_inputs: 4, max_gates: 8 });
        for bits in input_rows(n.inputs().len()) {
            let steady = steady_state(&n, &bits, &threshold(), &LogicEncoding::default()).unwrap();
            prop_assert_eq!(&steady, &n.eval_ideal(&bits));
            prop_assert_eq!(settled_outputs(&n, &bits), steady);
        }
    }

    #[test]
    fn inverter_chain_polarity(len in 1usize..7, bit in any::<bool>()) {
        let mut text = String::from("input a;");
        let mut prev = "a".to_string();
        for i in 0..len {
            text.push_str(&format!(" gate g{i} NOT {prev} -> n{i};"));
            prev = format!("n{i}");
        }
        text.push_str(&format!(" output {prev};"));
        let n = parse(&text).unwrap();
        prop_assert_eq!(settled_outputs(&n, &[bit]), vec![bit ^ (len % 2 == 1)]);
    }

    #[test]
    fn outputs_are_causal(seed in any::<u64>(), t_ns in 1u32..20) {
        // inputs differ from the change sample on; no gate can respond within
        // one turn-on delay of it
        let n = random_netlist(&mut ChaCha8Rng::seed_from_u64(seed), RandomShape { max_inputs: 1, max_gates: 6 });
        let cfg = SimConfig { t_end: 40e-9, ..Default::default() };
        let step = Stimulus::new().with("x0", Waveform::new(vec![(0.0, 0.0), (t_ns as f64 * 1e-9, 55.0)]).unwrap());
        let base = Stimulus::new().with("x0", Waveform::constant(0.0));
        let a = simulate(&n, &step, &threshold(), &cfg).unwrap();
        let b = simulate(&n, &base, &threshold(), &cfg).unwrap();
        let k_change = (t_ns as usize) * 20;
        let k_gate = k_change + 6;
        for (na, nb) in a.nets.iter().zip(&b.nets) {
            let k = if n.inputs().contains(&na.net) { k_change } else { k_gate };
            prop_assert_eq!(&na.current[..k], &nb.current[..k]);
        }
    }
}

#[test]
fn simulation_is_deterministic() {
    let n = random_netlist(&mut ChaCha8Rng::seed_from_u64(11), RandomShape { max_inputs: 3, max_gates: 10 });
    let s = Stimulus::constant(&n, &vec![true; n.inputs().len()], &LogicEncoding::default()).unwrap();
    let cfg = SimConfig::default();
    let a = simulate(&n, &s, &threshold(), &cfg).unwrap().to_csv();
    let b = simulate(&n, &s, &threshold(), &cfg).unwrap().to_csv();
    assert_eq!(a, b);
}

#[test]
fn all_zero_stimulus_keeps_and_gate_low() {
    let n = parse("input a b; gate g AND2 a b -> y; output y;").unwrap();
    let s = Stimulus::constant(&n, &[false, false], &LogicEncoding::default()).unwrap();
    let trace = simulate(&n, &s, &threshold(), &SimConfig::default()).unwrap();
    assert!(trace.net("y").unwrap().iter().all(|&c| c == 0.0));
    assert!(trace.violations.is_empty());
}

#[test]
fn double_inversion_restores_input_after_two_delays() {
    let n = parse("input a; gate g1 NOT a -> m; gate g2 NOT m -> y; output y;").unwrap();
    let s = Stimulus::constant(&n, &[true], &LogicEncoding::default()).unwrap();
    let trace = simulate(&n, &s, &threshold(), &SimConfig::default()).unwrap();
    let y = trace.net("y").unwrap();
    assert!(*y.last().unwrap() > 27.5);
}

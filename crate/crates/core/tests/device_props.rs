use std::sync::Arc;

use htron_core::device::{CalibrationTable, DeviceInstance, DeviceParams, DeviceState, Knot};
use proptest::prelude::*;

fn monotone_table() -> impl Strategy<Value = CalibrationTable> {
    (2usize..8)
        .prop_flat_map(|n| {
            (
                prop::collection::vec(1.0f64..40.0, n),
                prop::collection::vec(0.0f64..20.0, n),
                10.0f64..200.0,
            )
        })
        .prop_map(|(gate_steps, drops, top)| {
            let mut g = 0.0;
            let mut c = top + drops.iter().sum::<f64>();
            let knots = gate_steps
                .iter()
                .zip(&drops)
                .map(|(dg, dc)| {
                    let k = Knot::new(g, c);
                    g += dg;
                    c -= dc;
                    k
                })
                .collect();
            CalibrationTable::new(knots).unwrap()
        })
}

fn device(table: CalibrationTable) -> DeviceInstance {
    DeviceInstance::new(DeviceParams::default(), Arc::new(table), 1e3).unwrap()
}

proptest! {
    #[test]
    fn critical_current_is_non_increasing(t in monotone_table(), a in -50.0f64..400.0, b in -50.0f64..400.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(t.critical_current(hi) <= t.critical_current(lo) + 1e-9);
    }

    #[test]
    fn interpolation_hits_every_knot(t in monotone_table()) {
        for k in t.knots() {
            prop_assert!((t.critical_current(k.i_gate) - k.i_ch_crit).abs() < 1e-9);
        }
    }

    #[test]
    fn steering_conserves_channel_bias(i_b2 in 0.0f64..200.0, steps in 0usize..400, gate in -200.0f64..200.0) {
        let mut d = device(CalibrationTable::two_knot_anchor(110.0, 55.0).unwrap());
        for _ in 0..steps {
            let out = d.step(gate, i_b2, 50e-12).unwrap();
            prop_assert!((out.i_channel + out.i_load - i_b2).abs() < 1e-9);
            prop_assert!(out.i_load >= 0.0 && out.i_load <= i_b2);
        }
    }

    #[test]
    fn turn_on_and_reset_take_their_step_counts(k in 2usize..=30) {
        let params = DeviceParams::default();
        let dt = params.turn_on_delay / k as f64;
        let mut d = device(CalibrationTable::two_knot_anchor(110.0, 55.0).unwrap());
        let on = DeviceParams::steps_for(params.turn_on_delay, dt);
        prop_assert_eq!(on, k);
        for _ in 0..on - 1 {
            d.step(120.0, 55.0, dt).unwrap();
            prop_assert!(!d.state().steers_to_load());
        }
        d.step(120.0, 55.0, dt).unwrap();
        prop_assert_eq!(d.state(), DeviceState::Resistive);
        let off = DeviceParams::steps_for(params.reset_time, dt);
        for _ in 0..off - 1 {
            d.step(0.0, 55.0, dt).unwrap();
            prop_assert!(d.state().steers_to_load());
        }
        d.step(0.0, 55.0, dt).unwrap();
        prop_assert_eq!(d.state(), DeviceState::Superconducting);
    }

    #[test]
    fn gate_polarity_does_not_matter(g in 0.0f64..300.0) {
        let t = CalibrationTable::two_knot_anchor(110.0, 55.0).unwrap();
        let d = device(t);
        prop_assert_eq!(d.triggered(g, 55.0), d.triggered(-g, 55.0));
    }
}

use htron_core::device::{CalibrationTable, CriticalCurrentModel, Spread, SwitchingSampleSet};
use htron_core::gate::{bias_for, GateKind, LogicEncoding};
use htron_core::margins::{monte_carlo_margin, worst_case_margin};
use proptest::prelude::*;

fn table() -> CalibrationTable {
    CalibrationTable::two_knot_anchor(110.0, 55.0).unwrap()
}

fn kind_strategy() -> impl Strategy<Value = GateKind> {
    prop::sample::select(GateKind::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    // biases stay inside the window; outside it a wider spread rescues
    // combinations that fail nominally
    #[test]
    fn error_rate_grows_with_spread(kind in kind_strategy(), offset in -9.0f64..9.0, seed in any::<u64>(), normal in any::<bool>()) {
        let enc = LogicEncoding::default();
        let bias = bias_for(kind).with_i_b1(bias_for(kind).i_b1 + offset);
        let spread = |w: f64| if normal { Spread::Normal { sigma: w } } else { Spread::Uniform { half_width: w } };
        let mut last_errors: Option<Vec<u64>> = None;
        let mut last_margin = f64::INFINITY;
        for w in [1.0, 5.0, 15.0] {
            let model = CriticalCurrentModel::parametric(table(), spread(w)).unwrap();
            let r = monte_carlo_margin(kind, &bias, &model, &enc, 400, seed).unwrap();
            let errors: Vec<u64> = r.combos.iter().map(|c| c.errors).collect();
            if let Some(prev) = &last_errors {
                for (a, b) in prev.iter().zip(&errors) {
                    prop_assert!(b >= a, "{kind} w={w}: {prev:?} -> {errors:?}");
                }
            }
            prop_assert!(r.worst_case_margin <= last_margin);
            last_margin = r.worst_case_margin;
            last_errors = Some(errors);
        }
    }

    #[test]
    fn reports_are_reproducible(kind in kind_strategy(), seed in any::<u64>()) {
        let model = CriticalCurrentModel::parametric(table(), Spread::Normal { sigma: 6.0 }).unwrap();
        let enc = LogicEncoding::default();
        let a = monte_carlo_margin(kind, &bias_for(kind), &model, &enc, 500, seed).unwrap();
        let b = monte_carlo_margin(kind, &bias_for(kind), &model, &enc, 500, seed).unwrap();
        prop_assert_eq!(a.to_csv(), b.to_csv());
        prop_assert!(a.combos.iter().all(|c| (0.0..=1.0).contains(&c.error_rate)));
    }

    #[test]
    fn vanishing_spread_inside_window_is_error_free(kind in kind_strategy(), seed in any::<u64>()) {
        let model = CriticalCurrentModel::parametric(table(), Spread::Uniform { half_width: 1e-3 }).unwrap();
        let r = monte_carlo_margin(kind, &bias_for(kind), &model, &LogicEncoding::default(), 1000, seed).unwrap();
        prop_assert!(r.combos.iter().all(|c| c.errors == 0));
    }
}

#[test]
fn empirical_samples_drive_the_analysis() {
    // +-2 uA scatter around the anchored line, flat past 165 uA, out to the
    // largest total a gate can see
    let mut rows = Vec::new();
    for g in [0.0f64, 55.0, 110.0, 165.0, 180.0] {
        let median = 110.0 - g.min(165.0) / 2.0;
        for d in [-2.0, -1.0, 0.0, 1.0, 2.0] {
            rows.push((g, median + d));
        }
    }
    let model = CriticalCurrentModel::empirical(SwitchingSampleSet::from_rows(rows).unwrap()).unwrap();
    let enc = LogicEncoding::default();
    for kind in GateKind::ALL {
        let r = monte_carlo_margin(kind, &bias_for(kind), &model, &enc, 2000, 9).unwrap();
        assert!(r.combos.iter().all(|c| c.errors == 0), "{kind}");
        assert!(worst_case_margin(&bias_for(kind), &model, &enc) > 0.0);
    }
}

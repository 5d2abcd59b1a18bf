use htron_core::device::CalibrationTable;
use htron_core::gate::{input_rows, LogicEncoding};
use htron_core::synth::{full_adder, map_expression, parse_expr, verify_equivalence, Basis, BoolExpr};
use proptest::prelude::*;

fn expr_strategy() -> impl Strategy<Value = BoolExpr> {
    let leaf = prop_oneof![
        8 => (0usize..8).prop_map(|i| BoolExpr::var(format!("v{i}"))),
        1 => any::<bool>().prop_map(BoolExpr::Const),
    ];
    leaf.prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(BoolExpr::not),
            prop::collection::vec(inner.clone(), 2..4).prop_map(BoolExpr::And),
            prop::collection::vec(inner.clone(), 2..4).prop_map(BoolExpr::Or),
            prop::collection::vec(inner.clone(), 2..4).prop_map(BoolExpr::Xor),
            (inner.clone(), inner.clone(), inner).prop_map(|(a, b, c)| BoolExpr::maj(a, b, c)),
        ]
    })
}

fn basis_strategy() -> impl Strategy<Value = Basis> {
    prop::sample::select(Basis::ALL.to_vec())
}

fn threshold() -> CalibrationTable {
    CalibrationTable::two_knot_anchor(110.0, 55.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn mapping_is_sound(e in expr_strategy(), basis in basis_strategy()) {
        let n = map_expression(&e, basis).unwrap();
        prop_assert!(n.is_legalized());
        prop_assert_eq!(
            verify_equivalence(&n, &e, &threshold(), &LogicEncoding::default()).unwrap(),
            None
        );
    }

    #[test]
    fn display_parse_round_trip(e in expr_strategy()) {
        prop_assert_eq!(parse_expr(&e.to_string()).unwrap(), e);
    }

    #[test]
    fn simplify_keeps_semantics(e in expr_strategy()) {
        let vars = e.variables();
        let s = e.simplify();
        for bits in input_rows(vars.len()) {
            prop_assert_eq!(s.eval(&vars, &bits), e.eval(&vars, &bits));
        }
    }
}

#[test]
fn full_adder_depth_ordering() {
    let levels = [Basis::MajNot, Basis::Nand2, Basis::Nor2].map(|b| full_adder(b).report.levels);
    assert!(levels[0] < levels[1] && levels[1] < levels[2]);
}

#[test]
fn textbook_examples() {
    let enc = LogicEncoding::default();
    let maj = parse_expr("maj(a,b,c)").unwrap();
    let n = map_expression(&maj, Basis::Nand2).unwrap();
    assert_eq!(verify_equivalence(&n, &maj, &threshold(), &enc).unwrap(), None);
    let x = parse_expr("xor(a,b)").unwrap();
    let n = map_expression(&x, Basis::MajNot).unwrap();
    assert_eq!(verify_equivalence(&n, &x, &threshold(), &enc).unwrap(), None);
    let chain = parse_expr("not(not(not(a)))").unwrap().simplify();
    assert_eq!(chain, parse_expr("not(a)").unwrap());
}

//! Technology mapping of Boolean expressions onto hTron gates and the
//! majority versus NAND/NOR full-adder comparison.

mod basis;
mod expr;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::device::CalibrationTable;
use crate::gate::{bits_to_string, input_rows, GateKind, LogicEncoding};
use crate::netlist::{insert_splitters, Netlist, TIE_HIGH, TIE_LOW};
use crate::sim::{steady_state, SimError};
use basis::{Circuit, Sig};

pub use expr::{parse_expr, BoolExpr};

/// Exhaustive certification limit.
pub const MAX_VARIABLES: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("column {column}: {message}")]
    Parse { column: usize, message: String },
    #[error("malformed expression: {0}")]
    Malformed(String),
    #[error("{found} variables exceed the limit of {max} for exhaustive certification")]
    TooManyVariables { found: usize, max: usize },
    #[error("unknown basis `{0}` (expected HTRON, MAJ_NOT, NAND2 or NOR2)")]
    UnknownBasis(String),
    #[error("netlist has {0} outputs; equivalence needs exactly one")]
    OutputCount(usize),
    #[error("expression variable `{0}` is not a netlist input")]
    MissingInput(String),
    #[error("mapped netlist disagrees with the expression at input {0}")]
    Uncertified(String),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Target gate set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Basis {
    /// All five hTron kinds.
    Htron,
    /// Three-input majority and inverter.
    MajNot,
    Nand2,
    Nor2,
}

impl Basis {
    pub const ALL: [Basis; 4] = [Basis::Htron, Basis::MajNot, Basis::Nand2, Basis::Nor2];

    pub fn name(self) -> &'static str {
        match self {
            Basis::Htron => "HTRON",
            Basis::MajNot => "MAJ_NOT",
            Basis::Nand2 => "NAND2",
            Basis::Nor2 => "NOR2",
        }
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Basis {
    type Err = SynthError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_uppercase().replace('-', "_");
        match key.as_str() {
            "HTRON" => Ok(Basis::Htron),
            "MAJ_NOT" | "MAJ" | "MIG" => Ok(Basis::MajNot),
            "NAND2" | "NAND" => Ok(Basis::Nand2),
            "NOR2" | "NOR" => Ok(Basis::Nor2),
            _ => Err(SynthError::UnknownBasis(s.to_string())),
        }
    }
}

/// Longest input-to-output path counted in gates, splitters included.
pub fn depth(netlist: &Netlist) -> usize {
    netlist.depth()
}

pub fn gate_count(netlist: &Netlist) -> usize {
    netlist.gate_count()
}

fn output_name(vars: &[String], base: &str) -> String {
    let mut name = base.to_string();
    while vars.contains(&name) {
        name.push('_');
    }
    name
}

fn certify(netlist: &Netlist, expr: &BoolExpr) -> Result<(), SynthError> {
    let vars = netlist.inputs();
    for bits in input_rows(vars.len()) {
        if netlist.eval_ideal(&bits)[0] != expr.eval(vars, &bits) {
            return Err(SynthError::Uncertified(bits_to_string(&bits)));
        }
    }
    Ok(())
}

/// Maps `expr` onto `basis` gates realized as hTron cells at nominal bias,
/// with fanout legalized. Inputs follow the expression's variable order and
/// the single output is named `y`. The result is certified against the
/// expression over every input combination.
pub fn map_expression(expr: &BoolExpr, basis: Basis) -> Result<Netlist, SynthError> {
    expr.validate()?;
    let vars = expr.variables();
    if vars.len() > MAX_VARIABLES {
        return Err(SynthError::TooManyVariables {
            found: vars.len(),
            max: MAX_VARIABLES,
        });
    }
    let mut circuit = Circuit::new(vars.clone());
    let root = circuit.build(basis, &expr.simplify());
    let out = output_name(&vars, "y");
    let netlist = insert_splitters(&circuit.to_netlist("", &[(root, out)]));
    certify(&netlist, expr)?;
    Ok(netlist)
}

/// Boolean function of one netlist net in terms of the primary inputs,
/// using each gate's ideal function. Shared subcircuits are duplicated.
pub fn netlist_expression(netlist: &Netlist, net: &str) -> Option<BoolExpr> {
    match net {
        TIE_LOW => return Some(BoolExpr::Const(false)),
        TIE_HIGH => return Some(BoolExpr::Const(true)),
        _ => {}
    }
    if netlist.inputs().iter().any(|n| n == net) {
        return Some(BoolExpr::var(net));
    }
    let g = netlist.gates().iter().find(|g| g.output == net)?;
    let mut args = g
        .inputs
        .iter()
        .map(|n| netlist_expression(netlist, n))
        .collect::<Option<Vec<_>>>()?;
    Some(match g.kind {
        GateKind::Copy => args.pop()?,
        GateKind::Not => BoolExpr::not(args.pop()?),
        GateKind::And2 => BoolExpr::And(args),
        GateKind::Or2 => BoolExpr::Or(args),
        GateKind::Maj3 => {
            let [a, b, c] = <[BoolExpr; 3]>::try_from(args).ok()?;
            BoolExpr::maj(a, b, c)
        }
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    pub inputs: Vec<bool>,
    pub netlist_output: bool,
    pub expected: bool,
}

impl fmt::Display for Counterexample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "inputs {}: netlist gives {}, expression gives {}",
            bits_to_string(&self.inputs),
            self.netlist_output as u8,
            self.expected as u8
        )
    }
}

/// Exhaustive comparison of a single-output netlist (steady-state response
/// on `table`) with `reference`. Rows are visited in canonical order, so the
/// counterexample is the first failing input vector. Inputs absent from the
/// expression are enumerated too.
pub fn verify_equivalence(
    netlist: &Netlist,
    reference: &BoolExpr,
    table: &CalibrationTable,
    enc: &LogicEncoding,
) -> Result<Option<Counterexample>, SynthError> {
    if netlist.outputs().len() != 1 {
        return Err(SynthError::OutputCount(netlist.outputs().len()));
    }
    let vars = netlist.inputs();
    if vars.len() > MAX_VARIABLES {
        return Err(SynthError::TooManyVariables {
            found: vars.len(),
            max: MAX_VARIABLES,
        });
    }
    if let Some(v) = reference.variables().into_iter().find(|v| !vars.contains(v)) {
        return Err(SynthError::MissingInput(v));
    }
    for bits in input_rows(vars.len()) {
        let got = steady_state(netlist, &bits, table, enc)?[0];
        let expected = reference.eval(vars, &bits);
        if got != expected {
            return Ok(Some(Counterexample {
                inputs: bits,
                netlist_output: got,
                expected,
            }));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AdderReport {
    pub basis: Basis,
    /// Logic levels counting each basis gate once.
    pub levels: usize,
    /// Basis gates, shared between sum and carry.
    pub gate_count: usize,
    /// Levels of the splitter-legalized hTron realization.
    pub htron_levels: usize,
    /// Cells in the splitter-legalized hTron realization.
    pub htron_gates: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FullAdder {
    pub sum: Netlist,
    pub carry: Netlist,
    /// Both outputs sharing one circuit.
    pub combined: Netlist,
    pub report: AdderReport,
}

/// Curated one-bit full adders (inputs `a b c`).
///
/// * MAJ_NOT: `carry = MAJ(a,b,c)`, `sum = MAJ(¬carry, MAJ(a,b,¬c), c)`,
///   3 levels.
/// * NAND2: the nine-NAND adder (two four-NAND XORs sharing carry logic),
///   6 levels.
/// * NOR2: two four-NOR XNORs with inverters and an OR-of-ANDs carry,
///   7 levels.
/// * HTRON: `carry = MAJ3`, `sum` as the MAJ_NOT form.
///
/// Each is certified over all eight input combinations.
pub fn full_adder(basis: Basis) -> FullAdder {
    let vars: Vec<String> = ["a", "b", "c"].map(String::from).to_vec();
    let mut k = Circuit::new(vars.clone());
    let (a, b, c) = (k.input(0), k.input(1), k.input(2));
    let t0 = Sig::Tie(false);
    let (sum, carry) = match basis {
        Basis::Htron | Basis::MajNot => {
            let m = k.maj3(a, b, c);
            let nc = k.not(c);
            let m2 = k.maj3(a, b, nc);
            let nm = k.not(m);
            (k.maj3(nm, m2, c), m)
        }
        Basis::Nand2 => {
            let n1 = k.nand2(a, b);
            let n2 = k.nand2(a, n1);
            let n3 = k.nand2(b, n1);
            let s1 = k.nand2(n2, n3);
            let n4 = k.nand2(s1, c);
            let n5 = k.nand2(s1, n4);
            let n6 = k.nand2(c, n4);
            (k.nand2(n5, n6), k.nand2(n4, n1))
        }
        Basis::Nor2 => {
            let n1 = k.nor2(a, b);
            let n2 = k.nor2(a, n1);
            let n3 = k.nor2(b, n1);
            let xn = k.nor2(n2, n3);
            let x = k.nor2(xn, t0);
            let nc = k.nor2(c, t0);
            let m1 = k.nor2(x, nc);
            let m2 = k.nor2(x, m1);
            let m3 = k.nor2(nc, m1);
            let sum = k.nor2(m2, m3);
            let cx = k.nor2(xn, nc);
            let ab = k.nor2(n1, x);
            let t = k.nor2(ab, cx);
            (sum, k.nor2(t, t0))
        }
    };
    for bits in input_rows(3) {
        let total = bits.iter().filter(|&&x| x).count();
        assert_eq!(
            k.eval(&[sum, carry], &bits),
            [total % 2 == 1, total >= 2],
            "{basis} full adder at {}",
            bits_to_string(&bits)
        );
    }
    let name = format!("fa_{}", basis.name().to_ascii_lowercase());
    let combined = insert_splitters(&k.to_netlist(&name, &[(sum, "sum".into()), (carry, "carry".into())]));
    let report = AdderReport {
        basis,
        levels: k.levels(&[sum, carry]),
        gate_count: k.gate_count(&[sum, carry]),
        htron_levels: combined.depth(),
        htron_gates: combined.gate_count(),
    };
    FullAdder {
        sum: insert_splitters(&k.to_netlist(&format!("{name}_sum"), &[(sum, "sum".into())])),
        carry: insert_splitters(&k.to_netlist(&format!("{name}_carry"), &[(carry, "carry".into())])),
        combined,
        report,
    }
}

/// `1 − levels_majority / levels_other`, as a fraction.
pub fn level_reduction(majority: &AdderReport, other: &AdderReport) -> f64 {
    1.0 - majority.levels as f64 / other.levels as f64
}

/// CSV with header `basis,levels,gate_count`.
pub fn adder_report_csv(reports: &[AdderReport]) -> String {
    let mut out = String::from("basis,levels,gate_count\n");
    for r in reports {
        out.push_str(&format!("{},{},{}\n", r.basis, r.levels, r.gate_count));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn threshold() -> CalibrationTable {
        CalibrationTable::two_knot_anchor(110.0, 55.0).unwrap()
    }

    fn e(s: &str) -> BoolExpr {
        parse_expr(s).unwrap()
    }

    #[test]
    fn and_maps_to_one_gate() {
        let n = map_expression(&e("and(a, b)"), Basis::Htron).unwrap();
        assert_eq!(gate_count(&n), 1);
        assert_eq!(depth(&n), 1);
        assert_eq!(n.gates()[0].kind, GateKind::And2);
        assert_eq!(n.outputs(), ["y"]);
    }

    #[test]
    fn each_basis_certifies_on_the_device() {
        let enc = LogicEncoding::default();
        for basis in Basis::ALL {
            for s in ["maj(a, b, c)", "xor(a, b)", "or(not(a), and(b, c), xor(a, c))", "not(a)", "1"] {
                let n = map_expression(&e(s), basis).unwrap();
                assert!(n.is_legalized());
                assert_eq!(verify_equivalence(&n, &e(s), &threshold(), &enc).unwrap(), None, "{basis} {s}");
            }
        }
    }

    #[test]
    fn nand_basis_uses_no_majority() {
        let n = map_expression(&e("maj(a, b, c)"), Basis::Nand2).unwrap();
        assert!(n.gates().iter().all(|g| g.kind != GateKind::Maj3 && g.kind != GateKind::Or2));
        let n = map_expression(&e("xor(a, b)"), Basis::MajNot).unwrap();
        assert!(n
            .gates()
            .iter()
            .all(|g| matches!(g.kind, GateKind::Maj3 | GateKind::Not | GateKind::Copy)));
    }

    #[test]
    fn counterexample_is_first_failing_row() {
        let n = map_expression(&e("and(a, b)"), Basis::Htron).unwrap();
        let cex = verify_equivalence(&n, &e("or(a, b)"), &threshold(), &LogicEncoding::default())
            .unwrap()
            .unwrap();
        assert_eq!(bits_to_string(&cex.inputs), "01");
        assert!(!cex.netlist_output && cex.expected);
    }

    #[test]
    fn expression_of_mapped_netlist() {
        let src = e("xor(a, maj(a, b, not(c)))");
        let n = map_expression(&src, Basis::MajNot).unwrap();
        let back = netlist_expression(&n, "y").unwrap();
        for bits in input_rows(3) {
            assert_eq!(back.eval(n.inputs(), &bits), src.eval(n.inputs(), &bits));
        }
        assert_eq!(netlist_expression(&n, "nowhere"), None);
    }

    #[test]
    fn variable_limit() {
        let vars: Vec<BoolExpr> = (0..17).map(|i| BoolExpr::var(format!("x{i}"))).collect();
        assert_eq!(
            map_expression(&BoolExpr::Xor(vars), Basis::Htron),
            Err(SynthError::TooManyVariables { found: 17, max: 16 })
        );
    }

    #[test]
    fn adder_levels_reproduce_reductions() {
        let [m, nand, nor] = [Basis::MajNot, Basis::Nand2, Basis::Nor2].map(|b| full_adder(b).report);
        assert_eq!((m.levels, nand.levels, nor.levels), (3, 6, 7));
        assert_eq!((m.gate_count, nand.gate_count, nor.gate_count), (5, 9, 14));
        assert!((level_reduction(&m, &nand) * 100.0 - 50.0).abs() < 1e-9);
        assert!((level_reduction(&m, &nor) * 100.0 - 57.142857).abs() < 1e-4);
        assert_eq!(
            adder_report_csv(&[m, nand, nor]),
            "basis,levels,gate_count\nMAJ_NOT,3,5\nNAND2,6,9\nNOR2,7,14\n"
        );
    }

    #[test]
    fn adder_netlists_add_correctly() {
        let enc = LogicEncoding::default();
        for basis in Basis::ALL {
            let fa = full_adder(basis);
            assert!(fa.combined.is_legalized());
            for bits in input_rows(3) {
                let total = bits.iter().filter(|&&x| x).count();
                let s = steady_state(&fa.sum, &bits, &threshold(), &enc).unwrap();
                let c = steady_state(&fa.carry, &bits, &threshold(), &enc).unwrap();
                assert_eq!((s[0], c[0]), (total % 2 == 1, total >= 2), "{basis}");
            }
        }
    }
}

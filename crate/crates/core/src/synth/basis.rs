//! Gate-level circuits over a chosen basis and their lowering to hTron
//! netlists.

use std::collections::{HashMap, HashSet};

use super::{Basis, BoolExpr};
use crate::gate::GateKind;
use crate::netlist::{Gate, Netlist, TIE_HIGH, TIE_LOW};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) enum Sig {
    Tie(bool),
    Input(usize),
    Node(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) enum Op {
    Not,
    And2,
    Or2,
    Maj3,
    Nand2,
    Nor2,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Node {
    op: Op,
    args: Vec<Sig>,
}

/// Hash-consed DAG of basis gates. Every constructor folds constants and
/// trivial cases, so structurally equal subcircuits are shared.
#[derive(Debug, Clone, Default)]
pub(crate) struct Circuit {
    inputs: Vec<String>,
    nodes: Vec<Node>,
    memo: HashMap<Node, usize>,
}

const T0: Sig = Sig::Tie(false);
const T1: Sig = Sig::Tie(true);

type Combine = dyn FnMut(&mut Circuit, Sig, Sig) -> Sig;

impl Circuit {
    pub(crate) fn new(inputs: Vec<String>) -> Self {
        Self {
            inputs,
            ..Default::default()
        }
    }

    pub(crate) fn input(&self, i: usize) -> Sig {
        Sig::Input(i)
    }

    fn node(&mut self, op: Op, mut args: Vec<Sig>) -> Sig {
        args.sort_unstable();
        let node = Node { op, args };
        if let Some(&i) = self.memo.get(&node) {
            return Sig::Node(i);
        }
        self.nodes.push(node.clone());
        self.memo.insert(node, self.nodes.len() - 1);
        Sig::Node(self.nodes.len() - 1)
    }

    /// `Some(y)` when `x` is an inverter of `y` in any basis.
    fn inverse_of(&self, x: Sig) -> Option<Sig> {
        let Sig::Node(i) = x else { return None };
        let n = &self.nodes[i];
        match (n.op, n.args.as_slice()) {
            (Op::Not, [y]) => Some(*y),
            (Op::Nand2, [a, b]) if *b == T1 => Some(*a),
            (Op::Nand2, [a, b]) if *a == T1 => Some(*b),
            (Op::Nor2, [a, b]) if *a == T0 => Some(*b),
            (Op::Nor2, [a, b]) if *b == T0 => Some(*a),
            _ => None,
        }
    }

    fn complementary(&self, a: Sig, b: Sig) -> bool {
        self.inverse_of(a) == Some(b) || self.inverse_of(b) == Some(a)
    }

    pub(crate) fn not(&mut self, x: Sig) -> Sig {
        match x {
            Sig::Tie(b) => Sig::Tie(!b),
            _ => match self.inverse_of(x) {
                Some(y) => y,
                None => self.node(Op::Not, vec![x]),
            },
        }
    }

    pub(crate) fn and2(&mut self, a: Sig, b: Sig) -> Sig {
        match (a, b) {
            (T0, _) | (_, T0) => T0,
            (T1, x) | (x, T1) => x,
            _ if a == b => a,
            _ if self.complementary(a, b) => T0,
            _ => self.node(Op::And2, vec![a, b]),
        }
    }

    pub(crate) fn or2(&mut self, a: Sig, b: Sig) -> Sig {
        match (a, b) {
            (T1, _) | (_, T1) => T1,
            (T0, x) | (x, T0) => x,
            _ if a == b => a,
            _ if self.complementary(a, b) => T1,
            _ => self.node(Op::Or2, vec![a, b]),
        }
    }

    pub(crate) fn maj3(&mut self, a: Sig, b: Sig, c: Sig) -> Sig {
        for (x, y, z) in [(a, b, c), (a, c, b), (b, c, a)] {
            if x == y {
                return x;
            }
            if self.complementary(x, y) || matches!((x, y), (T0, T1) | (T1, T0)) {
                return z;
            }
        }
        self.node(Op::Maj3, vec![a, b, c])
    }

    /// NAND; `nand2(x, 1)` is this basis's inverter.
    pub(crate) fn nand2(&mut self, a: Sig, b: Sig) -> Sig {
        match (a, b) {
            (T0, _) | (_, T0) => T1,
            (T1, T1) => T0,
            _ if a == b => self.node(Op::Nand2, vec![a, T1]),
            _ if self.complementary(a, b) => T1,
            _ => self.node(Op::Nand2, vec![a, b]),
        }
    }

    /// NOR; `nor2(x, 0)` is this basis's inverter.
    pub(crate) fn nor2(&mut self, a: Sig, b: Sig) -> Sig {
        match (a, b) {
            (T1, _) | (_, T1) => T0,
            (T0, T0) => T1,
            _ if a == b => self.node(Op::Nor2, vec![a, T0]),
            _ if self.complementary(a, b) => T0,
            _ => self.node(Op::Nor2, vec![a, b]),
        }
    }

    /// Inverter native to `basis`, cancelling double inversion.
    pub(crate) fn neg(&mut self, basis: Basis, x: Sig) -> Sig {
        if let Some(y) = self.inverse_of(x) {
            return y;
        }
        match basis {
            Basis::Htron | Basis::MajNot => self.not(x),
            Basis::Nand2 => self.nand2(x, T1),
            Basis::Nor2 => self.nor2(x, T0),
        }
    }

    fn and_in(&mut self, basis: Basis, a: Sig, b: Sig) -> Sig {
        match basis {
            Basis::Htron => self.and2(a, b),
            Basis::MajNot => self.maj3(a, b, T0),
            Basis::Nand2 => {
                let n = self.nand2(a, b);
                self.neg(basis, n)
            }
            Basis::Nor2 => {
                let (na, nb) = (self.neg(basis, a), self.neg(basis, b));
                self.nor2(na, nb)
            }
        }
    }

    fn or_in(&mut self, basis: Basis, a: Sig, b: Sig) -> Sig {
        match basis {
            Basis::Htron => self.or2(a, b),
            Basis::MajNot => self.maj3(a, b, T1),
            Basis::Nand2 => {
                let (na, nb) = (self.neg(basis, a), self.neg(basis, b));
                self.nand2(na, nb)
            }
            Basis::Nor2 => {
                let n = self.nor2(a, b);
                self.neg(basis, n)
            }
        }
    }

    fn xor_in(&mut self, basis: Basis, a: Sig, b: Sig) -> Sig {
        match basis {
            Basis::Htron => {
                let o = self.or2(a, b);
                let n = self.and2(a, b);
                let nn = self.not(n);
                self.and2(o, nn)
            }
            Basis::MajNot => {
                let lo = self.maj3(a, b, T0);
                let hi = self.maj3(a, b, T1);
                let nlo = self.not(lo);
                self.maj3(nlo, hi, T0)
            }
            Basis::Nand2 => {
                let n1 = self.nand2(a, b);
                let n2 = self.nand2(a, n1);
                let n3 = self.nand2(b, n1);
                self.nand2(n2, n3)
            }
            Basis::Nor2 => {
                let n1 = self.nor2(a, b);
                let n2 = self.nor2(a, n1);
                let n3 = self.nor2(b, n1);
                let xn = self.nor2(n2, n3);
                self.neg(basis, xn)
            }
        }
    }

    fn maj_in(&mut self, basis: Basis, a: Sig, b: Sig, c: Sig) -> Sig {
        match basis {
            Basis::Htron | Basis::MajNot => self.maj3(a, b, c),
            // MAJ = NAND3(NAND(a,b), NAND(b,c), NAND(a,c)), and the NOR dual
            Basis::Nand2 => {
                let (p, q, r) = (self.nand2(a, b), self.nand2(b, c), self.nand2(a, c));
                let pq = self.nand2(p, q);
                let and_pq = self.neg(basis, pq);
                self.nand2(and_pq, r)
            }
            Basis::Nor2 => {
                let (p, q, r) = (self.nor2(a, b), self.nor2(b, c), self.nor2(a, c));
                let pq = self.nor2(p, q);
                let or_pq = self.neg(basis, pq);
                self.nor2(or_pq, r)
            }
        }
    }

    /// Balanced pairwise reduction keeps n-ary operators at log depth.
    fn reduce(&mut self, mut sigs: Vec<Sig>, f: &mut dyn FnMut(&mut Self, Sig, Sig) -> Sig) -> Sig {
        while sigs.len() > 1 {
            let mut next = Vec::with_capacity(sigs.len().div_ceil(2));
            for pair in sigs.chunks(2) {
                next.push(if pair.len() == 2 { f(self, pair[0], pair[1]) } else { pair[0] });
            }
            sigs = next;
        }
        sigs[0]
    }

    /// Builds `expr` from `basis` gates. Variables resolve by name against
    /// the circuit inputs.
    pub(crate) fn build(&mut self, basis: Basis, expr: &BoolExpr) -> Sig {
        match expr {
            BoolExpr::Var(v) => Sig::Input(
                self.inputs
                    .iter()
                    .position(|n| n == v)
                    .expect("variable declared as circuit input"),
            ),
            BoolExpr::Const(b) => Sig::Tie(*b),
            BoolExpr::Not(x) => {
                let s = self.build(basis, x);
                self.neg(basis, s)
            }
            BoolExpr::And(es) | BoolExpr::Or(es) | BoolExpr::Xor(es) => {
                let sigs: Vec<Sig> = es.iter().map(|e| self.build(basis, e)).collect();
                let mut f: Box<Combine> = match expr {
                    BoolExpr::And(_) => Box::new(move |c: &mut Self, a, b| c.and_in(basis, a, b)),
                    BoolExpr::Or(_) => Box::new(move |c: &mut Self, a, b| c.or_in(basis, a, b)),
                    _ => Box::new(move |c: &mut Self, a, b| c.xor_in(basis, a, b)),
                };
                self.reduce(sigs, &mut *f)
            }
            BoolExpr::Maj(es) => {
                let [a, b, c] = [0, 1, 2].map(|i| self.build(basis, &es[i]));
                self.maj_in(basis, a, b, c)
            }
        }
    }

    fn reachable(&self, roots: &[Sig]) -> Vec<bool> {
        let mut live = vec![false; self.nodes.len()];
        let mut stack: Vec<usize> = roots
            .iter()
            .filter_map(|s| match s {
                Sig::Node(i) => Some(*i),
                _ => None,
            })
            .collect();
        while let Some(i) = stack.pop() {
            if std::mem::replace(&mut live[i], true) {
                continue;
            }
            for a in &self.nodes[i].args {
                if let Sig::Node(j) = a {
                    stack.push(*j);
                }
            }
        }
        live
    }

    /// Basis-level gates reachable from `roots`.
    pub(crate) fn gate_count(&self, roots: &[Sig]) -> usize {
        self.reachable(roots).into_iter().filter(|&l| l).count()
    }

    /// Longest root path in basis gates.
    pub(crate) fn levels(&self, roots: &[Sig]) -> usize {
        let mut level = vec![0usize; self.nodes.len()];
        for (i, n) in self.nodes.iter().enumerate() {
            level[i] = 1 + n
                .args
                .iter()
                .map(|a| match a {
                    Sig::Node(j) => level[*j],
                    _ => 0,
                })
                .max()
                .unwrap_or(0);
        }
        roots
            .iter()
            .map(|s| match s {
                Sig::Node(i) => level[*i],
                _ => 0,
            })
            .max()
            .unwrap_or(0)
    }

    pub(crate) fn eval(&self, roots: &[Sig], bits: &[bool]) -> Vec<bool> {
        let mut value = Vec::with_capacity(self.nodes.len());
        let read = |s: &Sig, value: &Vec<bool>| match *s {
            Sig::Tie(b) => b,
            Sig::Input(i) => bits[i],
            Sig::Node(j) => value[j],
        };
        for n in &self.nodes {
            let a: Vec<bool> = n.args.iter().map(|s| read(s, &value)).collect();
            let v = match n.op {
                Op::Not => !a[0],
                Op::And2 => a[0] && a[1],
                Op::Or2 => a[0] || a[1],
                Op::Maj3 => a.iter().filter(|&&x| x).count() >= 2,
                Op::Nand2 => !(a[0] && a[1]),
                Op::Nor2 => !(a[0] || a[1]),
            };
            value.push(v);
        }
        roots.iter().map(|s| read(s, &value)).collect()
    }

    /// Lowers to hTron gates with fanout left unlegalized. NAND/NOR become
    /// AND2/OR2 followed by NOT, or a single NOT when one operand is the
    /// inverter tie. A root that is not a gate gets a COPY so every output
    /// is a named gate net.
    pub(crate) fn to_netlist(&self, name: &str, roots: &[(Sig, String)]) -> Netlist {
        let root_sigs: Vec<Sig> = roots.iter().map(|(s, _)| *s).collect();
        let live = self.reachable(&root_sigs);
        let mut taken: HashSet<String> = self.inputs.iter().cloned().collect();
        taken.extend(roots.iter().map(|(_, n)| n.clone()));
        let mut counter = 0usize;
        let mut fresh = |taken: &mut HashSet<String>| loop {
            counter += 1;
            let c = format!("n{counter}");
            if taken.insert(c.clone()) {
                return c;
            }
        };

        // first root naming a node wins that node's net name
        let mut net_of: HashMap<usize, String> = HashMap::new();
        let mut copies: Vec<(Sig, String)> = Vec::new();
        for (s, out) in roots {
            match s {
                Sig::Node(i) if !net_of.contains_key(i) => {
                    net_of.insert(*i, out.clone());
                }
                _ => copies.push((*s, out.clone())),
            }
        }
        for (i, &l) in live.iter().enumerate() {
            if l && !net_of.contains_key(&i) {
                let n = fresh(&mut taken);
                net_of.insert(i, n);
            }
        }

        let net = |s: Sig, net_of: &HashMap<usize, String>| -> String {
            match s {
                Sig::Tie(false) => TIE_LOW.to_string(),
                Sig::Tie(true) => TIE_HIGH.to_string(),
                Sig::Input(k) => self.inputs[k].clone(),
                Sig::Node(j) => net_of[&j].clone(),
            }
        };
        let mut gates: Vec<Gate> = Vec::new();
        let mut next_id = 0usize;
        let mut push = |gates: &mut Vec<Gate>, kind: GateKind, ins: Vec<String>, out: String| {
            next_id += 1;
            let refs: Vec<&str> = ins.iter().map(String::as_str).collect();
            gates.push(Gate::nominal(format!("g{next_id}"), kind, &refs, out));
        };
        for (i, n) in self.nodes.iter().enumerate() {
            if !live[i] {
                continue;
            }
            let out = net_of[&i].clone();
            let ins: Vec<String> = n.args.iter().map(|&a| net(a, &net_of)).collect();
            let inverter_arg = |tie: Sig| n.args.iter().copied().find(|&a| a != tie).filter(|_| n.args.contains(&tie));
            match n.op {
                Op::Not => push(&mut gates, GateKind::Not, ins, out),
                Op::And2 => push(&mut gates, GateKind::And2, ins, out),
                Op::Or2 => push(&mut gates, GateKind::Or2, ins, out),
                Op::Maj3 => push(&mut gates, GateKind::Maj3, ins, out),
                Op::Nand2 | Op::Nor2 => {
                    let (tie, kind) = if n.op == Op::Nand2 { (T1, GateKind::And2) } else { (T0, GateKind::Or2) };
                    match inverter_arg(tie) {
                        Some(x) => push(&mut gates, GateKind::Not, vec![net(x, &net_of)], out),
                        None => {
                            let mid = fresh(&mut taken);
                            push(&mut gates, kind, ins, mid.clone());
                            push(&mut gates, GateKind::Not, vec![mid], out);
                        }
                    }
                }
            }
        }
        for (s, out) in copies {
            push(&mut gates, GateKind::Copy, vec![net(s, &net_of)], out);
        }
        let outputs = roots.iter().map(|(_, n)| n.clone()).collect();
        Netlist::new(name, self.inputs.clone(), outputs, gates).expect("lowered circuit is a valid netlist")
    }
}

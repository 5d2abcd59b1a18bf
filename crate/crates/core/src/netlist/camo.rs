//! Layout-level view of a netlist with every cell made identical.
//!
//! All five gate kinds are the same three-input hTron cell that differs only
//! in its bias current. The camouflage view erases kinds and biases and
//! keeps only wiring. Every cell has three wired input terminals: a pin the
//! gate does not use is wired to an input pad held at 0 uA, exactly like a
//! logic-0 signal. Unused primary inputs serve as those pads first, then
//! fresh dummy pads are added. Two netlists whose views are isomorphic
//! cannot be told apart from their layout.

use std::collections::{HashMap, HashSet, VecDeque};

use serde::Serialize;

use super::{Netlist, TIE_HIGH, TIE_LOW};

/// The single opaque cell label every gate is reduced to.
pub const CAMO_CELL: &str = "HTRON_CELL";
const CELL_PINS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Pin {
    /// Primary input pad by position.
    Input(usize),
    /// Dummy input pad (0 uA) added for an unused cell terminal.
    Dummy(usize),
    /// Output of the cell at this index in the view.
    Cell(usize),
    /// The logic-0 tie net.
    Ground,
    /// The logic-1 tie net.
    TieHigh,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CamoCell {
    pub id: String,
    pub cell: &'static str,
    pub inputs: [Pin; CELL_PINS],
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CamouflageView {
    pub primary_inputs: usize,
    pub dummy_pads: usize,
    pub primary_outputs: Vec<Pin>,
    pub cells: Vec<CamoCell>,
}

impl CamouflageView {
    /// Canonical pretty-printed JSON for diffing.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("view serializes");
        s.push('\n');
        s
    }

    fn pads(&self) -> usize {
        self.primary_inputs + self.dummy_pads
    }
}

pub fn camouflage_view(netlist: &Netlist) -> CamouflageView {
    let mut pin_of: HashMap<&str, Pin> = HashMap::new();
    pin_of.insert(TIE_LOW, Pin::Ground);
    pin_of.insert(TIE_HIGH, Pin::TieHigh);
    for (i, name) in netlist.inputs().iter().enumerate() {
        pin_of.insert(name, Pin::Input(i));
    }
    let read: HashSet<&str> = netlist
        .gates()
        .iter()
        .flat_map(|g| g.inputs.iter().map(String::as_str))
        .chain(netlist.outputs().iter().map(String::as_str))
        .collect();
    let mut spare: VecDeque<Pin> = netlist
        .inputs()
        .iter()
        .enumerate()
        .filter(|(_, n)| !read.contains(n.as_str()))
        .map(|(i, _)| Pin::Input(i))
        .collect();
    let mut dummies = 0;
    let mut cells = Vec::with_capacity(netlist.gate_count());
    for (ci, g) in netlist.gates().iter().enumerate() {
        let mut inputs = [Pin::Ground; CELL_PINS];
        for (k, slot) in inputs.iter_mut().enumerate() {
            *slot = match g.inputs.get(k) {
                Some(net) => pin_of[net.as_str()],
                None => spare.pop_front().unwrap_or_else(|| {
                    dummies += 1;
                    Pin::Dummy(dummies - 1)
                }),
            };
        }
        cells.push(CamoCell {
            id: g.id.clone(),
            cell: CAMO_CELL,
            inputs,
        });
        pin_of.insert(&g.output, Pin::Cell(ci));
    }
    CamouflageView {
        primary_inputs: netlist.inputs().len(),
        dummy_pads: dummies,
        primary_outputs: netlist.outputs().iter().map(|n| pin_of[n.as_str()]).collect(),
        cells,
    }
}

/// Pins as seen by the matcher: primary inputs present in both views keep
/// their position, every other pad is interchangeable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Key {
    Fixed(usize),
    Free,
    Cell(usize),
    Ground,
    TieHigh,
}

fn key(p: Pin, fixed: usize) -> Key {
    match p {
        Pin::Input(i) if i < fixed => Key::Fixed(i),
        Pin::Input(_) | Pin::Dummy(_) => Key::Free,
        Pin::Cell(j) => Key::Cell(j),
        Pin::Ground => Key::Ground,
        Pin::TieHigh => Key::TieHigh,
    }
}

/// Identity of a free pad within its own view.
fn free_pad(p: Pin, view: &CamouflageView, fixed: usize) -> Option<usize> {
    match p {
        Pin::Input(i) if i >= fixed => Some(i),
        Pin::Dummy(d) => Some(view.primary_inputs + d),
        _ => None,
    }
}

/// Structural fingerprint of each cell's fan-in cone. Pin order within a
/// cell is irrelevant since the heater sums its inputs.
fn signatures(view: &CamouflageView, fixed: usize, interner: &mut HashMap<Vec<u64>, u64>) -> Vec<u64> {
    let mut sig: Vec<u64> = Vec::with_capacity(view.cells.len());
    for c in &view.cells {
        let mut k: Vec<u64> = c
            .inputs
            .iter()
            .map(|&p| match key(p, fixed) {
                Key::Fixed(i) => (i as u64) << 3,
                Key::Free => 1,
                Key::Ground => 2,
                Key::TieHigh => 3,
                Key::Cell(j) => (sig[j] << 3) | 4,
            })
            .collect();
        k.sort_unstable();
        let next = interner.len() as u64;
        sig.push(*interner.entry(k).or_insert(next));
    }
    sig
}

/// Reader of a free pad: a cell (named in view B) or an output slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Use {
    Cell(usize),
    Output(usize),
}

struct Search<'v> {
    a: &'v CamouflageView,
    b: &'v CamouflageView,
    fixed: usize,
    sa: Vec<u64>,
    sb: Vec<u64>,
    outs_a: Vec<Vec<usize>>,
    outs_b: Vec<Vec<usize>>,
    map: Vec<usize>,
    used: Vec<bool>,
}

impl Search<'_> {
    fn image(&self, p: Pin) -> Key {
        match key(p, self.fixed) {
            Key::Cell(j) => Key::Cell(self.map[j]),
            k => k,
        }
    }

    /// Multiset of reader sets over the free pads of `view`.
    fn free_uses(&self, view: &CamouflageView, rename: impl Fn(usize) -> usize) -> Vec<Vec<Use>> {
        let mut by_pad: HashMap<usize, Vec<Use>> = HashMap::new();
        for (ci, c) in view.cells.iter().enumerate() {
            for &p in &c.inputs {
                if let Some(pad) = free_pad(p, view, self.fixed) {
                    by_pad.entry(pad).or_default().push(Use::Cell(rename(ci)));
                }
            }
        }
        for (k, &p) in view.primary_outputs.iter().enumerate() {
            if let Some(pad) = free_pad(p, view, self.fixed) {
                by_pad.entry(pad).or_default().push(Use::Output(k));
            }
        }
        let mut uses: Vec<Vec<Use>> = by_pad
            .into_values()
            .map(|mut v| {
                v.sort_unstable();
                v
            })
            .collect();
        uses.sort_unstable();
        uses
    }

    fn extend(&mut self, u: usize) -> bool {
        if u == self.a.cells.len() {
            return self.free_uses(self.a, |i| self.map[i]) == self.free_uses(self.b, |i| i);
        }
        let mut want: Vec<Key> = self.a.cells[u].inputs.iter().map(|&p| self.image(p)).collect();
        want.sort_unstable();
        for v in 0..self.b.cells.len() {
            if self.used[v] || self.sa[u] != self.sb[v] || self.outs_a[u] != self.outs_b[v] {
                continue;
            }
            let mut have: Vec<Key> = self.b.cells[v].inputs.iter().map(|&p| key(p, self.fixed)).collect();
            have.sort_unstable();
            if have != want {
                continue;
            }
            self.map[u] = v;
            self.used[v] = true;
            if self.extend(u + 1) {
                return true;
            }
            self.used[v] = false;
        }
        false
    }
}

/// True iff some bijection between cells and between pads preserves every
/// connection and maps primary output `i` to primary output `i`. Primary
/// inputs present in both views keep their position; the remaining pads
/// (extra primary inputs and dummies) may correspond freely. Cell ids are
/// ignored.
pub fn views_identical(a: &CamouflageView, b: &CamouflageView) -> bool {
    if a.pads() != b.pads() || a.cells.len() != b.cells.len() || a.primary_outputs.len() != b.primary_outputs.len() {
        return false;
    }
    let fixed = a.primary_inputs.min(b.primary_inputs);
    let mut interner = HashMap::new();
    let sa = signatures(a, fixed, &mut interner);
    let sb = signatures(b, fixed, &mut interner);
    let mut ca = sa.clone();
    let mut cb = sb.clone();
    ca.sort_unstable();
    cb.sort_unstable();
    if ca != cb {
        return false;
    }
    for (pa, pb) in a.primary_outputs.iter().zip(&b.primary_outputs) {
        let (ka, kb) = (key(*pa, fixed), key(*pb, fixed));
        let cell = |k: Key| matches!(k, Key::Cell(_));
        if cell(ka) != cell(kb) || (!cell(ka) && ka != kb) {
            return false;
        }
    }
    let outs = |v: &CamouflageView| -> Vec<Vec<usize>> {
        (0..v.cells.len())
            .map(|ci| {
                (0..v.primary_outputs.len())
                    .filter(|&k| v.primary_outputs[k] == Pin::Cell(ci))
                    .collect()
            })
            .collect()
    };
    let mut search = Search {
        a,
        b,
        fixed,
        sa,
        sb,
        outs_a: outs(a),
        outs_b: outs(b),
        map: vec![usize::MAX; a.cells.len()],
        used: vec![false; b.cells.len()],
    };
    search.extend(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::{parse, parse_with, ParseOptions};

    fn view(text: &str) -> CamouflageView {
        camouflage_view(&parse(text).unwrap())
    }

    #[test]
    fn single_cells_look_alike() {
        let and = view("input a b; gate g AND2 a b -> y; output y;");
        let or = view("input a b; gate g OR2 a b -> y; output y;");
        assert!(views_identical(&and, &or));
        assert_eq!(and.cells[0].inputs, [Pin::Input(0), Pin::Input(1), Pin::Dummy(0)]);
        let copy = view("input a; gate g COPY a -> y; output y;");
        let maj = view("input a b c; gate g MAJ3 a b c -> y; output y;");
        assert!(views_identical(&copy, &maj));
        assert!(views_identical(&copy, &and));
    }

    #[test]
    fn unused_inputs_serve_as_pads() {
        let copy = view("input a b c; gate g COPY a -> y; output y;");
        assert_eq!(copy.cells[0].inputs, [Pin::Input(0), Pin::Input(1), Pin::Input(2)]);
        assert_eq!(copy.dummy_pads, 0);
        let maj = view("input a b c; gate g MAJ3 a b c -> y; output y;");
        assert!(views_identical(&copy, &maj));
    }

    #[test]
    fn view_json_has_no_kind_or_bias() {
        let json = view("input a; gate g NOT a -> y bias=-130; output y;").to_json();
        assert!(json.contains("HTRON_CELL"));
        assert!(!json.contains("NOT") && !json.contains("130"));
    }

    #[test]
    fn different_topologies_differ() {
        let one = view("input a; gate g NOT a -> y; output y;");
        let two = view("input a; gate g NOT a -> x; gate h NOT x -> y; output y;");
        assert!(!views_identical(&one, &two));
        let x = view("input a b; gate g NOT a -> u; gate h AND2 u b -> y; output y;");
        let y = view("input a b; gate g NOT b -> u; gate h AND2 u a -> y; output y;");
        assert!(!views_identical(&x, &y));
        let tied = view("input a b; gate g AND2 a 1 -> y; output y;");
        let free = view("input a b; gate g AND2 a b -> y; output y;");
        assert!(!views_identical(&tied, &free));
    }

    #[test]
    fn isomorphism_ignores_order_and_ids() {
        let x = view("input a b; gate p NOT a -> u; gate q NOT b -> v; gate r AND2 u v -> y; output y;");
        let y = view("input a b; gate z1 COPY b -> v; gate z2 OR2 v u -> y; gate z3 NOT a -> u; output y;");
        assert!(views_identical(&x, &y));
    }

    #[test]
    fn output_order_matters() {
        let x = view("input a b; gate p NOT a -> u; gate q NOT b -> v; output u v;");
        let y = view("input a b; gate p NOT a -> u; gate q NOT b -> v; output v u;");
        assert!(!views_identical(&x, &y));
    }

    #[test]
    fn shared_readers_matter() {
        let loose = |t: &str| camouflage_view(&parse_with(t, ParseOptions { allow_fanout: true }).unwrap());
        let shared = loose("input a b c d; gate p AND2 a b -> u; gate q AND2 a b -> v; output u v;");
        let split = loose("input a b c d; gate p AND2 a b -> u; gate q AND2 a c -> v; output u v;");
        assert!(!views_identical(&shared, &split));
    }
}

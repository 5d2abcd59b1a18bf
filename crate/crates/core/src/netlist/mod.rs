//! Gate-level netlists of hTron cells.
//!
//! A [`Netlist`] is a combinational DAG. Nets are named; each is driven by
//! exactly one primary input or gate output. The reserved nets `0` and `1`
//! are tie-low (grounded) and tie-high (a constant '1' current source) and
//! may be read any number of times.
//!
//! Fanout is physical: a signal current can feed one heater. A net may have
//! at most one reader, except that a net may feed exactly two COPY cells,
//! which is how a splitter branches. [`insert_splitters`] rewrites arbitrary
//! fanout into balanced COPY trees.

mod camo;
mod parse;
mod random;
mod splitter;

use std::collections::{BinaryHeap, HashMap, HashSet};
use std::cmp::Reverse;
use std::fmt;

use thiserror::Error;

use crate::gate::{BiasConfig, GateKind};

pub use camo::{camouflage_view, views_identical, CamoCell, CamouflageView, Pin, CAMO_CELL};
pub use parse::{parse, parse_with, serialize, ParseOptions};
pub use random::{random_netlist, RandomShape};
pub use splitter::insert_splitters;

pub const TIE_LOW: &str = "0";
pub const TIE_HIGH: &str = "1";

pub fn is_tie(net: &str) -> bool {
    net == TIE_LOW || net == TIE_HIGH
}

/// 1-based source position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Location {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}", self.line, self.column)
    }
}

/// What a validation error refers to; the parser maps it back to a source
/// location.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Subject {
    Gate(String),
    Input(String),
    Output(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetlistErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unknown gate kind `{0}`")]
    UnknownGateKind(String),
    #[error("gate `{gate}` ({kind}) takes {expected} input(s), found {found}")]
    Arity {
        gate: String,
        kind: GateKind,
        expected: usize,
        found: usize,
    },
    #[error("net `{0}` has more than one driver")]
    DuplicateDriver(String),
    #[error("duplicate gate id `{0}`")]
    DuplicateGateId(String),
    #[error("combinational cycle through gate `{0}`")]
    Cycle(String),
    #[error("net `{0}` is read but never driven")]
    UndeclaredNet(String),
    #[error("net `{net}` has {readers} readers; fanout must be realized with COPY splitters")]
    Fanout { net: String, readers: usize },
    #[error("invalid bias on gate `{gate}`: {message}")]
    InvalidBias { gate: String, message: String },
    #[error("gate `{gate}` bias is configured for {bias_kind}, not {kind}")]
    BiasKindMismatch {
        gate: String,
        kind: GateKind,
        bias_kind: GateKind,
    },
    #[error("tie net `{0}` cannot be driven or declared")]
    DrivenTie(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub struct NetlistError {
    pub kind: NetlistErrorKind,
    pub location: Option<Location>,
    pub subject: Option<Subject>,
}

impl fmt::Display for NetlistError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.location {
            Some(loc) => write!(f, "{loc}: {}", self.kind),
            None => write!(f, "{}", self.kind),
        }
    }
}

impl NetlistError {
    pub(crate) fn new(kind: NetlistErrorKind, subject: Option<Subject>) -> Self {
        Self {
            kind,
            location: None,
            subject,
        }
    }

    pub(crate) fn at(kind: NetlistErrorKind, location: Location) -> Self {
        Self {
            kind,
            location: Some(location),
            subject: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub id: String,
    pub kind: GateKind,
    pub inputs: Vec<String>,
    pub output: String,
    pub bias: BiasConfig,
}

impl Gate {
    /// Gate with the nominal bias for its kind.
    pub fn nominal(id: impl Into<String>, kind: GateKind, inputs: &[&str], output: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            kind,
            inputs: inputs.iter().map(|s| s.to_string()).collect(),
            output: output.into(),
            bias: crate::gate::bias_for(kind),
        }
    }
}

/// Who reads a net.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reader {
    /// Gate index and input pin.
    Gate(usize, usize),
    /// Primary output position.
    Output(usize),
}

/// A validated combinational netlist. Gates are kept in a canonical
/// topological order (stable with respect to construction order), so two
/// netlists built from the same gates compare equal.
#[derive(Debug, Clone, PartialEq)]
pub struct Netlist {
    name: String,
    inputs: Vec<String>,
    outputs: Vec<String>,
    gates: Vec<Gate>,
}

impl Netlist {
    /// Builds and validates a netlist. Fanout is not checked here; see
    /// [`Netlist::check_fanout`].
    pub fn new(
        name: impl Into<String>,
        inputs: Vec<String>,
        outputs: Vec<String>,
        gates: Vec<Gate>,
    ) -> Result<Self, NetlistError> {
        let gates = validate(&inputs, &outputs, gates)?;
        Ok(Self {
            name: name.into(),
            inputs,
            outputs,
            gates,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn inputs(&self) -> &[String] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[String] {
        &self.outputs
    }

    /// Gates in topological order.
    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn gate_count(&self) -> usize {
        self.gates.len()
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Readers of every non-tie net, in gate then output order.
    pub fn readers(&self) -> HashMap<&str, Vec<Reader>> {
        let mut map: HashMap<&str, Vec<Reader>> = HashMap::new();
        for (gi, g) in self.gates.iter().enumerate() {
            for (pin, net) in g.inputs.iter().enumerate() {
                if !is_tie(net) {
                    map.entry(net.as_str()).or_default().push(Reader::Gate(gi, pin));
                }
            }
        }
        for (pos, net) in self.outputs.iter().enumerate() {
            if !is_tie(net) {
                map.entry(net.as_str()).or_default().push(Reader::Output(pos));
            }
        }
        map
    }

    pub(crate) fn fanout_legal(&self, readers: &[Reader]) -> bool {
        match readers {
            [] | [_] => true,
            [Reader::Gate(a, _), Reader::Gate(b, _)] => {
                a != b && self.gates[*a].kind == GateKind::Copy && self.gates[*b].kind == GateKind::Copy
            }
            _ => false,
        }
    }

    /// Checks that every net has at most one reader or feeds exactly one
    /// COPY splitter pair.
    pub fn check_fanout(&self) -> Result<(), NetlistError> {
        let readers = self.readers();
        let mut nets: Vec<&str> = self.inputs.iter().map(String::as_str).collect();
        nets.extend(self.gates.iter().map(|g| g.output.as_str()));
        for net in nets {
            let Some(rs) = readers.get(net) else { continue };
            if !self.fanout_legal(rs) {
                // report at the second reader
                let second = match rs[1] {
                    Reader::Gate(gi, _) => Subject::Gate(self.gates[gi].id.clone()),
                    Reader::Output(_) => Subject::Output(net.to_string()),
                };
                return Err(NetlistError::new(
                    NetlistErrorKind::Fanout {
                        net: net.to_string(),
                        readers: rs.len(),
                    },
                    Some(second),
                ));
            }
        }
        Ok(())
    }

    pub fn is_legalized(&self) -> bool {
        self.check_fanout().is_ok()
    }

    /// Logic level of every gate output: 1 + the deepest gate feeding it.
    /// Primary inputs and ties are level 0.
    pub fn levels(&self) -> HashMap<&str, usize> {
        let mut level: HashMap<&str, usize> = HashMap::new();
        for g in &self.gates {
            let l = 1 + g
                .inputs
                .iter()
                .map(|n| level.get(n.as_str()).copied().unwrap_or(0))
                .max()
                .unwrap_or(0);
            level.insert(g.output.as_str(), l);
        }
        level
    }

    /// Longest primary-input to primary-output path in gate levels. Every
    /// gate, including NOT and COPY splitters, counts as one level.
    pub fn depth(&self) -> usize {
        let level = self.levels();
        self.outputs
            .iter()
            .map(|n| level.get(n.as_str()).copied().unwrap_or(0))
            .max()
            .unwrap_or(0)
    }

    /// Evaluates the netlist with each gate's ideal Boolean function.
    pub fn eval_ideal(&self, input_bits: &[bool]) -> Vec<bool> {
        assert_eq!(input_bits.len(), self.inputs.len(), "input vector length");
        let mut value: HashMap<&str, bool> = HashMap::new();
        value.insert(TIE_LOW, false);
        value.insert(TIE_HIGH, true);
        for (name, &b) in self.inputs.iter().zip(input_bits) {
            value.insert(name, b);
        }
        for g in &self.gates {
            let ins: Vec<bool> = g.inputs.iter().map(|n| value[n.as_str()]).collect();
            value.insert(&g.output, g.kind.eval(&ins));
        }
        self.outputs.iter().map(|n| value[n.as_str()]).collect()
    }
}

fn validate(inputs: &[String], outputs: &[String], gates: Vec<Gate>) -> Result<Vec<Gate>, NetlistError> {
    let gate_subject = |g: &Gate| Some(Subject::Gate(g.id.clone()));
    let mut ids = HashSet::new();
    for g in &gates {
        if !ids.insert(g.id.as_str()) {
            return Err(NetlistError::new(
                NetlistErrorKind::DuplicateGateId(g.id.clone()),
                gate_subject(g),
            ));
        }
        if g.inputs.len() != g.kind.arity() {
            return Err(NetlistError::new(
                NetlistErrorKind::Arity {
                    gate: g.id.clone(),
                    kind: g.kind,
                    expected: g.kind.arity(),
                    found: g.inputs.len(),
                },
                gate_subject(g),
            ));
        }
        if g.bias.kind != g.kind {
            return Err(NetlistError::new(
                NetlistErrorKind::BiasKindMismatch {
                    gate: g.id.clone(),
                    kind: g.kind,
                    bias_kind: g.bias.kind,
                },
                gate_subject(g),
            ));
        }
        if let Err(e) = g.bias.validate() {
            return Err(NetlistError::new(
                NetlistErrorKind::InvalidBias {
                    gate: g.id.clone(),
                    message: e.to_string(),
                },
                gate_subject(g),
            ));
        }
    }

    // drivers: net -> Some(gate index) or None for a primary input
    let mut driver: HashMap<&str, Option<usize>> = HashMap::new();
    for name in inputs {
        if is_tie(name) {
            return Err(NetlistError::new(
                NetlistErrorKind::DrivenTie(name.clone()),
                Some(Subject::Input(name.clone())),
            ));
        }
        if driver.insert(name.as_str(), None).is_some() {
            return Err(NetlistError::new(
                NetlistErrorKind::DuplicateDriver(name.clone()),
                Some(Subject::Input(name.clone())),
            ));
        }
    }
    for (gi, g) in gates.iter().enumerate() {
        if is_tie(&g.output) {
            return Err(NetlistError::new(
                NetlistErrorKind::DrivenTie(g.output.clone()),
                gate_subject(g),
            ));
        }
        if driver.insert(g.output.as_str(), Some(gi)).is_some() {
            return Err(NetlistError::new(
                NetlistErrorKind::DuplicateDriver(g.output.clone()),
                gate_subject(g),
            ));
        }
    }
    for g in &gates {
        if let Some(net) = g.inputs.iter().find(|n| !is_tie(n) && !driver.contains_key(n.as_str())) {
            return Err(NetlistError::new(
                NetlistErrorKind::UndeclaredNet(net.clone()),
                gate_subject(g),
            ));
        }
    }
    if let Some(net) = outputs.iter().find(|n| !is_tie(n) && !driver.contains_key(n.as_str())) {
        return Err(NetlistError::new(
            NetlistErrorKind::UndeclaredNet(net.clone()),
            Some(Subject::Output(net.clone())),
        ));
    }

    // Kahn's algorithm, lowest original index first among ready gates.
    let n = gates.len();
    let mut pending = vec![0usize; n];
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (gi, g) in gates.iter().enumerate() {
        for net in &g.inputs {
            if let Some(Some(src)) = driver.get(net.as_str()) {
                pending[gi] += 1;
                succ[*src].push(gi);
            }
        }
    }
    let mut ready: BinaryHeap<Reverse<usize>> =
        (0..n).filter(|&i| pending[i] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(gi)) = ready.pop() {
        order.push(gi);
        for &s in &succ[gi] {
            pending[s] -= 1;
            if pending[s] == 0 {
                ready.push(Reverse(s));
            }
        }
    }
    if order.len() < n {
        let stuck = (0..n).find(|&i| pending[i] > 0).expect("cycle member");
        return Err(NetlistError::new(
            NetlistErrorKind::Cycle(gates[stuck].id.clone()),
            gate_subject(&gates[stuck]),
        ));
    }
    let mut slots: Vec<Option<Gate>> = gates.into_iter().map(Some).collect();
    Ok(order.into_iter().map(|i| slots[i].take().expect("each gate once")).collect())
}

//! `.hnl` text format.
//!
//! ```text
//! # comment
//! netlist adder;
//! input a b cin;
//! output s;
//! gate g1 MAJ3 a b cin -> c bias=10;
//! ```
//!
//! Statements end with `;` and may span lines. Gate attributes are
//! `bias=<uA>` (heater bias `i_b1`), `ib2=<uA>` (channel bias) and
//! `rload=<ohm>`; omitted attributes take the kind's nominal value. Input
//! nets `0` and `1` are tie-low and tie-high.

use std::collections::HashMap;
use std::fmt::Write as _;

use super::{is_tie, Gate, Location, Netlist, NetlistError, NetlistErrorKind, Subject};
use crate::gate::{bias_for, GateKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ParseOptions {
    /// Accept nets with more than one reader (for input to
    /// [`insert_splitters`](super::insert_splitters)).
    pub allow_fanout: bool,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Arrow,
    Semi,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    loc: Location,
}

fn lex(text: &str) -> Result<Vec<Token>, NetlistError> {
    let mut tokens = Vec::new();
    let mut chars = text.chars().peekable();
    let (mut line, mut column) = (1usize, 1usize);
    let mut word = String::new();
    let mut word_loc = Location { line, column };

    macro_rules! flush {
        () => {
            if !word.is_empty() {
                tokens.push(Token {
                    tok: Tok::Word(std::mem::take(&mut word)),
                    loc: word_loc,
                });
            }
        };
    }

    while let Some(c) = chars.next() {
        let loc = Location { line, column };
        if c == '\n' {
            line += 1;
            column = 1;
        } else {
            column += 1;
        }
        match c {
            c if c.is_whitespace() => flush!(),
            '#' => {
                flush!();
                while let Some(&n) = chars.peek() {
                    if n == '\n' {
                        break;
                    }
                    chars.next();
                    column += 1;
                }
            }
            ';' => {
                flush!();
                tokens.push(Token { tok: Tok::Semi, loc });
            }
            '-' if chars.peek() == Some(&'>') => {
                flush!();
                chars.next();
                column += 1;
                tokens.push(Token { tok: Tok::Arrow, loc });
            }
            c if c.is_control() => {
                return Err(NetlistError::at(
                    NetlistErrorKind::Syntax(format!("unexpected control character {c:?}")),
                    loc,
                ));
            }
            c => {
                if word.is_empty() {
                    word_loc = loc;
                }
                word.push(c);
            }
        }
    }
    flush!();
    Ok(tokens)
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '[' | ']' | '$'))
}

fn syntax(msg: impl Into<String>, loc: Location) -> NetlistError {
    NetlistError::at(NetlistErrorKind::Syntax(msg.into()), loc)
}

/// Source positions recorded while parsing, used to locate semantic errors.
#[derive(Default)]
struct Positions {
    gates: HashMap<String, Location>,
    inputs: HashMap<String, Location>,
    outputs: HashMap<String, Location>,
}

impl Positions {
    fn locate(&self, mut err: NetlistError) -> NetlistError {
        let loc = match &err.subject {
            Some(Subject::Gate(id)) => self.gates.get(id),
            Some(Subject::Input(net)) => self.inputs.get(net),
            Some(Subject::Output(net)) => self.outputs.get(net),
            None => None,
        };
        if err.location.is_none() {
            err.location = loc.copied();
        }
        err
    }
}

/// Parses and fully validates a netlist, including the fanout rule.
pub fn parse(text: &str) -> Result<Netlist, NetlistError> {
    parse_with(text, ParseOptions::default())
}

pub fn parse_with(text: &str, options: ParseOptions) -> Result<Netlist, NetlistError> {
    let tokens = lex(text)?;
    let eof = {
        let line = text.lines().count().max(1);
        let column = text.lines().last().map(|l| l.chars().count() + 1).unwrap_or(1);
        Location { line, column }
    };

    let mut name = String::new();
    let mut inputs: Vec<String> = Vec::new();
    let mut outputs: Vec<String> = Vec::new();
    let mut gates: Vec<Gate> = Vec::new();
    let mut pos = Positions::default();

    let mut i = 0;
    while i < tokens.len() {
        // collect one statement
        let start = i;
        while i < tokens.len() && tokens[i].tok != Tok::Semi {
            i += 1;
        }
        if i == tokens.len() {
            return Err(syntax("missing `;` at end of statement", eof));
        }
        let stmt = &tokens[start..i];
        let semi_loc = tokens[i].loc;
        i += 1;

        let Some(head) = stmt.first() else {
            return Err(syntax("empty statement", semi_loc));
        };
        let Tok::Word(keyword) = &head.tok else {
            return Err(syntax("expected a statement keyword", head.loc));
        };
        let words = |toks: &[Token]| -> Result<Vec<(String, Location)>, NetlistError> {
            toks.iter()
                .map(|t| match &t.tok {
                    Tok::Word(w) => Ok((w.clone(), t.loc)),
                    _ => Err(syntax("unexpected `->`", t.loc)),
                })
                .collect()
        };
        match keyword.as_str() {
            "netlist" => {
                let args = words(&stmt[1..])?;
                match args.as_slice() {
                    [(n, loc)] => {
                        if !is_identifier(n) {
                            return Err(syntax(format!("invalid netlist name `{n}`"), *loc));
                        }
                        name = n.clone();
                    }
                    _ => return Err(syntax("expected `netlist <name>;`", head.loc)),
                }
            }
            "input" | "output" => {
                let args = words(&stmt[1..])?;
                if args.is_empty() {
                    return Err(syntax(format!("`{keyword}` needs at least one net"), head.loc));
                }
                for (net, loc) in args {
                    let tie_ok = keyword == "output" && is_tie(&net);
                    if !is_identifier(&net) && !tie_ok {
                        return Err(syntax(format!("invalid net name `{net}`"), loc));
                    }
                    if keyword == "input" {
                        pos.inputs.entry(net.clone()).or_insert(loc);
                        inputs.push(net);
                    } else {
                        pos.outputs.entry(net.clone()).or_insert(loc);
                        outputs.push(net);
                    }
                }
            }
            "gate" => {
                let gate = parse_gate(stmt)?;
                pos.gates.entry(gate.id.clone()).or_insert(head.loc);
                gates.push(gate);
            }
            other => {
                return Err(syntax(
                    format!("unknown statement `{other}` (expected netlist, input, output or gate)"),
                    head.loc,
                ));
            }
        }
    }

    let netlist = Netlist::new(name, inputs, outputs, gates).map_err(|e| pos.locate(e))?;
    if !options.allow_fanout {
        netlist.check_fanout().map_err(|e| pos.locate(e))?;
    }
    Ok(netlist)
}

fn parse_gate(stmt: &[Token]) -> Result<Gate, NetlistError> {
    let head = stmt[0].loc;
    let word_at = |k: usize, what: &str| -> Result<(String, Location), NetlistError> {
        match stmt.get(k) {
            Some(Token { tok: Tok::Word(w), loc }) => Ok((w.clone(), *loc)),
            Some(t) => Err(syntax(format!("expected {what}"), t.loc)),
            None => Err(syntax(format!("expected {what}"), head)),
        }
    };
    let (id, id_loc) = word_at(1, "gate id")?;
    if !is_identifier(&id) {
        return Err(syntax(format!("invalid gate id `{id}`"), id_loc));
    }
    let (kind_word, kind_loc) = word_at(2, "gate kind")?;
    let kind: GateKind = kind_word
        .parse()
        .map_err(|_| NetlistError::at(NetlistErrorKind::UnknownGateKind(kind_word.clone()), kind_loc))?;

    let arrow = stmt
        .iter()
        .position(|t| t.tok == Tok::Arrow)
        .ok_or_else(|| syntax("expected `->` before the output net", head))?;
    if arrow < 3 {
        return Err(syntax("expected `gate <id> <KIND> <inputs...> -> <output>`", head));
    }
    let mut inputs = Vec::new();
    for t in &stmt[3..arrow] {
        match &t.tok {
            Tok::Word(w) if is_identifier(w) || is_tie(w) => inputs.push(w.clone()),
            Tok::Word(w) => return Err(syntax(format!("invalid net name `{w}`"), t.loc)),
            _ => return Err(syntax("unexpected token", t.loc)),
        }
    }
    if inputs.len() != kind.arity() {
        return Err(NetlistError::at(
            NetlistErrorKind::Arity {
                gate: id,
                kind,
                expected: kind.arity(),
                found: inputs.len(),
            },
            head,
        ));
    }
    let (output, out_loc) = word_at(arrow + 1, "output net after `->`")?;
    if !is_identifier(&output) {
        return Err(syntax(format!("invalid output net `{output}`"), out_loc));
    }

    let mut bias = bias_for(kind);
    for t in &stmt[arrow + 2..] {
        let Tok::Word(attr) = &t.tok else {
            return Err(syntax("unexpected `->`", t.loc));
        };
        let Some((key, value)) = attr.split_once('=') else {
            return Err(syntax(format!("expected `key=value` attribute, found `{attr}`"), t.loc));
        };
        let v: f64 = value
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| syntax(format!("invalid number `{value}`"), t.loc))?;
        match key {
            "bias" => bias.i_b1 = v,
            "ib2" => bias.i_b2 = v,
            "rload" => bias.r_load = v,
            _ => return Err(syntax(format!("unknown attribute `{key}`"), t.loc)),
        }
    }
    if let Err(e) = bias.validate() {
        return Err(NetlistError::at(
            NetlistErrorKind::InvalidBias {
                gate: id,
                message: e.to_string(),
            },
            head,
        ));
    }
    Ok(Gate {
        id,
        kind,
        inputs,
        output,
        bias,
    })
}

/// Canonical text form: header, inputs, outputs, then gates in topological
/// order. `bias` is always written; `ib2` and `rload` only when they differ
/// from the nominal values.
pub fn serialize(netlist: &Netlist) -> String {
    let mut out = String::new();
    if !netlist.name().is_empty() {
        let _ = writeln!(out, "netlist {};", netlist.name());
    }
    if !netlist.inputs().is_empty() {
        let _ = writeln!(out, "input {};", netlist.inputs().join(" "));
    }
    if !netlist.outputs().is_empty() {
        let _ = writeln!(out, "output {};", netlist.outputs().join(" "));
    }
    for g in netlist.gates() {
        let nominal = bias_for(g.kind);
        let _ = write!(
            out,
            "gate {} {} {} -> {} bias={}",
            g.id,
            g.kind,
            g.inputs.join(" "),
            g.output,
            g.bias.i_b1
        );
        if g.bias.i_b2 != nominal.i_b2 {
            let _ = write!(out, " ib2={}", g.bias.i_b2);
        }
        if g.bias.r_load != nominal.r_load {
            let _ = write!(out, " rload={}", g.bias.r_load);
        }
        out.push_str(";\n");
    }
    out
}

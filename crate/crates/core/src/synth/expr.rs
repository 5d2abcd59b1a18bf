use std::fmt;

use super::SynthError;

/// Boolean expression tree. `And`, `Or` and `Xor` are n-ary with at least
/// two operands.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum BoolExpr {
    Var(String),
    Const(bool),
    Not(Box<BoolExpr>),
    And(Vec<BoolExpr>),
    Or(Vec<BoolExpr>),
    Xor(Vec<BoolExpr>),
    Maj(Box<[BoolExpr; 3]>),
}

impl BoolExpr {
    pub fn var(name: impl Into<String>) -> Self {
        Self::Var(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(e: BoolExpr) -> Self {
        Self::Not(Box::new(e))
    }

    pub fn and(es: Vec<BoolExpr>) -> Self {
        Self::And(es)
    }

    pub fn or(es: Vec<BoolExpr>) -> Self {
        Self::Or(es)
    }

    pub fn xor(es: Vec<BoolExpr>) -> Self {
        Self::Xor(es)
    }

    pub fn maj(a: BoolExpr, b: BoolExpr, c: BoolExpr) -> Self {
        Self::Maj(Box::new([a, b, c]))
    }

    /// Checks n-ary arity and variable naming.
    pub fn validate(&self) -> Result<(), SynthError> {
        match self {
            Self::Var(v) if !is_identifier(v) => Err(SynthError::Malformed(format!("invalid variable name `{v}`"))),
            Self::Var(_) | Self::Const(_) => Ok(()),
            Self::Not(e) => e.validate(),
            Self::And(es) | Self::Or(es) | Self::Xor(es) => {
                if es.len() < 2 {
                    return Err(SynthError::Malformed(format!(
                        "{} needs at least 2 operands, found {}",
                        self.op_name(),
                        es.len()
                    )));
                }
                es.iter().try_for_each(BoolExpr::validate)
            }
            Self::Maj(es) => es.iter().try_for_each(BoolExpr::validate),
        }
    }

    fn op_name(&self) -> &'static str {
        match self {
            Self::Var(_) | Self::Const(_) => "",
            Self::Not(_) => "not",
            Self::And(_) => "and",
            Self::Or(_) => "or",
            Self::Xor(_) => "xor",
            Self::Maj(_) => "maj",
        }
    }

    /// Variables in order of first appearance.
    pub fn variables(&self) -> Vec<String> {
        fn walk(e: &BoolExpr, out: &mut Vec<String>) {
            match e {
                BoolExpr::Var(v) => {
                    if !out.contains(v) {
                        out.push(v.clone());
                    }
                }
                BoolExpr::Const(_) => {}
                BoolExpr::Not(x) => walk(x, out),
                BoolExpr::And(es) | BoolExpr::Or(es) | BoolExpr::Xor(es) => es.iter().for_each(|x| walk(x, out)),
                BoolExpr::Maj(es) => es.iter().for_each(|x| walk(x, out)),
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out
    }

    /// Evaluates with `lookup` supplying each variable's value.
    pub fn eval_with(&self, lookup: &impl Fn(&str) -> bool) -> bool {
        match self {
            Self::Var(v) => lookup(v),
            Self::Const(b) => *b,
            Self::Not(x) => !x.eval_with(lookup),
            Self::And(es) => es.iter().all(|x| x.eval_with(lookup)),
            Self::Or(es) => es.iter().any(|x| x.eval_with(lookup)),
            Self::Xor(es) => es.iter().fold(false, |acc, x| acc ^ x.eval_with(lookup)),
            Self::Maj(es) => es.iter().filter(|x| x.eval_with(lookup)).count() >= 2,
        }
    }

    /// Evaluates with `bits[i]` bound to `vars[i]`. Unbound variables read 0.
    pub fn eval(&self, vars: &[String], bits: &[bool]) -> bool {
        self.eval_with(&|v| vars.iter().position(|n| n == v).map(|i| bits[i]).unwrap_or(false))
    }

    /// Constant folding, flattening, double-negation removal and the
    /// majority identities `MAJ(a,b,0) = AND(a,b)`, `MAJ(a,b,1) = OR(a,b)`,
    /// `MAJ(a,a,b) = a`, `MAJ(a,¬a,b) = b`.
    pub fn simplify(&self) -> BoolExpr {
        match self {
            Self::Var(_) | Self::Const(_) => self.clone(),
            Self::Not(x) => negate(x.simplify()),
            Self::And(es) => fold_and_or(es, true),
            Self::Or(es) => fold_and_or(es, false),
            Self::Xor(es) => fold_xor(es),
            Self::Maj(es) => {
                let [a, b, c] = [es[0].simplify(), es[1].simplify(), es[2].simplify()];
                simplify_maj(a, b, c)
            }
        }
    }
}

fn negate(x: BoolExpr) -> BoolExpr {
    match x {
        BoolExpr::Const(b) => BoolExpr::Const(!b),
        BoolExpr::Not(inner) => *inner,
        other => BoolExpr::not(other),
    }
}

fn complementary(a: &BoolExpr, b: &BoolExpr) -> bool {
    matches!(a, BoolExpr::Not(x) if **x == *b) || matches!(b, BoolExpr::Not(x) if **x == *a)
}

/// `is_and` selects AND (identity 1, absorbing 0) or OR (the dual).
fn fold_and_or(es: &[BoolExpr], is_and: bool) -> BoolExpr {
    let identity = is_and;
    let mut terms: Vec<BoolExpr> = Vec::new();
    let mut stack: Vec<BoolExpr> = es.iter().rev().map(BoolExpr::simplify).collect();
    while let Some(t) = stack.pop() {
        match t {
            BoolExpr::Const(b) if b == identity => {}
            BoolExpr::Const(_) => return BoolExpr::Const(!identity),
            BoolExpr::And(inner) if is_and => stack.extend(inner.into_iter().rev()),
            BoolExpr::Or(inner) if !is_and => stack.extend(inner.into_iter().rev()),
            t => {
                if terms.iter().any(|u| complementary(u, &t)) {
                    return BoolExpr::Const(!identity);
                }
                if !terms.contains(&t) {
                    terms.push(t);
                }
            }
        }
    }
    match terms.len() {
        0 => BoolExpr::Const(identity),
        1 => terms.pop().expect("one term"),
        _ if is_and => BoolExpr::And(terms),
        _ => BoolExpr::Or(terms),
    }
}

fn fold_xor(es: &[BoolExpr]) -> BoolExpr {
    let mut parity = false;
    let mut terms: Vec<BoolExpr> = Vec::new();
    let mut stack: Vec<BoolExpr> = es.iter().rev().map(BoolExpr::simplify).collect();
    while let Some(t) = stack.pop() {
        match t {
            BoolExpr::Const(b) => parity ^= b,
            BoolExpr::Xor(inner) => stack.extend(inner.into_iter().rev()),
            BoolExpr::Not(x) => {
                parity ^= true;
                stack.push(*x);
            }
            t => match terms.iter().position(|u| *u == t) {
                Some(p) => {
                    terms.remove(p);
                }
                None => terms.push(t),
            },
        }
    }
    let base = match terms.len() {
        0 => return BoolExpr::Const(parity),
        1 => terms.pop().expect("one term"),
        _ => BoolExpr::Xor(terms),
    };
    if parity {
        negate(base)
    } else {
        base
    }
}

fn simplify_maj(a: BoolExpr, b: BoolExpr, c: BoolExpr) -> BoolExpr {
    let v = [a, b, c];
    for (i, j, k) in [(0, 1, 2), (0, 2, 1), (1, 2, 0)] {
        if v[i] == v[j] {
            return v[i].clone();
        }
        if complementary(&v[i], &v[j]) {
            return v[k].clone();
        }
    }
    for (i, j, k) in [(2, 0, 1), (1, 0, 2), (0, 1, 2)] {
        if let BoolExpr::Const(bit) = v[i] {
            let pair = vec![v[j].clone(), v[k].clone()];
            return if bit { fold_and_or(&pair, false) } else { fold_and_or(&pair, true) };
        }
    }
    let [a, b, c] = v;
    BoolExpr::maj(a, b, c)
}

impl fmt::Display for BoolExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Var(v) => f.write_str(v),
            Self::Const(b) => f.write_str(if *b { "1" } else { "0" }),
            Self::Not(x) => write!(f, "not({x})"),
            Self::And(es) | Self::Or(es) | Self::Xor(es) => {
                write!(f, "{}(", self.op_name())?;
                for (i, e) in es.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{e}")?;
                }
                f.write_str(")")
            }
            Self::Maj(es) => write!(f, "maj({}, {}, {})", es[0], es[1], es[2]),
        }
    }
}

impl std::str::FromStr for BoolExpr {
    type Err = SynthError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_expr(s)
    }
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Open,
    Close,
    Comma,
    End,
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &(Tok, usize) {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if t.0 != Tok::End {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), SynthError> {
        let (tok, column) = self.next();
        if tok == want {
            Ok(())
        } else {
            Err(SynthError::Parse {
                column,
                message: format!("expected {what}, found {}", describe(&tok)),
            })
        }
    }

    fn expr(&mut self) -> Result<BoolExpr, SynthError> {
        let (tok, column) = self.next();
        let name = match tok {
            Tok::Ident(name) => name,
            other => {
                return Err(SynthError::Parse {
                    column,
                    message: format!("expected an expression, found {}", describe(&other)),
                })
            }
        };
        if self.peek().0 != Tok::Open {
            return match name.as_str() {
                "0" => Ok(BoolExpr::Const(false)),
                "1" => Ok(BoolExpr::Const(true)),
                _ if is_identifier(&name) => Ok(BoolExpr::Var(name)),
                _ => Err(SynthError::Parse {
                    column,
                    message: format!("invalid variable name `{name}`"),
                }),
            };
        }
        self.next();
        let mut args = vec![self.expr()?];
        while self.peek().0 == Tok::Comma {
            self.next();
            args.push(self.expr()?);
        }
        self.expect(Tok::Close, "`,` or `)`")?;
        let arity_error = |expected: &str| SynthError::Parse {
            column,
            message: format!("`{name}` takes {expected} operands, found {}", args.len()),
        };
        match name.to_ascii_lowercase().as_str() {
            "not" if args.len() == 1 => Ok(BoolExpr::not(args.pop().expect("one arg"))),
            "not" => Err(arity_error("1")),
            "and" | "or" | "xor" if args.len() < 2 => Err(arity_error("at least 2")),
            "and" => Ok(BoolExpr::And(args)),
            "or" => Ok(BoolExpr::Or(args)),
            "xor" => Ok(BoolExpr::Xor(args)),
            "maj" | "maj3" => match <[BoolExpr; 3]>::try_from(args) {
                Ok(three) => Ok(BoolExpr::Maj(Box::new(three))),
                Err(args) => Err(SynthError::Parse {
                    column,
                    message: format!("`{name}` takes 3 operands, found {}", args.len()),
                }),
            },
            _ => Err(SynthError::Parse {
                column,
                message: format!("unknown operator `{name}`"),
            }),
        }
    }
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Open => "`(`".into(),
        Tok::Close => "`)`".into(),
        Tok::Comma => "`,`".into(),
        Tok::End => "end of input".into(),
    }
}

/// Parses prefix notation such as `maj(a, not(b), c)`. Operators are `not`,
/// `and`, `or`, `xor` and `maj`; `0` and `1` are constants. Error columns
/// are 1-based.
pub fn parse_expr(text: &str) -> Result<BoolExpr, SynthError> {
    let mut toks = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        match c {
            '(' => toks.push((Tok::Open, column)),
            ')' => toks.push((Tok::Close, column)),
            ',' => toks.push((Tok::Comma, column)),
            c if c.is_whitespace() => {}
            c if c.is_ascii_alphanumeric() || c == '_' => {
                let start = i;
                while i + 1 < chars.len() && (chars[i + 1].is_ascii_alphanumeric() || chars[i + 1] == '_') {
                    i += 1;
                }
                toks.push((Tok::Ident(chars[start..=i].iter().collect()), column));
            }
            other => {
                return Err(SynthError::Parse {
                    column,
                    message: format!("unexpected character `{other}`"),
                })
            }
        }
        i += 1;
    }
    toks.push((Tok::End, chars.len() + 1));
    let mut p = Parser { toks, pos: 0 };
    let e = p.expr()?;
    p.expect(Tok::End, "end of input")?;
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gate::input_rows;

    fn p(s: &str) -> BoolExpr {
        parse_expr(s).unwrap()
    }

    #[test]
    fn parse_and_display() {
        let e = p("maj(a, not(b), c)");
        assert_eq!(e, BoolExpr::maj(BoolExpr::var("a"), BoolExpr::not(BoolExpr::var("b")), BoolExpr::var("c")));
        assert_eq!(e.to_string(), "maj(a, not(b), c)");
        assert_eq!(p("AND(x,1)").to_string(), "and(x, 1)");
        assert_eq!(e.variables(), ["a", "b", "c"]);
    }

    #[test]
    fn parse_errors_have_columns() {
        let err = |s: &str| match parse_expr(s).unwrap_err() {
            SynthError::Parse { column, .. } => column,
            e => panic!("{e:?}"),
        };
        assert_eq!(err("and(a)"), 1);
        assert_eq!(err("maj(a, b)"), 1);
        assert_eq!(err("or(a, b"), 8);
        assert_eq!(err("nand(a, b)"), 1);
        assert_eq!(err("and(a, $)"), 8);
        assert_eq!(err("a b"), 3);
        assert_eq!(err("9x"), 1);
    }

    #[test]
    fn majority_peepholes() {
        assert_eq!(p("maj(a, b, 0)").simplify(), p("and(a, b)"));
        assert_eq!(p("maj(1, a, b)").simplify(), p("or(a, b)"));
        assert_eq!(p("maj(a, b, a)").simplify(), p("a"));
        assert_eq!(p("maj(a, not(a), c)").simplify(), p("c"));
        assert_eq!(p("not(not(x))").simplify(), p("x"));
        assert_eq!(p("xor(a, a, b)").simplify(), p("b"));
        assert_eq!(p("xor(a, 1)").simplify(), p("not(a)"));
        assert_eq!(p("and(a, or(b, 0), and(c, 1))").simplify(), p("and(a, b, c)"));
        assert_eq!(p("or(a, not(a))").simplify(), BoolExpr::Const(true));
    }

    #[test]
    fn simplify_preserves_function() {
        for s in [
            "maj(xor(a, b, 1), not(and(a, c)), or(c, 0, b))",
            "xor(not(a), not(b), maj(a, b, not(c)))",
            "and(or(a, not(a)), xor(b, b), c)",
        ] {
            let e = p(s);
            let vars = e.variables();
            for bits in input_rows(vars.len()) {
                assert_eq!(e.eval(&vars, &bits), e.simplify().eval(&vars, &bits), "{s}");
            }
        }
    }
}

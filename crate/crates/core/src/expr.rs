//! Scalar expressions over a small fixed grammar.
//!
//! Expressions are how users write displacements `Δ(x, y)`, integrands `f(t)`,
//! right-hand sides `F(t, u)`, source terms `h(t)` and rescalings `φ(r)`.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?          right associative
//! atom   := number | constant | variable | func '(' args ')' | '(' expr ')'
//! ```
//!
//! Constants are `pi` and `e`; functions are `exp ln sin cos sqrt abs`
//! (unary) and `min max` (binary).

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("empty expression")]
    Empty,
    #[error("syntax error at {pos}: expected one of {expected:?}, found {found}")]
    Syntax {
        pos: usize,
        expected: Vec<&'static str>,
        found: String,
    },
    #[error("unknown identifier `{name}` at {pos}")]
    UnknownIdentifier { name: String, pos: usize },
    #[error("`{func}` takes {expected} argument(s), got {found} (at {pos})")]
    Arity {
        func: &'static str,
        expected: usize,
        found: usize,
        pos: usize,
    },
    #[error("`{0}` cannot be used as a variable name")]
    ReservedName(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("domain error in `{subexpr}`: {reason}")]
    Domain { subexpr: String, reason: String },
    #[error("no binding for variable `{0}`")]
    MissingBinding(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Ln,
    Sin,
    Cos,
    Sqrt,
    Abs,
    Min,
    Max,
}

impl Func {
    const ALL: [Func; 8] = [
        Func::Exp,
        Func::Ln,
        Func::Sin,
        Func::Cos,
        Func::Sqrt,
        Func::Abs,
        Func::Min,
        Func::Max,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }

    fn lookup(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constant {
    Pi,
    E,
}

impl Constant {
    fn lookup(name: &str) -> Option<Constant> {
        match name {
            "pi" => Some(Constant::Pi),
            "e" => Some(Constant::E),
            _ => None,
        }
    }

    fn value(self) -> f64 {
        match self {
            Constant::Pi => std::f64::consts::PI,
            Constant::E => std::f64::consts::E,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Constant::Pi => "pi",
            Constant::E => "e",
        }
    }
}

/// Expression tree. Variables are slots into the owning [`Expr`]'s variable list.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    Const(Constant),
    Var(usize),
    Neg(Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

/// A parsed expression together with its declared variables and source text.
#[derive(Debug, Clone)]
pub struct Expr {
    root: Node,
    vars: Vec<String>,
    source: String,
}

impl PartialEq for Expr {
    /// Structural equality of the trees over the same variable names.
    fn eq(&self, other: &Self) -> bool {
        self.root == other.root && self.vars == other.vars
    }
}

impl Expr {
    /// Parse `source`, allowing only the listed variable names.
    pub fn parse(source: &str, allowed_vars: &[&str]) -> Result<Expr, ParseError> {
        for v in allowed_vars {
            if Func::lookup(v).is_some() || Constant::lookup(v).is_some() {
                return Err(ParseError::ReservedName(v.to_string()));
            }
        }
        let tokens = lex(source)?;
        if matches!(tokens[0].kind, Tok::End) {
            return Err(ParseError::Empty);
        }
        let mut parser = Parser {
            tokens,
            pos: 0,
            vars: allowed_vars,
        };
        let root = parser.expr()?;
        parser.expect_end()?;
        Ok(Expr {
            root,
            vars: allowed_vars.iter().map(|s| s.to_string()).collect(),
            source: source.to_string(),
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    /// Declared variable names, in slot order.
    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    /// Variables that actually occur in the tree.
    pub fn free_vars(&self) -> Vec<&str> {
        let mut used = vec![false; self.vars.len()];
        mark_vars(&self.root, &mut used);
        self.vars
            .iter()
            .zip(used)
            .filter_map(|(v, u)| u.then_some(v.as_str()))
            .collect()
    }

    /// Evaluate with values given in declared-variable order.
    pub fn eval_slots(&self, values: &[f64]) -> Result<f64, EvalError> {
        eval_node(&self.root, &|i| values.get(i).copied(), &self.vars)
    }

    /// Evaluate with named bindings.
    pub fn eval(&self, bindings: &[(&str, f64)]) -> Result<f64, EvalError> {
        let lookup = |i: usize| {
            let name = &self.vars[i];
            bindings.iter().find(|(n, _)| n == name).map(|&(_, v)| v)
        };
        eval_node(&self.root, &lookup, &self.vars)
    }

    pub fn eval_map(&self, bindings: &HashMap<String, f64>) -> Result<f64, EvalError> {
        let lookup = |i: usize| bindings.get(&self.vars[i]).copied();
        eval_node(&self.root, &lookup, &self.vars)
    }

    /// Re-express over a new variable list, mapping each old name to a new one.
    ///
    /// Used to turn `D2(x, y)` into the diagonal density `D2(t, t)`.
    pub fn rename_vars(&self, mapping: &[(&str, &str)], new_vars: &[&str]) -> Result<Expr, ParseError> {
        let mut slot_map = Vec::with_capacity(self.vars.len());
        for old in &self.vars {
            let target = mapping
                .iter()
                .find(|(o, _)| o == old)
                .map(|&(_, n)| n)
                .unwrap_or(old.as_str());
            slot_map.push(new_vars.iter().position(|v| *v == target));
        }
        let root = remap(&self.root, &slot_map, &self.vars)?;
        let mut out = Expr {
            root,
            vars: new_vars.iter().map(|s| s.to_string()).collect(),
            source: String::new(),
        };
        out.source = out.to_string();
        Ok(out)
    }
}

impl fmt::Display for Expr {
    /// Fully parenthesised form; reparses to an equal tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(f, &self.root, &self.vars)
    }
}

fn mark_vars(node: &Node, used: &mut [bool]) {
    match node {
        Node::Var(i) => used[*i] = true,
        Node::Neg(a) => mark_vars(a, used),
        Node::Binary(_, a, b) => {
            mark_vars(a, used);
            mark_vars(b, used);
        }
        Node::Call(_, args) => args.iter().for_each(|a| mark_vars(a, used)),
        Node::Num(_) | Node::Const(_) => {}
    }
}

fn remap(node: &Node, slots: &[Option<usize>], vars: &[String]) -> Result<Node, ParseError> {
    Ok(match node {
        Node::Var(i) => match slots[*i] {
            Some(j) => Node::Var(j),
            None => {
                return Err(ParseError::UnknownIdentifier {
                    name: vars[*i].clone(),
                    pos: 0,
                })
            }
        },
        Node::Neg(a) => Node::Neg(Box::new(remap(a, slots, vars)?)),
        Node::Binary(op, a, b) => Node::Binary(*op, Box::new(remap(a, slots, vars)?), Box::new(remap(b, slots, vars)?)),
        Node::Call(func, args) => Node::Call(
            *func,
            args.iter().map(|a| remap(a, slots, vars)).collect::<Result<_, _>>()?,
        ),
        Node::Num(v) => Node::Num(*v),
        Node::Const(c) => Node::Const(*c),
    })
}

fn write_node(f: &mut fmt::Formatter<'_>, node: &Node, vars: &[String]) -> fmt::Result {
    match node {
        Node::Num(v) => write!(f, "{v}"),
        Node::Const(c) => f.write_str(c.name()),
        Node::Var(i) => f.write_str(&vars[*i]),
        Node::Neg(a) => {
            f.write_str("(-")?;
            write_node(f, a, vars)?;
            f.write_str(")")
        }
        Node::Binary(op, a, b) => {
            f.write_str("(")?;
            write_node(f, a, vars)?;
            write!(f, " {} ", op.symbol())?;
            write_node(f, b, vars)?;
            f.write_str(")")
        }
        Node::Call(func, args) => {
            write!(f, "{}(", func.name())?;
            for (k, a) in args.iter().enumerate() {
                if k > 0 {
                    f.write_str(", ")?;
                }
                write_node(f, a, vars)?;
            }
            f.write_str(")")
        }
    }
}

struct Shown<'a>(&'a Node, &'a [String]);

impl fmt::Display for Shown<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(f, self.0, self.1)
    }
}

fn domain_err(node: &Node, vars: &[String], reason: impl Into<String>) -> EvalError {
    EvalError::Domain {
        subexpr: Shown(node, vars).to_string(),
        reason: reason.into(),
    }
}

fn eval_node(node: &Node, lookup: &dyn Fn(usize) -> Option<f64>, vars: &[String]) -> Result<f64, EvalError> {
    let value = match node {
        Node::Num(v) => *v,
        Node::Const(c) => c.value(),
        Node::Var(i) => lookup(*i).ok_or_else(|| EvalError::MissingBinding(vars[*i].clone()))?,
        Node::Neg(a) => -eval_node(a, lookup, vars)?,
        Node::Binary(op, a, b) => {
            let l = eval_node(a, lookup, vars)?;
            let r = eval_node(b, lookup, vars)?;
            match op {
                BinOp::Add => l + r,
                BinOp::Sub => l - r,
                BinOp::Mul => l * r,
                BinOp::Div => {
                    if r == 0.0 {
                        return Err(domain_err(node, vars, "division by zero"));
                    }
                    l / r
                }
                BinOp::Pow => l.powf(r),
            }
        }
        Node::Call(func, args) => {
            let x = eval_node(&args[0], lookup, vars)?;
            match func {
                Func::Exp => x.exp(),
                Func::Ln => {
                    if x <= 0.0 {
                        return Err(domain_err(node, vars, format!("ln of non-positive value {x}")));
                    }
                    x.ln()
                }
                Func::Sin => x.sin(),
                Func::Cos => x.cos(),
                Func::Sqrt => {
                    if x < 0.0 {
                        return Err(domain_err(node, vars, format!("sqrt of negative value {x}")));
                    }
                    x.sqrt()
                }
                Func::Abs => x.abs(),
                Func::Min => x.min(eval_node(&args[1], lookup, vars)?),
                Func::Max => x.max(eval_node(&args[1], lookup, vars)?),
            }
        }
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(domain_err(node, vars, format!("non-finite result {value}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
    End,
}

#[derive(Debug, Clone)]
struct Token {
    kind: Tok,
    pos: usize,
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Num(v) => format!("number {v}"),
        Tok::Ident(s) => format!("identifier `{s}`"),
        Tok::Op(c) => format!("`{c}`"),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::Comma => "`,`".into(),
        Tok::End => "end of input".into(),
    }
}

const OPERAND: &[&str] = &["number", "identifier", "`(`", "`-`"];

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let kind = if c.is_ascii_digit() || c == '.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            // optional exponent, only when followed by digits
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text = &src[start..i];
            match text.parse::<f64>() {
                Ok(v) if v.is_finite() => Tok::Num(v),
                _ => {
                    return Err(ParseError::Syntax {
                        pos: start,
                        expected: vec!["number"],
                        found: format!("`{text}`"),
                    })
                }
            }
        } else if c.is_ascii_alphabetic() || c == '_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            Tok::Ident(src[start..i].to_string())
        } else {
            i += c.len_utf8().max(1);
            match c {
                '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ',' => Tok::Comma,
                _ => {
                    let ch = src[start..].chars().next().unwrap_or(c);
                    return Err(ParseError::Syntax {
                        pos: start,
                        expected: vec!["operator", "operand"],
                        found: format!("`{ch}`"),
                    });
                }
            }
        };
        out.push(Token { kind, pos: start });
    }
    out.push(Token {
        kind: Tok::End,
        pos: src.len(),
    });
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    vars: &'a [&'a str],
}

impl Parser<'_> {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if !matches!(t.kind, Tok::End) {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&self, expected: &[&'static str]) -> Result<T, ParseError> {
        let t = self.peek();
        Err(ParseError::Syntax {
            pos: t.pos,
            expected: expected.to_vec(),
            found: describe(&t.kind),
        })
    }

    fn expect_end(&self) -> Result<(), ParseError> {
        if matches!(self.peek().kind, Tok::End) {
            Ok(())
        } else {
            self.fail(&["operator", "end of input"])
        }
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().kind {
                Tok::Op('+') => BinOp::Add,
                Tok::Op('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek().kind {
                Tok::Op('*') => BinOp::Mul,
                Tok::Op('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        if matches!(self.peek().kind, Tok::Op('-')) {
            self.bump();
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.atom()?;
        if matches!(self.peek().kind, Tok::Op('^')) {
            self.bump();
            let exponent = self.unary()?;
            return Ok(Node::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, ParseError> {
        let tok = self.peek().clone();
        match tok.kind {
            Tok::Num(v) => {
                self.bump();
                Ok(Node::Num(v))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                if !matches!(self.peek().kind, Tok::RParen) {
                    return self.fail(&["operator", "`)`"]);
                }
                self.bump();
                Ok(inner)
            }
            Tok::Ident(name) => {
                self.bump();
                if let Some(func) = Func::lookup(&name) {
                    return self.call(func, tok.pos);
                }
                if let Some(i) = self.vars.iter().position(|v| *v == name) {
                    return Ok(Node::Var(i));
                }
                if let Some(c) = Constant::lookup(&name) {
                    return Ok(Node::Const(c));
                }
                Err(ParseError::UnknownIdentifier { name, pos: tok.pos })
            }
            _ => self.fail(OPERAND),
        }
    }

    fn call(&mut self, func: Func, pos: usize) -> Result<Node, ParseError> {
        if !matches!(self.peek().kind, Tok::LParen) {
            return self.fail(&["`(`"]);
        }
        self.bump();
        let mut args = Vec::new();
        if !matches!(self.peek().kind, Tok::RParen) {
            args.push(self.expr()?);
            while matches!(self.peek().kind, Tok::Comma) {
                self.bump();
                args.push(self.expr()?);
            }
        }
        if !matches!(self.peek().kind, Tok::RParen) {
            return self.fail(&["operator", "`,`", "`)`"]);
        }
        self.bump();
        if args.len() != func.arity() {
            return Err(ParseError::Arity {
                func: func.name(),
                expected: func.arity(),
                found: args.len(),
                pos,
            });
        }
        Ok(Node::Call(func, args))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const XY: &[&str] = &["x", "y"];

    #[test]
    fn parses_exponential_displacement() {
        let e = Expr::parse("exp(y^2 - x^2) - exp(x - y)", XY).unwrap();
        assert_eq!(e.free_vars(), vec!["x", "y"]);
        // e^{-1} - e: the formula evaluated directly
        let v = e.eval(&[("x", 1.0), ("y", 0.0)]).unwrap();
        assert!((v + 2.3504023872876028).abs() < 1e-15);
        let v = e.eval(&[("x", 0.0), ("y", 1.0)]).unwrap();
        assert!((v - 2.3504023872876028).abs() < 1e-15);
        assert_eq!(e.eval(&[("x", 0.3), ("y", 0.3)]).unwrap(), 0.0);
    }

    #[test]
    fn constant_and_arithmetic() {
        let zero = Expr::parse("0", XY).unwrap();
        assert!(zero.free_vars().is_empty());
        assert_eq!(zero.eval(&[]).unwrap(), 0.0);
        let lin = Expr::parse("2*t + 1", &["t"]).unwrap();
        assert_eq!(lin.eval(&[("t", 1.0)]).unwrap(), 3.0);
    }

    #[test]
    fn precedence_and_associativity() {
        let sub = Expr::parse("x - y - 1", XY).unwrap();
        assert_eq!(sub.eval(&[("x", 0.0), ("y", 0.0)]).unwrap(), -1.0);
        // unary minus binds looser than ^
        let neg = Expr::parse("-x^2", XY).unwrap();
        assert_eq!(neg.eval(&[("x", 3.0)]).unwrap(), -9.0);
        // ^ is right associative
        let pow = Expr::parse("2^3^2", &[]).unwrap();
        assert_eq!(pow.eval(&[]).unwrap(), 512.0);
        let negexp = Expr::parse("2^-1", &[]).unwrap();
        assert_eq!(negexp.eval(&[]).unwrap(), 0.5);
        let mixed = Expr::parse("1 + 2*3 - 4/2", &[]).unwrap();
        assert_eq!(mixed.eval(&[]).unwrap(), 5.0);
    }

    #[test]
    fn constants_and_functions() {
        let e = Expr::parse("cos(pi) + ln(e) + sqrt(4) + abs(-2) + min(1, 2) + max(1, 2)", &[]).unwrap();
        assert_eq!(e.eval(&[]).unwrap(), -1.0 + 1.0 + 2.0 + 2.0 + 1.0 + 2.0);
        let s = Expr::parse("1.5e-3 + .5", &[]).unwrap();
        assert_eq!(s.eval(&[]).unwrap(), 1.5e-3 + 0.5);
    }

    #[test]
    fn domain_errors_are_reported() {
        let ln = Expr::parse("ln(t)", &["t"]).unwrap();
        match ln.eval(&[("t", 0.0)]) {
            Err(EvalError::Domain { subexpr, .. }) => assert_eq!(subexpr, "ln(t)"),
            other => panic!("expected domain error, got {other:?}"),
        }
        let sq = Expr::parse("1 + sqrt(t - 2)", &["t"]).unwrap();
        assert!(matches!(sq.eval(&[("t", 1.0)]), Err(EvalError::Domain { .. })));
        let div = Expr::parse("1/(t-t)", &["t"]).unwrap();
        assert!(matches!(div.eval(&[("t", 1.0)]), Err(EvalError::Domain { .. })));
        let pow = Expr::parse("t^0.5", &["t"]).unwrap();
        assert!(matches!(pow.eval(&[("t", -1.0)]), Err(EvalError::Domain { .. })));
        let overflow = Expr::parse("exp(t)", &["t"]).unwrap();
        assert!(matches!(overflow.eval(&[("t", 1000.0)]), Err(EvalError::Domain { .. })));
    }

    #[test]
    fn missing_binding() {
        let e = Expr::parse("x + y", XY).unwrap();
        assert_eq!(e.eval(&[("x", 1.0)]), Err(EvalError::MissingBinding("y".into())));
        // unused declared variables need no binding
        let only_x = Expr::parse("x", XY).unwrap();
        assert_eq!(only_x.eval(&[("x", 2.0)]).unwrap(), 2.0);
    }

    #[test]
    fn parse_errors() {
        assert_eq!(Expr::parse("   ", XY), Err(ParseError::Empty));
        assert!(matches!(
            Expr::parse("foo(x)", XY),
            Err(ParseError::UnknownIdentifier { ref name, pos: 0 }) if name == "foo"
        ));
        assert!(matches!(
            Expr::parse("x + z", XY),
            Err(ParseError::UnknownIdentifier { ref name, pos: 4 }) if name == "z"
        ));
        assert!(matches!(
            Expr::parse("min(x)", XY),
            Err(ParseError::Arity {
                func: "min",
                expected: 2,
                found: 1,
                ..
            })
        ));
        assert!(matches!(
            Expr::parse("exp(x, y)", XY),
            Err(ParseError::Arity {
                func: "exp",
                expected: 1,
                found: 2,
                ..
            })
        ));
        match Expr::parse("x + * y", XY) {
            Err(ParseError::Syntax { pos, expected, .. }) => {
                assert_eq!(pos, 4);
                assert!(expected.contains(&"number"));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            Expr::parse("(x + y", XY),
            Err(ParseError::Syntax { pos: 6, .. })
        ));
        assert!(matches!(Expr::parse("x y", XY), Err(ParseError::Syntax { pos: 2, .. })));
        assert!(matches!(
            Expr::parse("x $ y", XY),
            Err(ParseError::Syntax { pos: 2, .. })
        ));
        assert!(matches!(Expr::parse("1e999", XY), Err(ParseError::Syntax { .. })));
        assert_eq!(Expr::parse("1", &["e"]), Err(ParseError::ReservedName("e".into())));
    }

    #[test]
    fn rename_to_diagonal() {
        let d2 = Expr::parse("2*y*exp(y^2-x^2) + exp(x-y)", XY).unwrap();
        let diag = d2.rename_vars(&[("x", "t"), ("y", "t")], &["t"]).unwrap();
        for &t in &[0.0, 0.25, 0.7, 1.0] {
            let a = diag.eval(&[("t", t)]).unwrap();
            let b = d2.eval(&[("x", t), ("y", t)]).unwrap();
            assert_eq!(a.to_bits(), b.to_bits());
            assert!((a - (2.0 * t + 1.0)).abs() < 1e-15);
        }
        let reparsed = Expr::parse(diag.source(), &["t"]).unwrap();
        assert_eq!(reparsed, diag);
    }

    #[test]
    fn shared_across_threads() {
        let e = std::sync::Arc::new(Expr::parse("sin(x)*y", XY).unwrap());
        let expected = e.eval(&[("x", 0.4), ("y", 3.0)]).unwrap();
        let handles: Vec<_> = (0..4)
            .map(|_| {
                let e = e.clone();
                std::thread::spawn(move || e.eval(&[("x", 0.4), ("y", 3.0)]).unwrap())
            })
            .collect();
        for h in handles {
            assert_eq!(h.join().unwrap().to_bits(), expected.to_bits());
        }
    }

    fn arb_node() -> impl Strategy<Value = Node> {
        let leaf = prop_oneof![
            (0.0f64..1e6).prop_map(Node::Num),
            Just(Node::Const(Constant::Pi)),
            Just(Node::Const(Constant::E)),
            (0usize..2).prop_map(Node::Var),
        ];
        leaf.prop_recursive(5, 48, 2, |inner| {
            let ops = prop_oneof![
                Just(BinOp::Add),
                Just(BinOp::Sub),
                Just(BinOp::Mul),
                Just(BinOp::Div),
                Just(BinOp::Pow)
            ];
            let unary = prop_oneof![
                Just(Func::Exp),
                Just(Func::Ln),
                Just(Func::Sin),
                Just(Func::Cos),
                Just(Func::Sqrt),
                Just(Func::Abs)
            ];
            prop_oneof![
                inner.clone().prop_map(|a| Node::Neg(Box::new(a))),
                (ops, inner.clone(), inner.clone()).prop_map(|(op, a, b)| Node::Binary(op, Box::new(a), Box::new(b))),
                (unary, inner.clone()).prop_map(|(f, a)| Node::Call(f, vec![a])),
                (prop::bool::ANY, inner.clone(), inner)
                    .prop_map(|(m, a, b)| Node::Call(if m { Func::Min } else { Func::Max }, vec![a, b])),
            ]
        })
    }

    proptest! {
        #[test]
        fn printed_form_reparses_to_same_tree(root in arb_node()) {
            let e = Expr { root, vars: vec!["x".into(), "y".into()], source: String::new() };
            let printed = e.to_string();
            let back = Expr::parse(&printed, XY).unwrap();
            prop_assert_eq!(back, e);
        }

        #[test]
        fn eval_is_deterministic_and_never_nan(root in arb_node(), x in -3.0f64..3.0, y in -3.0f64..3.0) {
            let e = Expr { root, vars: vec!["x".into(), "y".into()], source: String::new() };
            let first = e.eval(&[("x", x), ("y", y)]);
            let second = e.eval_slots(&[x, y]);
            match (&first, &second) {
                (Ok(a), Ok(b)) => {
                    prop_assert_eq!(a.to_bits(), b.to_bits());
                    prop_assert!(a.is_finite());
                }
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false, "{first:?} vs {second:?}"),
            }
        }
    }
}

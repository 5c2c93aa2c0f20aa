//! Scalar-field expressions over the extended phase space coordinates
//! `t, q1..qn, p1..pn` plus named parameters.
//!
//! Grammar (whitespace insignificant, `^` right-associative):
//!
//! ```text
//! expr   := term (("+"|"-") term)*
//! term   := factor (("*"|"/") factor)*
//! factor := unary ("^" factor)?
//! unary  := "-" unary | atom
//! atom   := NUMBER | IDENT | IDENT "(" expr ")" | "(" expr ")"
//! ```

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::geometry::PhasePoint;
use crate::jet::Jet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    /// Time coordinate, index 0 in gradient ordering.
    T,
    /// Configuration coordinate `q{k+1}`, gradient index `1 + k`.
    Q(usize),
    /// Momentum coordinate `p{k+1}`, gradient index `1 + n + k`.
    P(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }

    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Number(f64),
    Variable(Var),
    Parameter(String),
    Neg(Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

/// A parsed scalar field on the extended phase space of dimension `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    pub root: Node,
    pub n: usize,
    source: String,
}

impl Expression {
    pub fn source(&self) -> &str {
        &self.source
    }

    /// Names of the parameters the tree actually references.
    pub fn referenced_params(&self) -> HashSet<String> {
        let mut out = HashSet::new();
        collect_params(&self.root, &mut out);
        out
    }
}

fn collect_params(node: &Node, out: &mut HashSet<String>) {
    match node {
        Node::Parameter(name) => {
            out.insert(name.clone());
        }
        Node::Neg(a) | Node::Call(_, a) => collect_params(a, out),
        Node::Binary(_, a, b) => {
            collect_params(a, out);
            collect_params(b, out);
        }
        _ => {}
    }
}

// ---------------------------------------------------------------------------
// Tokenizer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokenize(text: &'a str) -> Result<Vec<(usize, Token)>> {
        let mut lx = Lexer { src: text.as_bytes(), pos: 0 };
        let mut out = Vec::new();
        loop {
            lx.skip_ws();
            if lx.pos >= lx.src.len() {
                break;
            }
            let start = lx.pos;
            let c = lx.src[lx.pos];
            let tok = match c {
                b'0'..=b'9' | b'.' => lx.number(start)?,
                b'a'..=b'z' | b'A'..=b'Z' | b'_' => lx.ident(),
                b'+' | b'-' | b'*' | b'/' | b'^' => {
                    lx.pos += 1;
                    Token::Op(c as char)
                }
                b'(' => {
                    lx.pos += 1;
                    Token::LParen
                }
                b')' => {
                    lx.pos += 1;
                    Token::RParen
                }
                _ => {
                    return Err(Error::Syntax {
                        position: start,
                        message: format!("unexpected character `{}`", c as char),
                    })
                }
            };
            out.push((start, tok));
        }
        Ok(out)
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn number(&mut self, start: usize) -> Result<Token> {
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_digit() || self.src[self.pos] == b'.')
        {
            self.pos += 1;
        }
        // optional exponent
        if self.pos < self.src.len() && (self.src[self.pos] == b'e' || self.src[self.pos] == b'E') {
            let mut la = self.pos + 1;
            if la < self.src.len() && (self.src[la] == b'+' || self.src[la] == b'-') {
                la += 1;
            }
            if la < self.src.len() && self.src[la].is_ascii_digit() {
                self.pos = la;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        text.parse::<f64>().map(Token::Number).map_err(|_| Error::Syntax {
            position: start,
            message: format!("malformed number `{text}`"),
        })
    }

    fn ident(&mut self) -> Token {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        Token::Ident(std::str::from_utf8(&self.src[start..self.pos]).unwrap().to_string())
    }
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct Parser<'a> {
    tokens: Vec<(usize, Token)>,
    idx: usize,
    n: usize,
    params: &'a HashSet<String>,
    end: usize,
}

pub fn parse_expression(text: &str, n: usize, param_names: &HashSet<String>) -> Result<Expression> {
    if text.trim().is_empty() {
        return Err(Error::Syntax { position: 0, message: "empty expression".to_string() });
    }
    if n == 0 {
        return Err(Error::InvalidConfig("dimension n must be >= 1".to_string()));
    }
    let tokens = Lexer::tokenize(text)?;
    let mut p = Parser { tokens, idx: 0, n, params: param_names, end: text.len() };
    let root = p.expr()?;
    if p.idx < p.tokens.len() {
        let (pos, _) = p.tokens[p.idx].clone();
        return Err(Error::Syntax { position: pos, message: "trailing input".to_string() });
    }
    Ok(Expression { root, n, source: text.to_string() })
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.idx).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.tokens.get(self.idx).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.idx).map(|(_, t)| t.clone());
        self.idx += 1;
        t
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        while let Some(Token::Op(c @ ('+' | '-'))) = self.peek() {
            let op = if *c == '+' { BinOp::Add } else { BinOp::Sub };
            self.bump();
            let rhs = self.term()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.factor()?;
        while let Some(Token::Op(c @ ('*' | '/'))) = self.peek() {
            let op = if *c == '*' { BinOp::Mul } else { BinOp::Div };
            self.bump();
            let rhs = self.factor()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Node> {
        let base = self.unary()?;
        if let Some(Token::Op('^')) = self.peek() {
            self.bump();
            // right-associative
            let exp = self.factor()?;
            return Ok(Node::Binary(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn unary(&mut self) -> Result<Node> {
        if let Some(Token::Op('-')) = self.peek() {
            self.bump();
            let inner = self.unary()?;
            return Ok(Node::Neg(Box::new(inner)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Node> {
        let pos = self.pos();
        match self.bump() {
            Some(Token::Number(v)) => Ok(Node::Number(v)),
            Some(Token::LParen) => {
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Some(Token::Ident(name)) => {
                if let Some(f) = Func::from_name(&name) {
                    if let Some(Token::LParen) = self.peek() {
                        self.bump();
                        let arg = self.expr()?;
                        self.expect_rparen()?;
                        return Ok(Node::Call(f, Box::new(arg)));
                    }
                    return Err(Error::Syntax {
                        position: pos,
                        message: format!("function `{name}` requires an argument list"),
                    });
                }
                self.resolve_ident(&name)
            }
            Some(Token::Op(c)) => Err(Error::Syntax {
                position: pos,
                message: format!("unexpected operator `{c}`"),
            }),
            Some(Token::RParen) => {
                Err(Error::Syntax { position: pos, message: "unexpected `)`".to_string() })
            }
            None => Err(Error::Syntax {
                position: pos,
                message: "unexpected end of input".to_string(),
            }),
        }
    }

    fn expect_rparen(&mut self) -> Result<()> {
        let pos = self.pos();
        match self.bump() {
            Some(Token::RParen) => Ok(()),
            _ => Err(Error::Syntax { position: pos, message: "expected `)`".to_string() }),
        }
    }

    fn resolve_ident(&self, name: &str) -> Result<Node> {
        if name == "t" {
            return Ok(Node::Variable(Var::T));
        }
        if name == "pi" {
            return Ok(Node::Number(std::f64::consts::PI));
        }
        if let Some(rest) = name.strip_prefix('q') {
            if let Ok(k) = rest.parse::<usize>() {
                if k == 0 || k > self.n {
                    return Err(Error::IndexOutOfRange { name: name.to_string(), n: self.n });
                }
                return Ok(Node::Variable(Var::Q(k - 1)));
            }
        }
        if let Some(rest) = name.strip_prefix('p') {
            if let Ok(k) = rest.parse::<usize>() {
                if k == 0 || k > self.n {
                    return Err(Error::IndexOutOfRange { name: name.to_string(), n: self.n });
                }
                return Ok(Node::Variable(Var::P(k - 1)));
            }
        }
        if self.params.contains(name) {
            return Ok(Node::Parameter(name.to_string()));
        }
        Err(Error::UnknownIdentifier { name: name.to_string() })
    }
}

// ---------------------------------------------------------------------------
// Printer
// ---------------------------------------------------------------------------

fn precedence(node: &Node) -> u8 {
    match node {
        Node::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
        Node::Binary(BinOp::Mul | BinOp::Div, ..) => 2,
        Node::Neg(_) => 3,
        Node::Binary(BinOp::Pow, ..) => 4,
        _ => 5,
    }
}

fn print_node(node: &Node, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match node {
        Node::Number(v) => {
            if *v < 0.0 {
                write!(f, "({v})")
            } else {
                write!(f, "{v}")
            }
        }
        Node::Variable(Var::T) => write!(f, "t"),
        Node::Variable(Var::Q(k)) => write!(f, "q{}", k + 1),
        Node::Variable(Var::P(k)) => write!(f, "p{}", k + 1),
        Node::Parameter(name) => write!(f, "{name}"),
        Node::Neg(a) => {
            // unary minus binds tighter than `^`, so a power operand needs
            // parentheses to survive a reparse
            write!(f, "-")?;
            print_child(a, 4, true, f)
        }
        Node::Binary(op, a, b) => {
            let (sym, prec) = match op {
                BinOp::Add => ("+", 1),
                BinOp::Sub => ("-", 1),
                BinOp::Mul => ("*", 2),
                BinOp::Div => ("/", 2),
                BinOp::Pow => ("^", 4),
            };
            // `^` is right-associative; the others left-associative.
            let (ltight, rtight) = if *op == BinOp::Pow { (true, false) } else { (false, true) };
            print_child(a, prec, ltight, f)?;
            write!(f, "{sym}")?;
            print_child(b, prec, rtight, f)
        }
        Node::Call(func, a) => {
            write!(f, "{}(", func.name())?;
            print_node(a, f)?;
            write!(f, ")")
        }
    }
}

fn print_child(node: &Node, parent_prec: u8, strict: bool, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let p = precedence(node);
    let need = if strict { p <= parent_prec } else { p < parent_prec };
    if need {
        write!(f, "(")?;
        print_node(node, f)?;
        write!(f, ")")
    } else {
        print_node(node, f)
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        print_node(&self.root, f)
    }
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

/// Value, gradient and Hessian of an expression at a phase point, in the
/// coordinate ordering `(t, q1..qn, p1..pn)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet2 {
    pub jet: Jet,
}

impl Jet2 {
    pub fn value(&self) -> f64 {
        self.jet.value
    }
    pub fn grad(&self) -> &[f64] {
        &self.jet.grad
    }
    pub fn hess_at(&self, i: usize, j: usize) -> f64 {
        self.jet.hess_at(i, j)
    }
    pub fn dt(&self) -> f64 {
        self.jet.grad[0]
    }
    pub fn dq(&self, i: usize) -> f64 {
        self.jet.grad[1 + i]
    }
    pub fn dp(&self, i: usize) -> f64 {
        let n = (self.jet.dim - 1) / 2;
        self.jet.grad[1 + n + i]
    }
}

fn describe(node: &Node) -> String {
    struct D<'a>(&'a Node);
    impl fmt::Display for D<'_> {
        fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            print_node(self.0, f)
        }
    }
    D(node).to_string()
}

fn eval_node(
    node: &Node,
    x: &PhasePoint,
    params: &BTreeMap<String, f64>,
    order: u8,
) -> Result<Jet> {
    let n = x.n();
    let dim = 2 * n + 1;
    match node {
        Node::Number(v) => Ok(Jet::constant(dim, order, *v)),
        Node::Variable(Var::T) => Ok(Jet::coordinate(dim, order, 0, x.t)),
        Node::Variable(Var::Q(k)) => Ok(Jet::coordinate(dim, order, 1 + k, x.q[*k])),
        Node::Variable(Var::P(k)) => Ok(Jet::coordinate(dim, order, 1 + n + k, x.p[*k])),
        Node::Parameter(name) => {
            let v = params
                .get(name)
                .copied()
                .ok_or_else(|| Error::MissingParameter { name: name.clone() })?;
            Ok(Jet::constant(dim, order, v))
        }
        Node::Neg(a) => Ok(eval_node(a, x, params, order)?.neg()),
        Node::Binary(op, a, b) => {
            let ja = eval_node(a, x, params, order)?;
            let jb = eval_node(b, x, params, order)?;
            match op {
                BinOp::Add => Ok(ja.add(&jb)),
                BinOp::Sub => Ok(ja.sub(&jb)),
                BinOp::Mul => Ok(ja.mul(&jb)),
                BinOp::Div => ja.div(&jb, &describe(node)),
                BinOp::Pow => ja.pow(&jb, &describe(node)),
            }
        }
        Node::Call(func, a) => {
            let ja = eval_node(a, x, params, order)?;
            match func {
                Func::Sin => ja.sin(),
                Func::Cos => ja.cos(),
                Func::Tan => ja.tan(),
                Func::Exp => ja.exp(),
                Func::Log => ja.log(&describe(node)),
                Func::Sqrt => ja.sqrt(&describe(node)),
            }
        }
    }
}

/// Evaluate an expression with exact derivatives up to `order` (0, 1 or 2).
pub fn eval_jet(
    expr: &Expression,
    x: &PhasePoint,
    params: &BTreeMap<String, f64>,
    order: u8,
) -> Result<Jet2> {
    if x.n() != expr.n {
        return Err(Error::DimensionMismatch { expected: expr.n, got: x.n() });
    }
    Ok(Jet2 { jet: eval_node(&expr.root, x, params, order)? })
}

/// Central-difference gradient and Hessian; the independent oracle for
/// [`eval_jet`]. Intended for tests.
pub fn fd_jet(
    expr: &Expression,
    x: &PhasePoint,
    params: &BTreeMap<String, f64>,
    h: f64,
) -> Result<Jet2> {
    assert!(h > 0.0, "finite-difference step must be positive");
    let n = x.n();
    let dim = 2 * n + 1;
    let at = |offsets: &[(usize, f64)]| -> Result<f64> {
        let mut y = x.clone();
        for &(idx, d) in offsets {
            *y.coord_mut(idx) += d;
        }
        Ok(eval_jet(expr, &y, params, 0)?.value())
    };
    let value = at(&[])?;
    let mut grad = vec![0.0; dim];
    for i in 0..dim {
        grad[i] = (at(&[(i, h)])? - at(&[(i, -h)])?) / (2.0 * h);
    }
    let mut hess = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in i..dim {
            let v = if i == j {
                (at(&[(i, h)])? - 2.0 * value + at(&[(i, -h)])?) / (h * h)
            } else {
                (at(&[(i, h), (j, h)])? - at(&[(i, h), (j, -h)])? - at(&[(i, -h), (j, h)])?
                    + at(&[(i, -h), (j, -h)])?)
                    / (4.0 * h * h)
            };
            hess[i * dim + j] = v;
            hess[j * dim + i] = v;
        }
    }
    Ok(Jet2 { jet: Jet { dim, order: 2, value, grad, hess } })
}

/// Default finite-difference step used by the oracle.
pub const FD_STEP: f64 = 1e-5;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::PhasePoint;

    fn parse1(s: &str) -> Expression {
        parse_expression(s, 1, &HashSet::new()).unwrap()
    }

    #[test]
    fn kinetic_term_parse_shape() {
        let e = parse1("p1^2/2");
        match &e.root {
            Node::Binary(BinOp::Div, a, _) => {
                assert!(matches!(**a, Node::Binary(BinOp::Pow, ..)));
            }
            other => panic!("unexpected tree {other:?}"),
        }
    }

    #[test]
    fn power_is_right_associative() {
        let e = parse1("p1^2^3");
        match &e.root {
            Node::Binary(BinOp::Pow, base, exp) => {
                assert!(matches!(**base, Node::Variable(Var::P(0))));
                assert!(matches!(**exp, Node::Binary(BinOp::Pow, ..)));
            }
            other => panic!("unexpected tree {other:?}"),
        }
    }

    #[test]
    fn angular_momentum_parses() {
        let e = parse_expression("q1*p2 - q2*p1", 2, &HashSet::new()).unwrap();
        let x = PhasePoint::new(0.0, vec![1.0, 0.0], vec![0.0, 1.0]);
        let j = eval_jet(&e, &x, &BTreeMap::new(), 0).unwrap();
        assert_eq!(j.value(), 1.0);
    }

    #[test]
    fn index_out_of_range() {
        let err = parse_expression("q3", 2, &HashSet::new()).unwrap_err();
        assert!(matches!(err, Error::IndexOutOfRange { .. }));
    }

    #[test]
    fn unknown_ident_err() {
        assert!(matches!(
            parse_expression("mu", 1, &HashSet::new()),
            Err(Error::UnknownIdentifier { .. })
        ));
    }

    #[test]
    fn kepler_hamiltonian_jet_at_reference_point() {
        let params: HashSet<String> = ["mu".to_string()].into_iter().collect();
        let h = parse_expression("(p1^2+p2^2)/2 - mu/sqrt(q1^2+q2^2)", 2, &params).unwrap();
        let x = PhasePoint::new(0.0, vec![1.0, 0.0], vec![0.0, 1.0]);
        let mut pv = BTreeMap::new();
        pv.insert("mu".to_string(), 1.0);
        let j = eval_jet(&h, &x, &pv, 2).unwrap();
        assert!((j.value() + 0.5).abs() < 1e-15);
        assert!((j.dq(0) - 1.0).abs() < 1e-15);
        assert!((j.dp(1) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn linear_time_expression_jet() {
        let e = parse1("t");
        let x = PhasePoint::new(3.0, vec![0.0], vec![0.0]);
        let j = eval_jet(&e, &x, &BTreeMap::new(), 2).unwrap();
        assert_eq!(j.value(), 3.0);
        assert_eq!(j.grad(), &[1.0, 0.0, 0.0]);
        assert!(j.jet.hess.iter().all(|&h| h == 0.0));
    }

    #[test]
    fn bilinear_mixed_second_derivative() {
        let e = parse1("q1*p1");
        let x = PhasePoint::new(0.0, vec![2.0], vec![3.0]);
        let j = eval_jet(&e, &x, &BTreeMap::new(), 2).unwrap();
        assert_eq!(j.value(), 6.0);
        assert_eq!(j.dq(0), 3.0);
        assert_eq!(j.dp(0), 2.0);
        assert_eq!(j.hess_at(1, 2), 1.0);
        assert_eq!(j.hess_at(2, 1), 1.0);
    }

    #[test]
    fn fd_matches_quadratic() {
        let e = parse1("p1^2/2");
        let x = PhasePoint::new(0.0, vec![0.0], vec![3.0]);
        let j = fd_jet(&e, &x, &BTreeMap::new(), FD_STEP).unwrap();
        assert!((j.dp(0) - 3.0).abs() < 1e-9);
    }

    #[test]
    fn fd_sin_time_derivative() {
        let e = parse1("sin(t)");
        let x = PhasePoint::new(0.0, vec![0.5], vec![0.5]);
        let j = fd_jet(&e, &x, &BTreeMap::new(), FD_STEP).unwrap();
        assert!((j.dt() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn print_reparse_roundtrip() {
        let params: HashSet<String> = ["mu".to_string()].into_iter().collect();
        for src in [
            "p1^2/2",
            "p1^2^3",
            "q1*p2 - q2*p1",
            "(p1^2+p2^2)/2 - mu/sqrt(q1^2+q2^2)",
            "-q1^2 - -p1",
            "exp(-t)*sin(q1)/(1+p2^2)",
            "2^-t",
        ] {
            let e = parse_expression(src, 2, &params).unwrap();
            let printed = e.to_string();
            let e2 = parse_expression(&printed, 2, &params).unwrap();
            assert_eq!(e.root, e2.root, "roundtrip failed for `{src}` -> `{printed}`");
        }
    }
}

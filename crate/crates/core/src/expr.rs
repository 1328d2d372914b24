//! Closed-form scalar fields over spacetime coordinates.
//!
//! A [`ScalarField`] is a small expression tree over the chart coordinates
//! `t = x0, x1, x2, x3` built from constants, `+ - * /`, integer and real
//! powers, `exp`, `sin` and `cos`. Derivatives are computed symbolically, so
//! metric data derived from these fields carries no finite-difference noise.
//!
//! Text grammar (whitespace insensitive):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' exponent)?
//! atom   := number | ident | func '(' expr ')' | '(' expr ')'
//! ident  := t | x0 | x1 | x2 | x3 | x | y | z | pi
//! func   := exp | sin | cos
//! ```
//!
//! `x`, `y`, `z` are aliases for `x1`, `x2`, `x3`. An exponent that is an
//! integer literal gives an integer power; any other literal gives a real
//! power, which requires a positive base wherever it is evaluated.

use std::fmt;

use crate::error::ParseError;

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Const(f64),
    Var(usize),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Neg(Box<Node>),
    Powi(Box<Node>, i32),
    Powf(Box<Node>, f64),
    Exp(Box<Node>),
    Sin(Box<Node>),
    Cos(Box<Node>),
}

/// Scalar field given as a closed-form expression of the coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    root: Node,
}

impl ScalarField {
    pub fn constant(value: f64) -> Self {
        ScalarField {
            root: Node::Const(value),
        }
    }

    /// Coordinate `x^index`, `index` in `0..4`.
    pub fn coordinate(index: usize) -> Self {
        assert!(index < 4, "coordinate index out of range");
        ScalarField {
            root: Node::Var(index),
        }
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    pub fn parse(text: &str) -> Result<Self, ParseError> {
        Parser::new(text).parse_all()
    }

    pub fn eval(&self, x: &[f64; 4]) -> f64 {
        eval_node(&self.root, x)
    }

    /// Symbolic partial derivative with respect to `x^var`.
    pub fn derivative(&self, var: usize) -> Self {
        ScalarField {
            root: diff(&self.root, var),
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self.root {
            Node::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_constant() == Some(0.0)
    }

    pub fn depends_on(&self, var: usize) -> bool {
        depends(&self.root, var)
    }

    pub fn add(&self, other: &Self) -> Self {
        ScalarField {
            root: add(self.root.clone(), other.root.clone()),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        ScalarField {
            root: sub(self.root.clone(), other.root.clone()),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        ScalarField {
            root: mul(self.root.clone(), other.root.clone()),
        }
    }

    pub fn div(&self, other: &Self) -> Self {
        ScalarField {
            root: div(self.root.clone(), other.root.clone()),
        }
    }

    pub fn neg(&self) -> Self {
        ScalarField {
            root: neg(self.root.clone()),
        }
    }

    pub fn scale(&self, factor: f64) -> Self {
        ScalarField {
            root: mul(Node::Const(factor), self.root.clone()),
        }
    }

    pub fn exp(&self) -> Self {
        ScalarField {
            root: exp(self.root.clone()),
        }
    }

    pub fn sin(&self) -> Self {
        ScalarField {
            root: sin(self.root.clone()),
        }
    }

    pub fn cos(&self) -> Self {
        ScalarField {
            root: cos(self.root.clone()),
        }
    }

    pub fn powi(&self, n: i32) -> Self {
        ScalarField {
            root: powi(self.root.clone(), n),
        }
    }

    pub fn powf(&self, p: f64) -> Self {
        ScalarField {
            root: powf(self.root.clone(), p),
        }
    }
}

impl fmt::Display for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(&self.root, f)
    }
}

impl std::str::FromStr for ScalarField {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

fn eval_node(n: &Node, x: &[f64; 4]) -> f64 {
    match n {
        Node::Const(c) => *c,
        Node::Var(i) => x[*i],
        Node::Add(a, b) => eval_node(a, x) + eval_node(b, x),
        Node::Sub(a, b) => eval_node(a, x) - eval_node(b, x),
        Node::Mul(a, b) => eval_node(a, x) * eval_node(b, x),
        Node::Div(a, b) => eval_node(a, x) / eval_node(b, x),
        Node::Neg(a) => -eval_node(a, x),
        Node::Powi(a, k) => eval_node(a, x).powi(*k),
        Node::Powf(a, p) => eval_node(a, x).powf(*p),
        Node::Exp(a) => eval_node(a, x).exp(),
        Node::Sin(a) => eval_node(a, x).sin(),
        Node::Cos(a) => eval_node(a, x).cos(),
    }
}

fn depends(n: &Node, var: usize) -> bool {
    match n {
        Node::Const(_) => false,
        Node::Var(i) => *i == var,
        Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
            depends(a, var) || depends(b, var)
        }
        Node::Neg(a)
        | Node::Powi(a, _)
        | Node::Powf(a, _)
        | Node::Exp(a)
        | Node::Sin(a)
        | Node::Cos(a) => depends(a, var),
    }
}

// Smart constructors fold constants and drop neutral elements so that
// repeated differentiation stays compact.

fn is_const(n: &Node, v: f64) -> bool {
    matches!(n, Node::Const(c) if *c == v)
}

fn add(a: Node, b: Node) -> Node {
    match (&a, &b) {
        (Node::Const(x), Node::Const(y)) => Node::Const(x + y),
        _ if is_const(&a, 0.0) => b,
        _ if is_const(&b, 0.0) => a,
        (_, Node::Neg(inner)) => sub(a, (**inner).clone()),
        _ => Node::Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Node, b: Node) -> Node {
    match (&a, &b) {
        (Node::Const(x), Node::Const(y)) => Node::Const(x - y),
        _ if is_const(&b, 0.0) => a,
        _ if is_const(&a, 0.0) => neg(b),
        _ => Node::Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Node, b: Node) -> Node {
    match (&a, &b) {
        (Node::Const(x), Node::Const(y)) => Node::Const(x * y),
        _ if is_const(&a, 0.0) || is_const(&b, 0.0) => Node::Const(0.0),
        _ if is_const(&a, 1.0) => b,
        _ if is_const(&b, 1.0) => a,
        _ if is_const(&a, -1.0) => neg(b),
        _ if is_const(&b, -1.0) => neg(a),
        // keep constants on the left
        (_, Node::Const(_)) => Node::Mul(Box::new(b), Box::new(a)),
        _ => Node::Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Node, b: Node) -> Node {
    match (&a, &b) {
        (Node::Const(x), Node::Const(y)) => Node::Const(x / y),
        _ if is_const(&a, 0.0) => Node::Const(0.0),
        _ if is_const(&b, 1.0) => a,
        _ => Node::Div(Box::new(a), Box::new(b)),
    }
}

fn neg(a: Node) -> Node {
    match a {
        Node::Const(c) => Node::Const(-c),
        Node::Neg(inner) => *inner,
        other => Node::Neg(Box::new(other)),
    }
}

fn powi(a: Node, k: i32) -> Node {
    match (&a, k) {
        (_, 0) => Node::Const(1.0),
        (_, 1) => a,
        (Node::Const(c), _) => Node::Const(c.powi(k)),
        _ => Node::Powi(Box::new(a), k),
    }
}

fn powf(a: Node, p: f64) -> Node {
    if p == 0.0 {
        return Node::Const(1.0);
    }
    if p == 1.0 {
        return a;
    }
    if p.fract() == 0.0 && p.abs() <= i32::MAX as f64 {
        return powi(a, p as i32);
    }
    match a {
        Node::Const(c) => Node::Const(c.powf(p)),
        other => Node::Powf(Box::new(other), p),
    }
}

fn exp(a: Node) -> Node {
    match a {
        Node::Const(c) => Node::Const(c.exp()),
        other => Node::Exp(Box::new(other)),
    }
}

fn sin(a: Node) -> Node {
    match a {
        Node::Const(c) => Node::Const(c.sin()),
        other => Node::Sin(Box::new(other)),
    }
}

fn cos(a: Node) -> Node {
    match a {
        Node::Const(c) => Node::Const(c.cos()),
        other => Node::Cos(Box::new(other)),
    }
}

fn diff(n: &Node, var: usize) -> Node {
    if !depends(n, var) {
        return Node::Const(0.0);
    }
    match n {
        Node::Const(_) => Node::Const(0.0),
        Node::Var(i) => Node::Const(if *i == var { 1.0 } else { 0.0 }),
        Node::Add(a, b) => add(diff(a, var), diff(b, var)),
        Node::Sub(a, b) => sub(diff(a, var), diff(b, var)),
        Node::Mul(a, b) => add(
            mul(diff(a, var), (**b).clone()),
            mul((**a).clone(), diff(b, var)),
        ),
        Node::Div(a, b) => {
            // (a' b - a b') / b^2
            let num = sub(
                mul(diff(a, var), (**b).clone()),
                mul((**a).clone(), diff(b, var)),
            );
            div(num, powi((**b).clone(), 2))
        }
        Node::Neg(a) => neg(diff(a, var)),
        Node::Powi(a, k) => mul(
            mul(Node::Const(*k as f64), powi((**a).clone(), k - 1)),
            diff(a, var),
        ),
        Node::Powf(a, p) => mul(
            mul(Node::Const(*p), powf((**a).clone(), p - 1.0)),
            diff(a, var),
        ),
        Node::Exp(a) => mul(n.clone(), diff(a, var)),
        Node::Sin(a) => mul(cos((**a).clone()), diff(a, var)),
        Node::Cos(a) => neg(mul(sin((**a).clone()), diff(a, var))),
    }
}

fn write_const(c: f64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if c < 0.0 || (c == 0.0 && c.is_sign_negative()) {
        write!(f, "(-{:?})", -c)
    } else {
        write!(f, "{:?}", c)
    }
}

fn write_node(n: &Node, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match n {
        Node::Const(c) => write_const(*c, f),
        Node::Var(0) => write!(f, "t"),
        Node::Var(i) => write!(f, "x{i}"),
        Node::Add(a, b) => binary(a, "+", b, f),
        Node::Sub(a, b) => binary(a, "-", b, f),
        Node::Mul(a, b) => binary(a, "*", b, f),
        Node::Div(a, b) => binary(a, "/", b, f),
        Node::Neg(a) => {
            write!(f, "(-")?;
            write_node(a, f)?;
            write!(f, ")")
        }
        Node::Powi(a, k) => {
            write!(f, "(")?;
            write_node(a, f)?;
            if *k < 0 {
                write!(f, ")^({k})")
            } else {
                write!(f, ")^{k}")
            }
        }
        Node::Powf(a, p) => {
            write!(f, "(")?;
            write_node(a, f)?;
            write!(f, ")^({p:?})")
        }
        Node::Exp(a) => func("exp", a, f),
        Node::Sin(a) => func("sin", a, f),
        Node::Cos(a) => func("cos", a, f),
    }
}

fn binary(a: &Node, op: &str, b: &Node, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    write!(f, "(")?;
    write_node(a, f)?;
    write!(f, " {op} ")?;
    write_node(b, f)?;
    write!(f, ")")
}

fn func(name: &str, a: &Node, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    write!(f, "{name}(")?;
    write_node(a, f)?;
    write!(f, ")")
}

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser {
            src,
            bytes: src.as_bytes(),
            pos: 0,
        }
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError {
            line: 1,
            column: self.pos + 1,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn parse_all(mut self) -> Result<ScalarField, ParseError> {
        if self.peek().is_none() {
            return Err(self.error("empty expression"));
        }
        let root = self.expr()?;
        if self.peek().is_some() {
            return Err(self.error(format!(
                "unexpected trailing input '{}'",
                &self.src[self.pos..]
            )));
        }
        Ok(ScalarField { root })
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = add(lhs, self.term()?);
            } else if self.eat(b'-') {
                lhs = sub(lhs, self.term()?);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                lhs = mul(lhs, self.unary()?);
            } else if self.eat(b'/') {
                lhs = div(lhs, self.unary()?);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        if self.eat(b'-') {
            Ok(neg(self.unary()?))
        } else if self.eat(b'+') {
            self.unary()
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.atom()?;
        if !self.eat(b'^') {
            return Ok(base);
        }
        let p = self.exponent()?;
        if p.fract() == 0.0 && p.abs() <= 64.0 {
            Ok(powi(base, p as i32))
        } else {
            Ok(powf(base, p))
        }
    }

    fn exponent(&mut self) -> Result<f64, ParseError> {
        // literal, optionally signed and/or parenthesized
        if self.eat(b'(') {
            let negative = self.eat(b'-');
            let v = self.number()?;
            if !self.eat(b')') {
                return Err(self.error("expected ')' after exponent"));
            }
            return Ok(if negative { -v } else { v });
        }
        let negative = self.eat(b'-');
        let v = self.number()?;
        Ok(if negative { -v } else { v })
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        self.skip_ws();
        let start = self.pos;
        let b = self.bytes;
        while self.pos < b.len() && (b[self.pos].is_ascii_digit() || b[self.pos] == b'.') {
            self.pos += 1;
        }
        if self.pos < b.len() && (b[self.pos] == b'e' || b[self.pos] == b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < b.len() && (b[self.pos] == b'+' || b[self.pos] == b'-') {
                self.pos += 1;
            }
            let digits = self.pos;
            while self.pos < b.len() && b[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if digits == self.pos {
                self.pos = save;
            }
        }
        let text = &self.src[start..self.pos];
        text.parse::<f64>().map_err(|_| {
            self.pos = start;
            self.error(format!("invalid number '{text}'"))
        })
    }

    fn atom(&mut self) -> Result<Node, ParseError> {
        match self.peek() {
            None => Err(self.error("unexpected end of expression")),
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error("expected ')'"));
                }
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => Ok(Node::Const(self.number()?)),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_alphanumeric() {
                    self.pos += 1;
                }
                let ident = &self.src[start..self.pos];
                match ident {
                    "t" | "x0" => Ok(Node::Var(0)),
                    "x1" | "x" => Ok(Node::Var(1)),
                    "x2" | "y" => Ok(Node::Var(2)),
                    "x3" | "z" => Ok(Node::Var(3)),
                    "pi" => Ok(Node::Const(std::f64::consts::PI)),
                    "exp" | "sin" | "cos" => {
                        if !self.eat(b'(') {
                            return Err(self.error(format!("expected '(' after {ident}")));
                        }
                        let arg = self.expr()?;
                        if !self.eat(b')') {
                            return Err(self.error("expected ')'"));
                        }
                        Ok(match ident {
                            "exp" => exp(arg),
                            "sin" => sin(arg),
                            _ => cos(arg),
                        })
                    }
                    _ => {
                        self.pos = start;
                        Err(self.error(format!("unknown identifier '{ident}'")))
                    }
                }
            }
            Some(c) => Err(self.error(format!("unexpected character '{}'", c as char))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(s: &str) -> ScalarField {
        ScalarField::parse(s).unwrap()
    }

    #[test]
    fn parses_and_evaluates() {
        let x = [0.5, 1.0, 2.0, -1.0];
        assert_eq!(p("1 + 2*3").eval(&x), 7.0);
        assert_eq!(p("t*x1 - y/z").eval(&x), 0.5 + 2.0);
        assert!((p("exp(0.1*x)").eval(&x) - 0.1f64.exp()).abs() < 1e-15);
        assert_eq!(p("-x^2").eval(&x), -1.0);
        assert_eq!(p("(x + y)^3").eval(&x), 27.0);
        assert_eq!(p("2^(-1)").eval(&x), 0.5);
        assert!((p("(1 + x)^0.5").eval(&x) - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(p("1e-2*x").eval(&x), 1e-2);
    }

    #[test]
    fn reports_error_column() {
        let err = ScalarField::parse("1 + foo(x)").unwrap_err();
        assert_eq!(err.column, 5);
        let err = ScalarField::parse("sin(x").unwrap_err();
        assert!(err.message.contains("')'"));
        assert!(ScalarField::parse("").is_err());
        assert!(ScalarField::parse("1 2").is_err());
    }

    #[test]
    fn derivatives_match_hand_computed() {
        let f = p("x^3*exp(2*t) + sin(y)/x");
        let x = [0.3, 1.5, 0.7, 0.0];
        let dt = f.derivative(0).eval(&x);
        let dx = f.derivative(1).eval(&x);
        let dy = f.derivative(2).eval(&x);
        let (t, x1, y) = (0.3f64, 1.5f64, 0.7f64);
        assert!((dt - 2.0 * x1.powi(3) * (2.0 * t).exp()).abs() < 1e-12);
        assert!((dx - (3.0 * x1 * x1 * (2.0 * t).exp() - y.sin() / (x1 * x1))).abs() < 1e-12);
        assert!((dy - y.cos() / x1).abs() < 1e-12);
        assert!(f.derivative(3).is_zero());
    }

    #[test]
    fn constant_folding_keeps_trees_small() {
        assert!(p("3*x").derivative(1).as_constant() == Some(3.0));
        assert!(p("sin(2)").as_constant().is_some());
    }

    fn arb_expr() -> impl Strategy<Value = String> {
        let leaf = prop_oneof![
            (-3.0f64..3.0).prop_map(|c| format!("{c:?}")),
            Just("t".to_string()),
            Just("x1".to_string()),
            Just("x2".to_string()),
            Just("x3".to_string()),
        ];
        leaf.prop_recursive(4, 24, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} + {b})")),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} - {b})")),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} * {b})")),
                inner.clone().prop_map(|a| format!("sin({a})")),
                inner.clone().prop_map(|a| format!("cos({a})")),
                inner.clone().prop_map(|a| format!("({a})^2")),
                inner.prop_map(|a| format!("exp(0.1*{a})")),
            ]
        })
    }

    proptest! {
        #[test]
        fn display_round_trips(src in arb_expr(), x in prop::array::uniform4(-1.0f64..1.0)) {
            let f = p(&src);
            let g = p(&f.to_string());
            let (a, b) = (f.eval(&x), g.eval(&x));
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }

        #[test]
        fn derivative_matches_central_difference(src in arb_expr(), x in prop::array::uniform4(-1.0f64..1.0), var in 0usize..4) {
            let f = p(&src);
            let h = 1e-5;
            let mut xp = x; xp[var] += h;
            let mut xm = x; xm[var] -= h;
            let fd = (f.eval(&xp) - f.eval(&xm)) / (2.0 * h);
            let exact = f.derivative(var).eval(&x);
            prop_assert!((fd - exact).abs() <= 1e-5 * (1.0 + exact.abs()));
        }
    }
}

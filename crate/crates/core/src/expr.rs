//! Small arithmetic expression language used for coefficients, data and the
//! Monge–Ampère right-hand side.
//!
//! Grammar:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?
//! atom   := number | 'pi' | var | func '(' expr ')' | '(' expr ')'
//! var    := x | y | u | p1 | p2
//! func   := sin | cos | exp
//! ```
//!
//! `^` binds tighter than unary minus, so `-x^2` is `-(x^2)`. Expressions can
//! be differentiated symbolically, which is how analytic derivatives of
//! manufactured solutions and coefficient jets are obtained.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Var {
    X,
    Y,
    U,
    P1,
    P2,
}

impl Var {
    pub const ALL: [Var; 5] = [Var::X, Var::Y, Var::U, Var::P1, Var::P2];

    fn slot(self) -> usize {
        match self {
            Var::X => 0,
            Var::Y => 1,
            Var::U => 2,
            Var::P1 => 3,
            Var::P2 => 4,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::Y => "y",
            Var::U => "u",
            Var::P1 => "p1",
            Var::P2 => "p2",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    /// Only produced by differentiating a power with a variable exponent.
    Ln,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Ln => "ln",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Node {
    Const(f64),
    Var(Var),
    Neg(Expr),
    Add(Expr, Expr),
    Sub(Expr, Expr),
    Mul(Expr, Expr),
    Div(Expr, Expr),
    Pow(Expr, Expr),
    Call(Func, Expr),
}

/// Immutable expression tree; cheap to clone.
#[derive(Clone, Debug, PartialEq)]
pub struct Expr(Arc<Node>);

/// Values for the five variables, in the order x, y, u, p1, p2.
pub type Point = [f64; 5];

impl Expr {
    fn node(n: Node) -> Self {
        Expr(Arc::new(n))
    }

    pub fn constant(c: f64) -> Self {
        Self::node(Node::Const(c))
    }

    pub fn var(v: Var) -> Self {
        Self::node(Node::Var(v))
    }

    pub fn x() -> Self {
        Self::var(Var::X)
    }

    pub fn y() -> Self {
        Self::var(Var::Y)
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    pub fn parse(src: &str) -> Result<Self> {
        let tokens = lex(src)?;
        let mut p = Parser { tokens, pos: 0 };
        let e = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(Error::Expr(format!("unexpected trailing input in `{src}`")));
        }
        Ok(e)
    }

    pub fn as_const(&self) -> Option<f64> {
        match *self.0 {
            Node::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    pub fn depends_on(&self, v: Var) -> bool {
        match &*self.0 {
            Node::Const(_) => false,
            Node::Var(w) => *w == v,
            Node::Neg(a) | Node::Call(_, a) => a.depends_on(v),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Pow(a, b) => {
                a.depends_on(v) || b.depends_on(v)
            }
        }
    }

    pub fn eval(&self, p: &Point) -> f64 {
        match &*self.0 {
            Node::Const(c) => *c,
            Node::Var(v) => p[v.slot()],
            Node::Neg(a) => -a.eval(p),
            Node::Add(a, b) => a.eval(p) + b.eval(p),
            Node::Sub(a, b) => a.eval(p) - b.eval(p),
            Node::Mul(a, b) => a.eval(p) * b.eval(p),
            Node::Div(a, b) => a.eval(p) / b.eval(p),
            Node::Pow(a, b) => {
                let base = a.eval(p);
                match b.as_const() {
                    Some(e) if e.fract() == 0.0 && e.abs() < 64.0 => base.powi(e as i32),
                    _ => base.powf(b.eval(p)),
                }
            }
            Node::Call(f, a) => {
                let v = a.eval(p);
                match f {
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Exp => v.exp(),
                    Func::Ln => v.ln(),
                }
            }
        }
    }

    /// Evaluate with u = p1 = p2 = 0.
    pub fn eval_xy(&self, x: f64, y: f64) -> f64 {
        self.eval(&[x, y, 0.0, 0.0, 0.0])
    }

    pub fn derivative(&self, v: Var) -> Expr {
        match &*self.0 {
            Node::Const(_) => Expr::zero(),
            Node::Var(w) => Expr::constant(if *w == v { 1.0 } else { 0.0 }),
            Node::Neg(a) => -a.derivative(v),
            Node::Add(a, b) => a.derivative(v) + b.derivative(v),
            Node::Sub(a, b) => a.derivative(v) - b.derivative(v),
            Node::Mul(a, b) => a.derivative(v) * b.clone() + a.clone() * b.derivative(v),
            Node::Div(a, b) => {
                (a.derivative(v) * b.clone() - a.clone() * b.derivative(v)) / (b.clone() * b.clone())
            }
            Node::Pow(a, b) => {
                if !b.depends_on(v) {
                    let n = b.clone();
                    n.clone() * a.clone().pow(n - Expr::one()) * a.derivative(v)
                } else {
                    // d(a^b) = a^b (b' ln a + b a'/a)
                    self.clone()
                        * (b.derivative(v) * Expr::call(Func::Ln, a.clone())
                            + b.clone() * a.derivative(v) / a.clone())
                }
            }
            Node::Call(f, a) => {
                let inner = a.derivative(v);
                let outer = match f {
                    Func::Sin => Expr::call(Func::Cos, a.clone()),
                    Func::Cos => -Expr::call(Func::Sin, a.clone()),
                    Func::Exp => self.clone(),
                    Func::Ln => Expr::one() / a.clone(),
                };
                outer * inner
            }
        }
    }

    /// Mixed derivative d^i/dx^i d^j/dy^j.
    pub fn dxy(&self, i: usize, j: usize) -> Expr {
        let mut e = self.clone();
        for _ in 0..i {
            e = e.derivative(Var::X);
        }
        for _ in 0..j {
            e = e.derivative(Var::Y);
        }
        e
    }

    pub fn call(f: Func, a: Expr) -> Expr {
        if let Some(c) = a.as_const() {
            let v = match f {
                Func::Sin => c.sin(),
                Func::Cos => c.cos(),
                Func::Exp => c.exp(),
                Func::Ln => c.ln(),
            };
            return Expr::constant(v);
        }
        Self::node(Node::Call(f, a))
    }

    pub fn sin(self) -> Expr {
        Expr::call(Func::Sin, self)
    }

    pub fn cos(self) -> Expr {
        Expr::call(Func::Cos, self)
    }

    pub fn exp(self) -> Expr {
        Expr::call(Func::Exp, self)
    }

    pub fn pow(self, e: Expr) -> Expr {
        match (self.as_const(), e.as_const()) {
            (Some(a), Some(b)) => Expr::constant(a.powf(b)),
            (_, Some(b)) if b == 0.0 => Expr::one(),
            (_, Some(b)) if b == 1.0 => self,
            _ => Self::node(Node::Pow(self, e)),
        }
    }

    pub fn powi(self, n: i32) -> Expr {
        self.pow(Expr::constant(n as f64))
    }

    /// Substitute expressions for x and y (other variables untouched).
    pub fn compose_xy(&self, x: &Expr, y: &Expr) -> Expr {
        match &*self.0 {
            Node::Const(_) => self.clone(),
            Node::Var(Var::X) => x.clone(),
            Node::Var(Var::Y) => y.clone(),
            Node::Var(_) => self.clone(),
            Node::Neg(a) => -a.compose_xy(x, y),
            Node::Add(a, b) => a.compose_xy(x, y) + b.compose_xy(x, y),
            Node::Sub(a, b) => a.compose_xy(x, y) - b.compose_xy(x, y),
            Node::Mul(a, b) => a.compose_xy(x, y) * b.compose_xy(x, y),
            Node::Div(a, b) => a.compose_xy(x, y) / b.compose_xy(x, y),
            Node::Pow(a, b) => a.compose_xy(x, y).pow(b.compose_xy(x, y)),
            Node::Call(f, a) => Expr::call(*f, a.compose_xy(x, y)),
        }
    }
}

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        if let Some(c) = self.as_const() {
            return Expr::constant(-c);
        }
        if let Node::Neg(a) = &*self.0 {
            return a.clone();
        }
        Expr::node(Node::Neg(self))
    }
}

impl std::ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        match (self.as_const(), rhs.as_const()) {
            (Some(a), Some(b)) => Expr::constant(a + b),
            (Some(a), _) if a == 0.0 => rhs,
            (_, Some(b)) if b == 0.0 => self,
            _ => Expr::node(Node::Add(self, rhs)),
        }
    }
}

impl std::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        match (self.as_const(), rhs.as_const()) {
            (Some(a), Some(b)) => Expr::constant(a - b),
            (Some(a), _) if a == 0.0 => -rhs,
            (_, Some(b)) if b == 0.0 => self,
            _ => Expr::node(Node::Sub(self, rhs)),
        }
    }
}

impl std::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        match (self.as_const(), rhs.as_const()) {
            (Some(a), Some(b)) => Expr::constant(a * b),
            (Some(a), _) | (_, Some(a)) if a == 0.0 => Expr::zero(),
            (Some(a), _) if a == 1.0 => rhs,
            (_, Some(b)) if b == 1.0 => self,
            (Some(a), _) if a == -1.0 => -rhs,
            (_, Some(b)) if b == -1.0 => -self,
            _ => Expr::node(Node::Mul(self, rhs)),
        }
    }
}

impl std::ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        match (self.as_const(), rhs.as_const()) {
            (Some(a), Some(b)) => Expr::constant(a / b),
            (Some(a), _) if a == 0.0 => Expr::zero(),
            (_, Some(b)) if b == 1.0 => self,
            _ => Expr::node(Node::Div(self, rhs)),
        }
    }
}

impl From<f64> for Expr {
    fn from(c: f64) -> Self {
        Expr::constant(c)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &*self.0 {
            Node::Const(c) => {
                if *c < 0.0 {
                    write!(f, "({c})")
                } else {
                    write!(f, "{c}")
                }
            }
            Node::Var(v) => write!(f, "{}", v.name()),
            Node::Neg(a) => write!(f, "(-{a})"),
            Node::Add(a, b) => write!(f, "({a} + {b})"),
            Node::Sub(a, b) => write!(f, "({a} - {b})"),
            Node::Mul(a, b) => write!(f, "{a}*{b}"),
            Node::Div(a, b) => write!(f, "{a}/({b})"),
            Node::Pow(a, b) => write!(f, "({a})^({b})"),
            Node::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

fn lex(src: &str) -> Result<Vec<Tok>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut k = i + 1;
                if k < chars.len() && (chars[k] == '+' || chars[k] == '-') {
                    k += 1;
                }
                if k < chars.len() && chars[k].is_ascii_digit() {
                    i = k;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v = text
                .parse::<f64>()
                .map_err(|_| Error::Expr(format!("bad number `{text}`")))?;
            out.push(Tok::Num(v));
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^()".contains(c) {
            out.push(Tok::Op(c));
            i += 1;
        } else {
            return Err(Error::Expr(format!("unexpected character `{c}`")));
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos)
    }

    fn eat_op(&mut self, op: char) -> bool {
        if self.peek() == Some(&Tok::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_op(&mut self, op: char) -> Result<()> {
        if self.eat_op(op) {
            Ok(())
        } else {
            Err(Error::Expr(format!("expected `{op}`")))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat_op('+') {
                lhs = lhs + self.term()?;
            } else if self.eat_op('-') {
                lhs = lhs - self.term()?;
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat_op('*') {
                lhs = lhs * self.unary()?;
            } else if self.eat_op('/') {
                lhs = lhs / self.unary()?;
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat_op('-') {
            Ok(-self.unary()?)
        } else if self.eat_op('+') {
            self.unary()
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.eat_op('^') {
            let e = self.unary()?;
            Ok(base.pow(e))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Expr> {
        let tok = self
            .peek()
            .cloned()
            .ok_or_else(|| Error::Expr("unexpected end of expression".into()))?;
        self.pos += 1;
        match tok {
            Tok::Num(v) => Ok(Expr::constant(v)),
            Tok::Op('(') => {
                let e = self.expr()?;
                self.expect_op(')')?;
                Ok(e)
            }
            Tok::Ident(name) => match name.as_str() {
                "x" => Ok(Expr::var(Var::X)),
                "y" => Ok(Expr::var(Var::Y)),
                "u" => Ok(Expr::var(Var::U)),
                "p1" => Ok(Expr::var(Var::P1)),
                "p2" => Ok(Expr::var(Var::P2)),
                "pi" => Ok(Expr::constant(std::f64::consts::PI)),
                "sin" | "cos" | "exp" => {
                    let f = match name.as_str() {
                        "sin" => Func::Sin,
                        "cos" => Func::Cos,
                        _ => Func::Exp,
                    };
                    self.expect_op('(')?;
                    let a = self.expr()?;
                    self.expect_op(')')?;
                    Ok(Expr::call(f, a))
                }
                other => Err(Error::Expr(format!("unknown identifier `{other}`"))),
            },
            Tok::Op(c) => Err(Error::Expr(format!("unexpected `{c}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(e: &Expr, x: f64, y: f64) -> f64 {
        e.eval_xy(x, y)
    }

    #[test]
    fn precedence() {
        let e = Expr::parse("-x^2 + 2*y - 3/4").unwrap();
        assert_eq!(at(&e, 3.0, 1.0), -9.0 + 2.0 - 0.75);
        let e = Expr::parse("2^3^2").unwrap();
        assert_eq!(at(&e, 0.0, 0.0), 512.0);
    }

    #[test]
    fn functions_and_vars() {
        let e = Expr::parse("sin(x)*exp(y) + cos(u) + p1*p2").unwrap();
        let v = e.eval(&[0.3, 0.2, 0.0, 2.0, 3.0]);
        assert!((v - (0.3f64.sin() * 0.2f64.exp() + 1.0 + 6.0)).abs() < 1e-15);
    }

    #[test]
    fn derivative_of_product() {
        let e = Expr::parse("(x^2 - y^2)*exp(x*y)").unwrap();
        let d = e.derivative(Var::X);
        let (x, y) = (0.4f64, -0.3f64);
        let exact = 2.0 * x * (x * y).exp() + (x * x - y * y) * y * (x * y).exp();
        assert!((at(&d, x, y) - exact).abs() < 1e-14);
    }

    #[test]
    fn variable_exponent() {
        let e = Expr::parse("x^y").unwrap();
        let d = e.derivative(Var::Y);
        let (x, y) = (1.7, 0.6);
        assert!((at(&d, x, y) - x.powf(y) * x.ln()).abs() < 1e-14);
    }

    #[test]
    fn rejects_garbage() {
        assert!(Expr::parse("x +").is_err());
        assert!(Expr::parse("foo(x)").is_err());
        assert!(Expr::parse("x $ y").is_err());
        assert!(Expr::parse("(x").is_err());
    }

    #[test]
    fn scientific_numbers() {
        let e = Expr::parse("1e-3*x + 2.5E2").unwrap();
        assert_eq!(at(&e, 1000.0, 0.0), 251.0);
    }
}

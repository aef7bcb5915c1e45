//! Closed-form expressions over `x1..x3`, used for endpoint data and
//! semi-flat potentials.
//!
//! Grammar: `+ - * / ^`, parentheses, `sin cos exp log atan`, numeric
//! literals, `pi`, `e`, and the variables `x1 x2 x3` (aliases `x y z`).
//! `^` is right associative and binds tighter than unary minus.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("unexpected character {found:?} at offset {pos}")]
    UnexpectedChar { pos: usize, found: char },
    #[error("unexpected end of expression")]
    UnexpectedEnd,
    #[error("unexpected token {found:?} at offset {pos}")]
    UnexpectedToken { pos: usize, found: String },
    #[error("unknown identifier {name:?} at offset {pos}")]
    UnknownIdent { pos: usize, name: String },
    #[error("invalid number {text:?} at offset {pos}")]
    BadNumber { pos: usize, text: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Atan,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Atan => "atan",
        }
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Exp => v.exp(),
            Func::Log => v.ln(),
            Func::Atan => v.atan(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    /// Zero-based variable index (`x1` is 0).
    Var(usize),
    Neg(Arc<Expr>),
    Add(Arc<Expr>, Arc<Expr>),
    Sub(Arc<Expr>, Arc<Expr>),
    Mul(Arc<Expr>, Arc<Expr>),
    Div(Arc<Expr>, Arc<Expr>),
    Pow(Arc<Expr>, Arc<Expr>),
    Call(Func, Arc<Expr>),
}

fn as_const(e: &Expr) -> Option<f64> {
    match e {
        Expr::Const(c) => Some(*c),
        _ => None,
    }
}

// Smart constructors with light constant folding.
fn add(a: Expr, b: Expr) -> Expr {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => Expr::Const(x + y),
        (Some(x), _) if x == 0.0 => b,
        (_, Some(y)) if y == 0.0 => a,
        _ => Expr::Add(Arc::new(a), Arc::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => Expr::Const(x - y),
        (_, Some(y)) if y == 0.0 => a,
        (Some(x), _) if x == 0.0 => neg(b),
        _ => Expr::Sub(Arc::new(a), Arc::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => Expr::Const(x * y),
        (Some(x), _) | (_, Some(x)) if x == 0.0 => Expr::Const(0.0),
        (Some(x), _) if x == 1.0 => b,
        (_, Some(y)) if y == 1.0 => a,
        _ => Expr::Mul(Arc::new(a), Arc::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => Expr::Const(x / y),
        (Some(x), _) if x == 0.0 => Expr::Const(0.0),
        (_, Some(y)) if y == 1.0 => a,
        _ => Expr::Div(Arc::new(a), Arc::new(b)),
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(x) => Expr::Const(-x),
        Expr::Neg(inner) => (*inner).clone(),
        other => Expr::Neg(Arc::new(other)),
    }
}

fn pow(a: Expr, b: Expr) -> Expr {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => Expr::Const(eval_pow(x, y)),
        (_, Some(y)) if y == 0.0 => Expr::Const(1.0),
        (_, Some(y)) if y == 1.0 => a,
        _ => Expr::Pow(Arc::new(a), Arc::new(b)),
    }
}

fn call(f: Func, a: Expr) -> Expr {
    match as_const(&a) {
        Some(x) => Expr::Const(f.apply(x)),
        None => Expr::Call(f, Arc::new(a)),
    }
}

fn eval_pow(base: f64, exp: f64) -> f64 {
    if exp.fract() == 0.0 && exp.abs() <= i32::MAX as f64 {
        base.powi(exp as i32)
    } else {
        base.powf(exp)
    }
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr, ExprError> {
        let tokens = tokenize(src)?;
        let mut p = Parser { tokens, pos: 0 };
        let e = p.expr()?;
        if let Some(t) = p.tokens.get(p.pos) {
            return Err(ExprError::UnexpectedToken {
                pos: t.pos,
                found: t.kind.to_string(),
            });
        }
        Ok(e)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Var(i) => x.get(*i).copied().unwrap_or(0.0),
            Expr::Neg(a) => -a.eval(x),
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Sub(a, b) => a.eval(x) - b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Div(a, b) => a.eval(x) / b.eval(x),
            Expr::Pow(a, b) => eval_pow(a.eval(x), b.eval(x)),
            Expr::Call(f, a) => f.apply(a.eval(x)),
        }
    }

    /// Number of variables referenced, i.e. one more than the largest index.
    pub fn arity(&self) -> usize {
        match self {
            Expr::Const(_) => 0,
            Expr::Var(i) => i + 1,
            Expr::Neg(a) | Expr::Call(_, a) => a.arity(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.arity().max(b.arity())
            }
        }
    }

    /// Symbolic partial derivative with respect to variable `k`.
    pub fn derivative(&self, k: usize) -> Expr {
        match self {
            Expr::Const(_) => Expr::Const(0.0),
            Expr::Var(i) => Expr::Const(if *i == k { 1.0 } else { 0.0 }),
            Expr::Neg(a) => neg(a.derivative(k)),
            Expr::Add(a, b) => add(a.derivative(k), b.derivative(k)),
            Expr::Sub(a, b) => sub(a.derivative(k), b.derivative(k)),
            Expr::Mul(a, b) => add(
                mul(a.derivative(k), (**b).clone()),
                mul((**a).clone(), b.derivative(k)),
            ),
            Expr::Div(a, b) => div(
                sub(
                    mul(a.derivative(k), (**b).clone()),
                    mul((**a).clone(), b.derivative(k)),
                ),
                pow((**b).clone(), Expr::Const(2.0)),
            ),
            Expr::Pow(a, b) => {
                if let Some(c) = as_const(b) {
                    mul(
                        mul(Expr::Const(c), pow((**a).clone(), Expr::Const(c - 1.0))),
                        a.derivative(k),
                    )
                } else {
                    // d(a^b) = a^b (b' ln a + b a'/a)
                    mul(
                        self.clone(),
                        add(
                            mul(b.derivative(k), call(Func::Log, (**a).clone())),
                            div(mul((**b).clone(), a.derivative(k)), (**a).clone()),
                        ),
                    )
                }
            }
            Expr::Call(f, a) => {
                let inner = a.derivative(k);
                let outer = match f {
                    Func::Sin => call(Func::Cos, (**a).clone()),
                    Func::Cos => neg(call(Func::Sin, (**a).clone())),
                    Func::Exp => self.clone(),
                    Func::Log => div(Expr::Const(1.0), (**a).clone()),
                    Func::Atan => div(
                        Expr::Const(1.0),
                        add(Expr::Const(1.0), pow((**a).clone(), Expr::Const(2.0))),
                    ),
                };
                mul(outer, inner)
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c:?}"),
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, b) => write!(f, "({a} ^ {b})"),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Num(f64),
    Ident(String),
    Op(char),
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Num(v) => write!(f, "{v}"),
            TokenKind::Ident(s) => write!(f, "{s}"),
            TokenKind::Op(c) => write!(f, "{c}"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    pos: usize,
}

fn tokenize(src: &str) -> Result<Vec<Token>, ExprError> {
    let bytes: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let ch = bytes[i];
        if ch.is_whitespace() {
            i += 1;
        } else if ch.is_ascii_digit() || ch == '.' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == '.') {
                i += 1;
            }
            // exponent part, e.g. 1e-3
            if i < bytes.len() && (bytes[i] == 'e' || bytes[i] == 'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == '+' || bytes[j] == '-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text: String = bytes[start..i].iter().collect();
            let v = text.parse::<f64>().map_err(|_| ExprError::BadNumber {
                pos: start,
                text: text.clone(),
            })?;
            out.push(Token {
                kind: TokenKind::Num(v),
                pos: start,
            });
        } else if ch.is_ascii_alphabetic() {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == '_') {
                i += 1;
            }
            out.push(Token {
                kind: TokenKind::Ident(bytes[start..i].iter().collect()),
                pos: start,
            });
        } else if "+-*/^()".contains(ch) {
            out.push(Token {
                kind: TokenKind::Op(ch),
                pos: i,
            });
            i += 1;
        } else {
            return Err(ExprError::UnexpectedChar { pos: i, found: ch });
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek_op(&self) -> Option<char> {
        match self.tokens.get(self.pos) {
            Some(Token {
                kind: TokenKind::Op(c),
                ..
            }) => Some(*c),
            _ => None,
        }
    }

    fn expect_op(&mut self, op: char) -> Result<(), ExprError> {
        match self.tokens.get(self.pos) {
            Some(Token {
                kind: TokenKind::Op(c),
                ..
            }) if *c == op => {
                self.pos += 1;
                Ok(())
            }
            Some(t) => Err(ExprError::UnexpectedToken {
                pos: t.pos,
                found: t.kind.to_string(),
            }),
            None => Err(ExprError::UnexpectedEnd),
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        while let Some(op @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if op == '+' {
                Expr::Add(Arc::new(lhs), Arc::new(rhs))
            } else {
                Expr::Sub(Arc::new(lhs), Arc::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        while let Some(op @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if op == '*' {
                Expr::Mul(Arc::new(lhs), Arc::new(rhs))
            } else {
                Expr::Div(Arc::new(lhs), Arc::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        match self.peek_op() {
            Some('-') => {
                self.pos += 1;
                Ok(Expr::Neg(Arc::new(self.unary()?)))
            }
            Some('+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if self.peek_op() == Some('^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Expr::Pow(Arc::new(base), Arc::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        let tok = self.tokens.get(self.pos).cloned().ok_or(ExprError::UnexpectedEnd)?;
        self.pos += 1;
        match tok.kind {
            TokenKind::Num(v) => Ok(Expr::Const(v)),
            TokenKind::Op('(') => {
                let e = self.expr()?;
                self.expect_op(')')?;
                Ok(e)
            }
            TokenKind::Op(c) => Err(ExprError::UnexpectedToken {
                pos: tok.pos,
                found: c.to_string(),
            }),
            TokenKind::Ident(name) => {
                let func = match name.as_str() {
                    "sin" => Some(Func::Sin),
                    "cos" => Some(Func::Cos),
                    "exp" => Some(Func::Exp),
                    "log" => Some(Func::Log),
                    "atan" => Some(Func::Atan),
                    _ => None,
                };
                if let Some(f) = func {
                    self.expect_op('(')?;
                    let arg = self.expr()?;
                    self.expect_op(')')?;
                    return Ok(Expr::Call(f, Arc::new(arg)));
                }
                match name.as_str() {
                    "x1" | "x" => Ok(Expr::Var(0)),
                    "x2" | "y" => Ok(Expr::Var(1)),
                    "x3" | "z" => Ok(Expr::Var(2)),
                    "pi" => Ok(Expr::Const(std::f64::consts::PI)),
                    "e" => Ok(Expr::Const(std::f64::consts::E)),
                    _ => Err(ExprError::UnknownIdent { pos: tok.pos, name }),
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(s: &str, x: &[f64]) -> f64 {
        Expr::parse(s).unwrap().eval(x)
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("1 + 2 * 3", &[]), 7.0);
        assert_eq!(ev("2 ^ 3 ^ 2", &[]), 512.0);
        assert_eq!(ev("-x1^2", &[3.0]), -9.0);
        assert_eq!(ev("8 / 2 / 2", &[]), 2.0);
        assert_eq!(ev("0.5*x1^2 + 0.3*x1*x2", &[2.0, 1.0]), 2.6);
        assert!((ev("atan(1) * 4", &[]) - std::f64::consts::PI).abs() < 1e-15);
        assert_eq!(ev("1e-3 * 2", &[]), 0.002);
        assert_eq!(ev("exp(0) + log(e) + cos(0) + sin(0)", &[]), 3.0);
        assert_eq!(ev("x + y + z", &[1.0, 2.0, 3.0]), 6.0);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(Expr::parse("1 +"), Err(ExprError::UnexpectedEnd)));
        assert!(matches!(Expr::parse("foo(1)"), Err(ExprError::UnknownIdent { .. })));
        assert!(matches!(Expr::parse("1 $ 2"), Err(ExprError::UnexpectedChar { pos: 2, .. })));
        assert!(matches!(Expr::parse("(1 + 2"), Err(ExprError::UnexpectedEnd)));
        assert!(matches!(Expr::parse("1 2"), Err(ExprError::UnexpectedToken { .. })));
        assert!(matches!(Expr::parse("sqrt(2)"), Err(ExprError::UnknownIdent { .. })));
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let sources = [
            "x1^4 - 2*x1*x2 + x2^3",
            "sin(x1) * exp(x2) / (2 + cos(x1*x2))",
            "log(1 + x1^2) + atan(x2 - x1)",
            "(1 + x1^2)^(0.5 + x2)",
        ];
        let x = [0.4, -0.7];
        let h = 1e-6;
        for src in sources {
            let e = Expr::parse(src).unwrap();
            for k in 0..2 {
                let d = e.derivative(k).eval(&x);
                let mut xp = x;
                let mut xm = x;
                xp[k] += h;
                xm[k] -= h;
                let fd = (e.eval(&xp) - e.eval(&xm)) / (2.0 * h);
                assert!((d - fd).abs() < 1e-7, "{src} d/dx{}: {d} vs {fd}", k + 1);
            }
        }
    }

    #[test]
    fn arity_counts_variables() {
        assert_eq!(Expr::parse("3").unwrap().arity(), 0);
        assert_eq!(Expr::parse("x1 + x3").unwrap().arity(), 3);
    }
}

//! Arithmetic expressions for user-supplied field components.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?        // right-associative
//! primary := number | ident | ident '(' expr ')' | '(' expr ')'
//! ```
//!
//! So `-2^2 = -4`, `2^3^2 = 512` and `2^-1 = 0.5`.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier `{name}` at byte {pos}")]
    UnknownIdentifier { name: String, pos: usize },
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("domain error: {0}")]
    Domain(String),
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
    Sqrt,
    Exp,
    Abs,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sqrt" => Func::Sqrt,
            "exp" => Func::Exp,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
            Func::Exp => "exp",
            Func::Abs => "abs",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(String),
    Pi,
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

/// Variable bindings for evaluation.
pub type Env = HashMap<String, f64>;

/// Parses an expression, accepting any identifier as a variable name.
pub fn parse(src: &str) -> Result<Expr, ExprError> {
    Parser::new(src, None).parse_all()
}

/// Parses an expression, rejecting identifiers outside `allowed` (plus `pi`).
pub fn parse_with_vars(src: &str, allowed: &[&str]) -> Result<Expr, ExprError> {
    Parser::new(src, Some(allowed)).parse_all()
}

impl Expr {
    pub fn eval(&self, env: &Env) -> Result<f64, ExprError> {
        match self {
            Expr::Num(v) => Ok(*v),
            Expr::Pi => Ok(std::f64::consts::PI),
            Expr::Var(name) => env.get(name).copied().ok_or_else(|| ExprError::UnboundVariable(name.clone())),
            Expr::Neg(e) => Ok(-e.eval(env)?),
            Expr::Bin(op, l, r) => {
                let (a, b) = (l.eval(env)?, r.eval(env)?);
                match op {
                    BinOp::Add => Ok(a + b),
                    BinOp::Sub => Ok(a - b),
                    BinOp::Mul => Ok(a * b),
                    BinOp::Div if b == 0.0 => Err(ExprError::Domain("division by zero".into())),
                    BinOp::Div => Ok(a / b),
                    BinOp::Pow => {
                        let out = a.powf(b);
                        if out.is_nan() {
                            Err(ExprError::Domain(format!("{a}^{b} is undefined")))
                        } else {
                            Ok(out)
                        }
                    }
                }
            }
            Expr::Call(f, arg) => {
                let x = arg.eval(env)?;
                match f {
                    Func::Sin => Ok(x.sin()),
                    Func::Cos => Ok(x.cos()),
                    Func::Sqrt if x < 0.0 => Err(ExprError::Domain(format!("sqrt of negative value {x}"))),
                    Func::Sqrt => Ok(x.sqrt()),
                    Func::Exp => Ok(x.exp()),
                    Func::Abs => Ok(x.abs()),
                }
            }
        }
    }

    /// Evaluates with the given `(name, value)` pairs.
    pub fn eval_with(&self, vars: &[(&str, f64)]) -> Result<f64, ExprError> {
        let env: Env = vars.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        self.eval(&env)
    }

    /// Free variable names, sorted and deduplicated.
    pub fn free_vars(&self) -> Vec<String> {
        fn walk(e: &Expr, out: &mut Vec<String>) {
            match e {
                Expr::Var(n) => out.push(n.clone()),
                Expr::Neg(a) | Expr::Call(_, a) => walk(a, out),
                Expr::Bin(_, a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
                Expr::Num(_) | Expr::Pi => {}
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out.sort();
        out.dedup();
        out
    }

    /// True when the expression mentions none of `vars`.
    pub fn is_constant_in(&self, vars: &[&str]) -> bool {
        self.free_vars().iter().all(|v| !vars.contains(&v.as_str()))
    }
}

impl fmt::Display for Expr {
    /// Fully parenthesized output that parses back to the same tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Pi => write!(f, "pi"),
            Expr::Var(n) => write!(f, "{n}"),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Bin(op, l, r) => {
                let sym = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                write!(f, "({l} {sym} {r})")
            }
            Expr::Call(func, arg) => write!(f, "{}({arg})", func.name()),
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    allowed: Option<&'a [&'a str]>,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str, allowed: Option<&'a [&'a str]>) -> Self {
        Parser { src, pos: 0, allowed }
    }

    fn parse_all(mut self) -> Result<Expr, ExprError> {
        let e = self.expr()?;
        self.skip_ws();
        if self.pos < self.src.len() {
            return Err(self.error(format!("unexpected `{}`", self.peek().unwrap_or(' '))));
        }
        Ok(e)
    }

    fn error(&self, msg: impl Into<String>) -> ExprError {
        ExprError::Syntax { pos: self.pos, msg: msg.into() }
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat('+') {
                BinOp::Add
            } else if self.eat('-') {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat('*') {
                BinOp::Mul
            } else if self.eat('/') {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.primary()?;
        if self.eat('^') {
            let exponent = self.unary()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        self.skip_ws();
        let start = self.pos;
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    return Err(self.error("expected `)`"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {
                while let Some(c) = self.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
                let name = &self.src[start..self.pos];
                self.skip_ws();
                if self.peek() == Some('(') {
                    let func = Func::from_name(name)
                        .ok_or_else(|| ExprError::UnknownIdentifier { name: name.to_string(), pos: start })?;
                    self.pos += 1;
                    let arg = self.expr()?;
                    if !self.eat(')') {
                        return Err(self.error("expected `)`"));
                    }
                    return Ok(Expr::Call(func, Box::new(arg)));
                }
                if name == "pi" {
                    return Ok(Expr::Pi);
                }
                if let Some(allowed) = self.allowed {
                    if !allowed.contains(&name) {
                        return Err(ExprError::UnknownIdentifier { name: name.to_string(), pos: start });
                    }
                }
                Ok(Expr::Var(name.to_string()))
            }
            Some(c) => Err(self.error(format!("unexpected `{c}`"))),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let mut end = start;
        while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
            end += 1;
        }
        if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
            let mut k = end + 1;
            if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                k += 1;
            }
            if k < bytes.len() && bytes[k].is_ascii_digit() {
                while k < bytes.len() && bytes[k].is_ascii_digit() {
                    k += 1;
                }
                end = k;
            }
        }
        let text = &self.src[start..end];
        let value = text.parse::<f64>().map_err(|_| ExprError::Syntax { pos: start, msg: format!("malformed number `{text}`") })?;
        self.pos = end;
        Ok(Expr::Num(value))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal() {
        assert_eq!(parse("9.81").unwrap(), Expr::Num(9.81));
    }

    #[test]
    fn linear_field() {
        let v = parse("9.81 + 0.3*x").unwrap().eval_with(&[("x", 2.0)]).unwrap();
        assert!((v - 10.41).abs() < 1e-12);
    }

    #[test]
    fn power_is_right_associative() {
        assert_eq!(parse("2^3^2").unwrap().eval(&Env::new()).unwrap(), 512.0);
        assert_eq!(parse("-2^2").unwrap().eval(&Env::new()).unwrap(), -4.0);
        assert_eq!(parse("2^-1").unwrap().eval(&Env::new()).unwrap(), 0.5);
    }

    #[test]
    fn variables_and_functions() {
        assert_eq!(parse("t").unwrap().eval_with(&[("t", 1.5)]).unwrap(), 1.5);
        assert!(parse("sin(pi)").unwrap().eval(&Env::new()).unwrap().abs() < 1e-15);
        let kepler = parse("-mu/ (x^2+y^2)^1.5 * x").unwrap();
        assert_eq!(kepler.eval_with(&[("mu", 1.0), ("x", 1.0), ("y", 0.0)]).unwrap(), -1.0);
    }

    #[test]
    fn scientific_notation() {
        assert_eq!(parse("1.5e-3*2").unwrap().eval(&Env::new()).unwrap(), 3e-3);
    }

    #[test]
    fn syntax_errors_carry_positions() {
        assert_eq!(parse("1 + * 2"), Err(ExprError::Syntax { pos: 4, msg: "unexpected `*`".into() }));
        assert!(matches!(parse("(1 + 2"), Err(ExprError::Syntax { pos: 6, .. })));
        assert!(matches!(parse("1 2"), Err(ExprError::Syntax { pos: 2, .. })));
        assert!(matches!(parse(""), Err(ExprError::Syntax { pos: 0, .. })));
    }

    #[test]
    fn unknown_identifiers() {
        assert_eq!(parse("tan(x)"), Err(ExprError::UnknownIdentifier { name: "tan".into(), pos: 0 }));
        assert_eq!(parse_with_vars("x + w", &["t", "x"]), Err(ExprError::UnknownIdentifier { name: "w".into(), pos: 4 }));
        assert!(parse_with_vars("pi*x", &["x"]).is_ok());
    }

    #[test]
    fn evaluation_errors() {
        assert_eq!(parse("x").unwrap().eval(&Env::new()), Err(ExprError::UnboundVariable("x".into())));
        assert!(matches!(parse("1/0").unwrap().eval(&Env::new()), Err(ExprError::Domain(_))));
        assert!(matches!(parse("sqrt(-1)").unwrap().eval(&Env::new()), Err(ExprError::Domain(_))));
    }

    #[test]
    fn printer_round_trip() {
        for src in ["-mu/ (x^2+y^2)^1.5 * x", "2^3^2", "-(-x)", "sin(t)*cos(2*pi*t) - abs(x)/3", "1e-300+exp(-x^2)"] {
            let e = parse(src).unwrap();
            let printed = e.to_string();
            assert_eq!(parse(&printed).unwrap(), e, "{printed}");
        }
    }
}

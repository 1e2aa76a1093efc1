//! Expression trees for radial densities.
//!
//! The grammar is deliberately small:
//!
//! ```text
//! expr   := ['-'] term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := base ('^' factor)?
//! base   := number | variable | function '(' expr ')' | '(' expr ')'
//! ```
//!
//! Radial profiles use the single variable `r` and the functions
//! `exp`, `log`, `sinh`, `cosh`. Two-dimensional end densities additionally
//! admit `theta`, `sin` and `cos`.
//!
//! Besides plain evaluation the tree supports structural differentiation and
//! a structural logarithm `ln_eval`, which evaluates `ln f(x)` without forming
//! `f(x)` itself. The latter is what keeps criterion functionals finite for
//! densities like `exp(r^3)` whose values overflow `f64` long before the
//! integrals of interest do.

use crate::error::{EndsError, Result};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    R,
    Theta,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Exp(Box<Expr>),
    Log(Box<Expr>),
    Sinh(Box<Expr>),
    Cosh(Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
}

impl Expr {
    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn var_r() -> Expr {
        Expr::Var(Var::R)
    }

    fn is_zero(&self) -> bool {
        matches!(self, Expr::Num(v) if *v == 0.0)
    }

    fn is_one(&self) -> bool {
        matches!(self, Expr::Num(v) if *v == 1.0)
    }

    /// Constant-folding constructors keep derivative trees from ballooning.
    pub fn add(a: Expr, b: Expr) -> Expr {
        if a.is_zero() {
            return b;
        }
        if b.is_zero() {
            return a;
        }
        Expr::Add(Box::new(a), Box::new(b))
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        if b.is_zero() {
            return a;
        }
        if a.is_zero() {
            return Expr::Neg(Box::new(b));
        }
        Expr::Sub(Box::new(a), Box::new(b))
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        if a.is_zero() || b.is_zero() {
            return Expr::Num(0.0);
        }
        if a.is_one() {
            return b;
        }
        if b.is_one() {
            return a;
        }
        Expr::Mul(Box::new(a), Box::new(b))
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        if a.is_zero() {
            return Expr::Num(0.0);
        }
        if b.is_one() {
            return a;
        }
        Expr::Div(Box::new(a), Box::new(b))
    }

    pub fn pow(a: Expr, b: Expr) -> Expr {
        if b.is_one() {
            return a;
        }
        if b.is_zero() {
            return Expr::Num(1.0);
        }
        Expr::Pow(Box::new(a), Box::new(b))
    }

    pub fn exp(a: Expr) -> Expr {
        Expr::Exp(Box::new(a))
    }

    pub fn eval(&self, r: f64, theta: f64) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var(Var::R) => r,
            Expr::Var(Var::Theta) => theta,
            Expr::Neg(a) => -a.eval(r, theta),
            Expr::Add(a, b) => a.eval(r, theta) + b.eval(r, theta),
            Expr::Sub(a, b) => a.eval(r, theta) - b.eval(r, theta),
            Expr::Mul(a, b) => a.eval(r, theta) * b.eval(r, theta),
            Expr::Div(a, b) => a.eval(r, theta) / b.eval(r, theta),
            Expr::Pow(a, b) => a.eval(r, theta).powf(b.eval(r, theta)),
            Expr::Exp(a) => a.eval(r, theta).exp(),
            Expr::Log(a) => a.eval(r, theta).ln(),
            Expr::Sinh(a) => a.eval(r, theta).sinh(),
            Expr::Cosh(a) => a.eval(r, theta).cosh(),
            Expr::Sin(a) => a.eval(r, theta).sin(),
            Expr::Cos(a) => a.eval(r, theta).cos(),
        }
    }

    /// Evaluate `ln(self)` without materialising `self` where the structure
    /// permits. Falls back to `ln(eval(..))` on nodes with no useful rule.
    pub fn ln_eval(&self, r: f64, theta: f64) -> f64 {
        match self {
            Expr::Exp(a) => a.eval(r, theta),
            Expr::Mul(a, b) => a.ln_eval(r, theta) + b.ln_eval(r, theta),
            Expr::Div(a, b) => a.ln_eval(r, theta) - b.ln_eval(r, theta),
            Expr::Pow(a, b) => b.eval(r, theta) * a.ln_eval(r, theta),
            Expr::Sinh(a) => {
                let x = a.eval(r, theta);
                if x > 20.0 {
                    x - std::f64::consts::LN_2 + (-(-2.0 * x).exp()).ln_1p()
                } else {
                    x.sinh().ln()
                }
            }
            Expr::Cosh(a) => {
                let x = a.eval(r, theta).abs();
                if x > 20.0 {
                    x - std::f64::consts::LN_2 + (-2.0 * x).exp().ln_1p()
                } else {
                    x.cosh().ln()
                }
            }
            _ => self.eval(r, theta).ln(),
        }
    }

    /// Structural derivative with respect to `var`.
    pub fn diff(&self, var: Var) -> Expr {
        match self {
            Expr::Num(_) => Expr::Num(0.0),
            Expr::Var(v) => Expr::Num(if *v == var { 1.0 } else { 0.0 }),
            Expr::Neg(a) => Expr::Neg(Box::new(a.diff(var))),
            Expr::Add(a, b) => Expr::add(a.diff(var), b.diff(var)),
            Expr::Sub(a, b) => Expr::sub(a.diff(var), b.diff(var)),
            Expr::Mul(a, b) => Expr::add(
                Expr::mul(a.diff(var), (**b).clone()),
                Expr::mul((**a).clone(), b.diff(var)),
            ),
            Expr::Div(a, b) => Expr::div(
                Expr::sub(
                    Expr::mul(a.diff(var), (**b).clone()),
                    Expr::mul((**a).clone(), b.diff(var)),
                ),
                Expr::pow((**b).clone(), Expr::Num(2.0)),
            ),
            Expr::Pow(a, b) => match &**b {
                // a^c with constant c: c a^(c-1) a'
                Expr::Num(c) => Expr::mul(
                    Expr::mul(Expr::Num(*c), Expr::pow((**a).clone(), Expr::Num(c - 1.0))),
                    a.diff(var),
                ),
                // general: a^b (b' ln a + b a'/a)
                _ => Expr::mul(
                    self.clone(),
                    Expr::add(
                        Expr::mul(b.diff(var), Expr::Log(a.clone())),
                        Expr::div(Expr::mul((**b).clone(), a.diff(var)), (**a).clone()),
                    ),
                ),
            },
            Expr::Exp(a) => Expr::mul(self.clone(), a.diff(var)),
            Expr::Log(a) => Expr::div(a.diff(var), (**a).clone()),
            Expr::Sinh(a) => Expr::mul(Expr::Cosh(a.clone()), a.diff(var)),
            Expr::Cosh(a) => Expr::mul(Expr::Sinh(a.clone()), a.diff(var)),
            Expr::Sin(a) => Expr::mul(Expr::Cos(a.clone()), a.diff(var)),
            Expr::Cos(a) => Expr::Neg(Box::new(Expr::mul(Expr::Sin(a.clone()), a.diff(var)))),
        }
    }

    pub fn uses(&self, var: Var) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Var(v) => *v == var,
            Expr::Neg(a) | Expr::Exp(a) | Expr::Log(a) | Expr::Sinh(a) | Expr::Cosh(a)
            | Expr::Sin(a) | Expr::Cos(a) => a.uses(var),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b)
            | Expr::Pow(a, b) => a.uses(var) || b.uses(var),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var(Var::R) => write!(f, "r"),
            Expr::Var(Var::Theta) => write!(f, "theta"),
            Expr::Neg(a) => write!(f, "-({a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, b) => write!(f, "({a}^{b})"),
            Expr::Exp(a) => write!(f, "exp({a})"),
            Expr::Log(a) => write!(f, "log({a})"),
            Expr::Sinh(a) => write!(f, "sinh({a})"),
            Expr::Cosh(a) => write!(f, "cosh({a})"),
            Expr::Sin(a) => write!(f, "sin({a})"),
            Expr::Cos(a) => write!(f, "cos({a})"),
        }
    }
}

/// Which variables and functions a parse accepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Vocabulary {
    /// `r` only; `exp`, `log`, `sinh`, `cosh`.
    Radial,
    /// `r` and `theta`; additionally `sin`, `cos`.
    TwoDim,
}

pub fn parse(text: &str, vocab: Vocabulary) -> Result<Expr> {
    let mut p = Parser {
        chars: text.char_indices().peekable(),
        text,
        vocab,
    };
    let e = p.expr()?;
    p.skip_ws();
    if let Some(&(pos, c)) = p.chars.peek() {
        return Err(EndsError::Syntax {
            position: pos,
            message: format!("unexpected character '{c}'"),
        });
    }
    Ok(e)
}

struct Parser<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    text: &'a str,
    vocab: Vocabulary,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while matches!(self.chars.peek(), Some(&(_, c)) if c.is_whitespace()) {
            self.chars.next();
        }
    }

    fn pos(&mut self) -> usize {
        self.chars.peek().map_or(self.text.len(), |&(i, _)| i)
    }

    fn eat(&mut self, expected: char) -> Result<()> {
        self.skip_ws();
        match self.chars.peek() {
            Some(&(_, c)) if c == expected => {
                self.chars.next();
                Ok(())
            }
            other => Err(EndsError::Syntax {
                position: other.map_or(self.text.len(), |&(i, _)| i),
                message: format!("expected '{expected}'"),
            }),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        self.skip_ws();
        let negated = if matches!(self.chars.peek(), Some(&(_, '-'))) {
            self.chars.next();
            true
        } else {
            false
        };
        let mut lhs = self.term()?;
        if negated {
            lhs = Expr::Neg(Box::new(lhs));
        }
        loop {
            self.skip_ws();
            match self.chars.peek() {
                Some(&(_, '+')) => {
                    self.chars.next();
                    let rhs = self.term()?;
                    lhs = Expr::Add(Box::new(lhs), Box::new(rhs));
                }
                Some(&(_, '-')) => {
                    self.chars.next();
                    let rhs = self.term()?;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            self.skip_ws();
            match self.chars.peek() {
                Some(&(_, '*')) => {
                    self.chars.next();
                    let rhs = self.factor()?;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(rhs));
                }
                Some(&(_, '/')) => {
                    self.chars.next();
                    let rhs = self.factor()?;
                    lhs = Expr::Div(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        let base = self.base()?;
        self.skip_ws();
        if matches!(self.chars.peek(), Some(&(_, '^'))) {
            self.chars.next();
            // right-associative
            let exponent = self.factor()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Expr> {
        self.skip_ws();
        let start = self.pos();
        match self.chars.peek() {
            Some(&(_, '(')) => {
                self.chars.next();
                let e = self.expr()?;
                self.eat(')')?;
                Ok(e)
            }
            Some(&(_, c)) if c.is_ascii_digit() || c == '.' => self.number(start),
            Some(&(_, c)) if c.is_ascii_alphabetic() => self.identifier(start),
            other => Err(EndsError::Syntax {
                position: other.map_or(self.text.len(), |&(i, _)| i),
                message: "expected a number, variable, function or '('".to_string(),
            }),
        }
    }

    fn number(&mut self, start: usize) -> Result<Expr> {
        let mut end = start;
        let mut seen_exp = false;
        while let Some(&(i, c)) = self.chars.peek() {
            let take = c.is_ascii_digit()
                || c == '.'
                || (!seen_exp && (c == 'e' || c == 'E'))
                || ((c == '+' || c == '-') && seen_exp && end == i.saturating_sub(1) && {
                    let prev = self.text.as_bytes()[i - 1];
                    prev == b'e' || prev == b'E'
                });
            if !take {
                break;
            }
            if c == 'e' || c == 'E' {
                seen_exp = true;
            }
            end = i;
            self.chars.next();
        }
        let slice = &self.text[start..=end];
        slice.parse::<f64>().map(Expr::Num).map_err(|_| EndsError::Syntax {
            position: start,
            message: format!("invalid number '{slice}'"),
        })
    }

    fn identifier(&mut self, start: usize) -> Result<Expr> {
        let mut end = start;
        while let Some(&(i, c)) = self.chars.peek() {
            if !c.is_ascii_alphabetic() {
                break;
            }
            end = i;
            self.chars.next();
        }
        let name = &self.text[start..=end];
        match name {
            "r" => Ok(Expr::Var(Var::R)),
            "theta" if self.vocab == Vocabulary::TwoDim => Ok(Expr::Var(Var::Theta)),
            "exp" | "log" | "sinh" | "cosh" => {
                self.eat('(')?;
                let arg = self.expr()?;
                self.eat(')')?;
                Ok(match name {
                    "exp" => Expr::Exp(Box::new(arg)),
                    "log" => Expr::Log(Box::new(arg)),
                    "sinh" => Expr::Sinh(Box::new(arg)),
                    _ => Expr::Cosh(Box::new(arg)),
                })
            }
            "sin" | "cos" if self.vocab == Vocabulary::TwoDim => {
                self.eat('(')?;
                let arg = self.expr()?;
                self.eat(')')?;
                Ok(if name == "sin" {
                    Expr::Sin(Box::new(arg))
                } else {
                    Expr::Cos(Box::new(arg))
                })
            }
            _ => Err(EndsError::Syntax {
                position: start,
                message: format!("unknown identifier '{name}'"),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(text: &str) -> Expr {
        parse(text, Vocabulary::Radial).unwrap()
    }

    #[test]
    fn evaluates_basic_expressions() {
        assert_eq!(p("1").eval(7.0, 0.0), 1.0);
        assert_eq!(p("r^2 + 1").eval(3.0, 0.0), 10.0);
        assert!((p("exp(-r^2)").eval(1.0, 0.0) - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(p("exp(r^3)").eval(0.0, 0.0), 1.0);
        assert_eq!(p("(1+r)^(-2)").eval(1.0, 0.0), 0.25);
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(p("2 + 3 * 4").eval(0.0, 0.0), 14.0);
        assert_eq!(p("2 * 3 ^ 2").eval(0.0, 0.0), 18.0);
        // right-associative power
        assert_eq!(p("2 ^ 3 ^ 2").eval(0.0, 0.0), 512.0);
        assert_eq!(p("10 - 2 - 3").eval(0.0, 0.0), 5.0);
    }

    #[test]
    fn syntax_error_carries_position() {
        let err = parse("exp(-r", Vocabulary::Radial).unwrap_err();
        match err {
            EndsError::Syntax { position, .. } => assert_eq!(position, 6),
            other => panic!("unexpected error {other:?}"),
        }
        assert!(parse("r + * 2", Vocabulary::Radial).is_err());
        // theta is rejected in the radial vocabulary
        assert!(parse("sin(theta)", Vocabulary::Radial).is_err());
        assert!(parse("sin(theta)", Vocabulary::TwoDim).is_ok());
    }

    #[test]
    fn structural_derivative_matches_finite_differences() {
        let cases = ["exp(-r^2)", "r^2 + 1", "sinh(r) + cosh(2*r)", "(1+r)^(-2)", "exp(r)/(1+r)"];
        for text in cases {
            let e = p(text);
            let de = e.diff(Var::R);
            for r in [0.3, 1.0, 2.5] {
                let h = 1e-6;
                let fd = (e.eval(r + h, 0.0) - e.eval(r - h, 0.0)) / (2.0 * h);
                let sym = de.eval(r, 0.0);
                assert!(
                    (fd - sym).abs() <= 1e-5 * (1.0 + sym.abs()),
                    "{text} at r={r}: fd={fd} sym={sym}"
                );
            }
        }
    }

    #[test]
    fn ln_eval_handles_overflowing_values() {
        let e = p("exp(r^3)");
        assert_eq!(e.ln_eval(100.0, 0.0), 1e6);
        let c = p("cosh(r)");
        // cosh(800) overflows but its log is finite
        let expected = 800.0 - std::f64::consts::LN_2;
        assert!((c.ln_eval(800.0, 0.0) - expected).abs() < 1e-12);
        let s = p("sinh(r)");
        assert!((s.ln_eval(800.0, 0.0) - expected).abs() < 1e-12);
        // agreement with the direct log in the moderate regime
        for text in ["exp(-r)", "(1+r)^(-2)", "exp(r)/(1+r)"] {
            let e = p(text);
            for r in [0.0, 0.5, 3.0] {
                assert!((e.ln_eval(r, 0.0) - e.eval(r, 0.0).ln()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn scientific_notation_numbers() {
        assert_eq!(p("1e-3").eval(0.0, 0.0), 1e-3);
        assert_eq!(p("2.5E2").eval(0.0, 0.0), 250.0);
    }
}

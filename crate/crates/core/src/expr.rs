//! Tiny arithmetic expressions for configured reals (`sqrt(2)-1`, `0.4142`, `pi/7`).
//!
//! Expressions are kept symbolic so they can be re-evaluated at any precision.

use std::fmt;
use std::str::FromStr;

use rug::ops::Pow;
use rug::{Integer, Rational};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::real::Real;

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(Rational),
    Pi,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sqrt,
    Exp,
    Ln,
    Sin,
    Cos,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sin => "sin",
            Func::Cos => "cos",
        }
    }
}

impl Expr {
    pub fn rational(r: Rational) -> Expr {
        Expr::Num(r)
    }

    pub fn int(v: i64) -> Expr {
        Expr::Num(Rational::from(v))
    }

    /// Evaluate to an enclosing interval at `prec` bits.
    pub fn eval(&self, prec: u32) -> Real {
        match self {
            Expr::Num(r) => Real::from_rational(r, prec),
            Expr::Pi => Real::pi(prec),
            Expr::Neg(a) => -a.eval(prec),
            Expr::Add(a, b) => a.eval(prec) + b.eval(prec),
            Expr::Sub(a, b) => a.eval(prec) - b.eval(prec),
            Expr::Mul(a, b) => a.eval(prec) * b.eval(prec),
            Expr::Div(a, b) => a.eval(prec) / b.eval(prec),
            Expr::Call(f, a) => {
                let x = a.eval(prec);
                match f {
                    Func::Sqrt => x.sqrt(),
                    Func::Exp => x.exp(),
                    Func::Ln => x.ln(),
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                }
            }
        }
    }

    /// Exact value when the expression is a plain rational.
    pub fn as_rational(&self) -> Option<Rational> {
        match self {
            Expr::Num(r) => Some(r.clone()),
            Expr::Neg(a) => a.as_rational().map(|r| -r),
            Expr::Add(a, b) => Some(a.as_rational()? + b.as_rational()?),
            Expr::Sub(a, b) => Some(a.as_rational()? - b.as_rational()?),
            Expr::Mul(a, b) => Some(a.as_rational()? * b.as_rational()?),
            Expr::Div(a, b) => {
                let d = b.as_rational()?;
                if d == 0 {
                    None
                } else {
                    Some(a.as_rational()? / d)
                }
            }
            _ => None,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(r) => {
                if *r.denom() == 1 {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "({}/{})", r.numer(), r.denom())
                }
            }
            Expr::Pi => write!(f, "pi"),
            Expr::Neg(a) => write!(f, "-({a})"),
            Expr::Add(a, b) => write!(f, "({a}+{b})"),
            Expr::Sub(a, b) => write!(f, "({a}-{b})"),
            Expr::Mul(a, b) => write!(f, "({a}*{b})"),
            Expr::Div(a, b) => write!(f, "({a}/{b})"),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.pos).copied()
    }

    fn err(&self, msg: &str) -> Error {
        Error::Config(format!(
            "expression parse error at byte {}: {msg}",
            self.pos
        ))
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(c) = self.peek() {
            match c {
                b'+' => {
                    self.pos += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                b'-' => {
                    self.pos += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => break,
            }
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        while let Some(c) = self.peek() {
            match c {
                b'*' => {
                    self.pos += 1;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                b'/' => {
                    self.pos += 1;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => break,
            }
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.factor()?)))
            }
            Some(b'+') => {
                self.pos += 1;
                self.factor()
            }
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected ')'"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.s.len()
                    && (self.s[self.pos].is_ascii_alphanumeric() || self.s[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.s[start..self.pos]).unwrap_or("");
                if name == "pi" {
                    return Ok(Expr::Pi);
                }
                let func = match name {
                    "sqrt" => Func::Sqrt,
                    "exp" => Func::Exp,
                    "ln" | "log" => Func::Ln,
                    "sin" => Func::Sin,
                    "cos" => Func::Cos,
                    _ => return Err(self.err(&format!("unknown identifier '{name}'"))),
                };
                if self.peek() != Some(b'(') {
                    return Err(self.err("expected '(' after function name"));
                }
                self.pos += 1;
                let arg = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected ')'"));
                }
                self.pos += 1;
                Ok(Expr::Call(func, Box::new(arg)))
            }
            _ => Err(self.err("unexpected end of input or character")),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.s.len()
            && (self.s[self.pos].is_ascii_digit() || self.s[self.pos] == b'.')
        {
            self.pos += 1;
        }
        let mut exp10: i64 = 0;
        if self.pos < self.s.len() && (self.s[self.pos] == b'e' || self.s[self.pos] == b'E') {
            let mut p = self.pos + 1;
            let estart = p;
            if p < self.s.len() && (self.s[p] == b'-' || self.s[p] == b'+') {
                p += 1;
            }
            while p < self.s.len() && self.s[p].is_ascii_digit() {
                p += 1;
            }
            let txt = std::str::from_utf8(&self.s[estart..p]).unwrap_or("");
            exp10 = txt.parse().map_err(|_| self.err("bad exponent"))?;
            self.pos = p;
        }
        let txt = std::str::from_utf8(&self.s[start..self.pos]).unwrap_or("");
        let txt = txt.split(['e', 'E']).next().unwrap_or("");
        let (int_part, frac_part) = match txt.split_once('.') {
            Some((a, b)) => (a, b),
            None => (txt, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(self.err("empty number"));
        }
        let digits = format!("{int_part}{frac_part}");
        let mant = Integer::from_str(if digits.is_empty() { "0" } else { &digits })
            .map_err(|_| self.err("bad number"))?;
        let scale = exp10 - frac_part.len() as i64;
        let ten = Integer::from(10);
        let r = if scale >= 0 {
            Rational::from(mant * ten.clone().pow(scale as u32))
        } else {
            Rational::from((mant, ten.clone().pow((-scale) as u32)))
        };
        Ok(Expr::Num(r))
    }
}

impl FromStr for Expr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Expr> {
        let mut p = Parser {
            s: s.as_bytes(),
            pos: 0,
        };
        let e = p.expr()?;
        if p.peek().is_some() {
            return Err(p.err("trailing input"));
        }
        Ok(e)
    }
}

impl Serialize for Expr {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Expr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Expr, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            S(String),
            F(f64),
            I(i64),
        }
        match Raw::deserialize(d)? {
            Raw::S(s) => s.parse().map_err(serde::de::Error::custom),
            Raw::I(i) => Ok(Expr::int(i)),
            Raw::F(f) => Rational::from_f64(f)
                .map(Expr::Num)
                .ok_or_else(|| serde::de::Error::custom("non-finite number")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_surds_and_decimals() {
        let e: Expr = "sqrt(2)-1".parse().unwrap();
        let v = e.eval(128);
        assert!((v.mid() - (2f64.sqrt() - 1.0)).abs() < 1e-15);
        let d: Expr = "0.125".parse().unwrap();
        assert_eq!(d.as_rational().unwrap(), Rational::from((1, 8)));
        let s: Expr = "1.5e-3".parse().unwrap();
        assert_eq!(s.as_rational().unwrap(), Rational::from((3, 2000)));
        let p: Expr = "(1+sqrt(5))/2".parse().unwrap();
        assert!((p.eval(128).mid() - 1.618033988749895).abs() < 1e-15);
        let q: Expr = "1/4".parse().unwrap();
        assert_eq!(q.as_rational().unwrap(), Rational::from((1, 4)));
    }

    #[test]
    fn display_round_trips() {
        for src in ["sqrt(3)-1", "pi/7", "-(2/3)+cos(1)", "exp(2)*ln(3)"] {
            let e: Expr = src.parse().unwrap();
            let again: Expr = e.to_string().parse().unwrap();
            assert_eq!(e, again, "{src}");
        }
    }

    #[test]
    fn rejects_garbage() {
        assert!("sqrt 2".parse::<Expr>().is_err());
        assert!("2+".parse::<Expr>().is_err());
        assert!("foo(1)".parse::<Expr>().is_err());
        assert!("1)".parse::<Expr>().is_err());
    }
}

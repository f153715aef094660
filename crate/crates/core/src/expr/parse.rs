//! Recursive-descent parser for the potential grammar.
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := '-' factor | base ('^' '-'? integer)?
//! base   := number | 'pi' | ident | func '(' expr ')' | '(' expr ')'
//! ```
//!
//! Unary minus and negative exponents are accepted on top of the base
//! grammar; both are needed to round-trip printed expressions.

use num_complex::Complex64;

use super::{Expr, Func};
use crate::error::{ParseError, ParseErrorKind};

/// Parse `text` as an expression over the `2n` real coordinates of an
/// `n`-dimensional chart.
pub fn parse(text: &str, n: usize) -> Result<Expr, ParseError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0, n };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.syntax(format!("unexpected `{}`", p.src[p.pos] as char)));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    n: usize,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn syntax(&self, msg: impl Into<String>) -> ParseError {
        ParseError { offset: self.pos, kind: ParseErrorKind::Syntax(msg.into()) }
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        match self.peek() {
            Some(x) if x == c => {
                self.pos += 1;
                Ok(())
            }
            Some(x) => Err(self.syntax(format!("expected `{}`, found `{}`", c as char, x as char))),
            None => Err(self.syntax(format!("expected `{}`, found end of input", c as char))),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    acc = acc + self.term()?;
                }
                Some(b'-') => {
                    self.pos += 1;
                    acc = acc - self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    acc = acc * self.factor()?;
                }
                Some(b'/') => {
                    self.pos += 1;
                    acc = acc / self.factor()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(-self.factor()?);
        }
        let base = self.base()?;
        if self.peek() != Some(b'^') {
            return Ok(base);
        }
        self.pos += 1;
        let neg = if self.peek() == Some(b'-') {
            self.pos += 1;
            true
        } else {
            false
        };
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.syntax("expected integer exponent"));
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        let k: i32 = text.parse().map_err(|_| ParseError {
            offset: start,
            kind: ParseErrorKind::Syntax(format!("exponent `{text}` out of range")),
        })?;
        Ok(base.powi(if neg { -k } else { k }))
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut count = digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            count += digits(self);
        }
        if count == 0 {
            return Err(self.syntax("malformed number"));
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        let v: f64 = text.parse().map_err(|_| ParseError {
            offset: start,
            kind: ParseErrorKind::Syntax(format!("malformed number `{text}`")),
        })?;
        Ok(Expr::constant(Complex64::new(v, 0.0)))
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            None => Err(self.syntax("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
                    self.pos += 1;
                }
                let ident = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
                if ident == "pi" {
                    return Ok(Expr::real(std::f64::consts::PI));
                }
                if let Some(func) = Func::from_name(ident) {
                    return self.call(func, start);
                }
                self.variable(ident, start)
            }
            Some(c) => Err(self.syntax(format!("unexpected `{}`", c as char))),
        }
    }

    fn call(&mut self, func: Func, start: usize) -> Result<Expr, ParseError> {
        self.expect(b'(')?;
        if self.peek() == Some(b')') {
            return Err(ParseError {
                offset: start,
                kind: ParseErrorKind::Arity { func: func.name().into() },
            });
        }
        let arg = self.expr()?;
        if self.peek() == Some(b',') {
            return Err(ParseError {
                offset: start,
                kind: ParseErrorKind::Arity { func: func.name().into() },
            });
        }
        self.expect(b')')?;
        Ok(Expr::call(func, arg))
    }

    fn variable(&self, ident: &str, start: usize) -> Result<Expr, ParseError> {
        let unknown = || ParseError {
            offset: start,
            kind: ParseErrorKind::UnknownVariable(ident.to_string()),
        };
        let (head, tail) = ident.split_at(1);
        let k: usize = tail.parse().map_err(|_| unknown())?;
        if k == 0 || k > self.n || tail.starts_with('0') {
            return Err(unknown());
        }
        match head {
            "x" => Ok(Expr::x(k - 1)),
            "y" => Ok(Expr::y(k - 1)),
            _ => Err(unknown()),
        }
    }
}

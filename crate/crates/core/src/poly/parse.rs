//! Recursive-descent parser for the polynomial text grammar.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := ('+' | '-') unary | power
//! power  := atom ('^' integer)?
//! atom   := number | identifier | '(' expr ')'
//! ```
//!
//! Numbers are integers or decimals and are read exactly; `p/q` is ordinary
//! division by a constant. Division by a non-constant expression is rejected.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use thiserror::Error;

use super::Polynomial;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown variable `{name}` at position {pos}")]
    UnknownVariable { name: String, pos: usize },
    #[error("division by a non-constant or zero expression at position {pos}")]
    BadDivision { pos: usize },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(BigRational),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '/' => Tok::Slash,
            '^' => Tok::Caret,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            _ if c.is_ascii_digit() || c == '.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                let s = &text[start..i];
                let num = parse_decimal(s)
                    .ok_or_else(|| ParseError::Syntax { pos: start, msg: format!("bad number `{s}`") })?;
                out.push((Tok::Num(num), start));
                continue;
            }
            _ if c.is_ascii_alphabetic() || c == '_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(text[start..i].to_string()), start));
                continue;
            }
            _ => {
                return Err(ParseError::Syntax { pos: start, msg: format!("unexpected character `{c}`") })
            }
        };
        out.push((tok, start));
        i += 1;
    }
    Ok(out)
}

fn parse_decimal(s: &str) -> Option<BigRational> {
    let mut parts = s.split('.');
    let int_part = parts.next()?;
    let frac_part = parts.next().unwrap_or("");
    if parts.next().is_some() || (int_part.is_empty() && frac_part.is_empty()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let n: BigInt = digits.parse().ok()?;
    let d = num_traits::pow(BigInt::from(10), frac_part.len());
    Some(BigRational::new(n, d))
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    names: &'a [String],
    end: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map(|(_, p)| *p).unwrap_or(self.end)
    }

    fn nvars(&self) -> usize {
        self.names.len()
    }

    fn expr(&mut self) -> Result<Polynomial, ParseError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    acc = &acc + &self.term()?;
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    acc = &acc - &self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Polynomial, ParseError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    acc = &acc * &self.unary()?;
                }
                Some(Tok::Slash) => {
                    let at = self.here();
                    self.pos += 1;
                    let rhs = self.unary()?;
                    match rhs.constant_value() {
                        Some(c) if !c.is_zero() => acc = acc.scale(&c.recip()),
                        _ => return Err(ParseError::BadDivision { pos: at }),
                    }
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<Polynomial, ParseError> {
        match self.peek() {
            Some(Tok::Minus) => {
                self.pos += 1;
                Ok(-self.unary()?)
            }
            Some(Tok::Plus) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Polynomial, ParseError> {
        let base = self.atom()?;
        if let Some(Tok::Caret) = self.peek() {
            self.pos += 1;
            let at = self.here();
            match self.peek().cloned() {
                Some(Tok::Num(n)) if n.is_integer() && n >= BigRational::zero() => {
                    self.pos += 1;
                    let e: u32 = n
                        .to_integer()
                        .try_into()
                        .map_err(|_| ParseError::Syntax { pos: at, msg: "exponent too large".into() })?;
                    Ok(base.pow(e))
                }
                _ => Err(ParseError::Syntax { pos: at, msg: "expected a non-negative integer exponent".into() }),
            }
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Polynomial, ParseError> {
        let at = self.here();
        match self.peek().cloned() {
            Some(Tok::Num(n)) => {
                self.pos += 1;
                Ok(Polynomial::constant(self.nvars(), n))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                let idx = self
                    .names
                    .iter()
                    .position(|v| *v == name)
                    .ok_or(ParseError::UnknownVariable { name, pos: at })?;
                Ok(Polynomial::var(self.nvars(), idx))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.expr()?;
                match self.peek() {
                    Some(Tok::RParen) => {
                        self.pos += 1;
                        Ok(inner)
                    }
                    _ => Err(ParseError::Syntax { pos: self.here(), msg: "expected `)`".into() }),
                }
            }
            Some(t) => Err(ParseError::Syntax { pos: at, msg: format!("unexpected token {t:?}") }),
            None => Err(ParseError::Syntax { pos: at, msg: "unexpected end of input".into() }),
        }
    }
}

/// Parses `text` as a polynomial in the variables `var_names` (in order).
pub fn parse<S: AsRef<str>>(text: &str, var_names: &[S]) -> Result<Polynomial, ParseError> {
    let names: Vec<String> = var_names.iter().map(|s| s.as_ref().to_string()).collect();
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, names: &names, end: text.len() };
    let poly = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(ParseError::Syntax { pos: p.here(), msg: "trailing input".into() });
    }
    Ok(poly)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{int, ratio};
    use proptest::prelude::*;

    const V: [&str; 3] = ["x1", "x2", "y"];

    #[test]
    fn reads_terms_directly() {
        let p = parse("y - x1^2 - x2^2", &V).unwrap();
        assert_eq!(p.num_terms(), 3);
        assert_eq!(p.total_degree(), crate::poly::Degree::Finite(2));
        assert_eq!(p.coefficient(&[2, 0, 0]), int(-1));
    }

    #[test]
    fn zero_literal() {
        assert!(parse("0", &["x1"]).unwrap().is_zero());
        assert!(parse("x1 - x1", &["x1"]).unwrap().is_zero());
    }

    #[test]
    fn expands_parentheses() {
        let p = parse("(y+1)^2 - 1 - x1^2 - x2^2", &V).unwrap();
        let hand = parse("y^2 + 2*y - x1^2 - x2^2", &V).unwrap();
        assert_eq!(p, hand);
    }

    #[test]
    fn rationals_and_decimals() {
        let p = parse("3/4*x1 + 0.25*x2 - 2/(4)", &V).unwrap();
        assert_eq!(p.coefficient(&[1, 0, 0]), ratio(3, 4));
        assert_eq!(p.coefficient(&[0, 1, 0]), ratio(1, 4));
        assert_eq!(p.coefficient(&[0, 0, 0]), ratio(-1, 2));
    }

    #[test]
    fn errors_carry_positions() {
        match parse("y + z", &V) {
            Err(ParseError::UnknownVariable { name, pos }) => {
                assert_eq!(name, "z");
                assert_eq!(pos, 4);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse("y + ", &V), Err(ParseError::Syntax { pos: 4, .. })));
        assert!(matches!(parse("y / x1", &V), Err(ParseError::BadDivision { pos: 2 })));
        assert!(matches!(parse("y^x1", &V), Err(ParseError::Syntax { .. })));
        assert!(matches!(parse("(y", &V), Err(ParseError::Syntax { .. })));
        assert!(matches!(parse("y $", &V), Err(ParseError::Syntax { pos: 2, .. })));
    }

    fn small_poly() -> impl Strategy<Value = Polynomial> {
        prop::collection::vec(((0u32..4, 0u32..3, 0u32..3), -20i64..20, 1i64..6), 0..6).prop_map(|ts| {
            Polynomial::from_terms(3, ts.into_iter().map(|((a, b, c), n, d)| (vec![a, b, c], ratio(n, d))))
        })
    }

    proptest! {
        #[test]
        fn render_parse_round_trip(p in small_poly()) {
            let text = p.display_with(&V);
            prop_assert_eq!(parse(&text, &V).unwrap(), p);
        }
    }
}

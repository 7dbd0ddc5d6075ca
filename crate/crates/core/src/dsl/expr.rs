//! Expression parser for densities and parameter relations.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | factor
//! factor := base ('^' exponent)?
//! exponent := integer | '(' '-'? integer ')' | '-' integer
//! base   := integer | identifier | '(' expr ')'
//! ```
//!
//! Division is only by nonzero constants, so `3/4` is a rational literal.
//! Identifiers are `x`, `y`, `PI` or declared parameters.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::DslError;
use crate::moments::MAX_DENSITY_EXPONENT;
use crate::poly::Poly;
use crate::symbols::SymbolTable;

/// Deepest parenthesis / unary nesting accepted.
pub const MAX_NESTING: usize = 200;
/// Largest exponent accepted on a parameter-only base.
pub const MAX_PARAM_EXPONENT: u32 = 64;
/// Largest number of parameter terms in a single intermediate result.
pub const MAX_TERMS: usize = 20_000;

/// Polynomial in `x, y` with coefficients in the parameters.
pub type XyPoly = BTreeMap<(u32, u32), Poly>;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(BigInt),
    Ident(String),
    Op(char),
    End,
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Int(n) => format!("integer `{n}`"),
        Tok::Ident(s) => format!("identifier `{s}`"),
        Tok::Op(c) => format!("`{c}`"),
        Tok::End => "end of input".to_string(),
    }
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, DslError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < text.len() {
        let c = text[i..].chars().next().unwrap();
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let n: BigInt = text[start..i].parse().unwrap();
            out.push((start, Tok::Int(n)));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(text[start..i].to_string())));
        } else if "+-*/^()".contains(c) {
            out.push((i, Tok::Op(c)));
            i += 1;
        } else {
            return Err(DslError::Syntax {
                pos: i,
                expected: vec!["number", "identifier", "operator"]
                    .into_iter()
                    .map(String::from)
                    .collect(),
                found: format!("character `{c}`"),
            });
        }
    }
    out.push((text.len(), Tok::End));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    at: usize,
    table: &'a Arc<SymbolTable>,
    depth: usize,
}

fn constant(table: &Arc<SymbolTable>, c: BigRational) -> XyPoly {
    if c.is_zero() {
        XyPoly::new()
    } else {
        XyPoly::from([((0, 0), Poly::constant(table, c))])
    }
}

fn has_xy(p: &XyPoly) -> bool {
    p.keys().any(|&k| k != (0, 0))
}

fn as_constant(p: &XyPoly) -> Option<BigRational> {
    match p.len() {
        0 => Some(BigRational::zero()),
        1 => p.get(&(0, 0)).and_then(|c| c.as_constant()),
        _ => None,
    }
}

fn add_into(acc: &mut XyPoly, k: (u32, u32), v: Poly) {
    let sum = match acc.remove(&k) {
        Some(old) => old + v,
        None => v,
    };
    if !sum.is_zero() {
        acc.insert(k, sum);
    }
}

fn term_count(p: &XyPoly) -> usize {
    p.values().map(Poly::num_terms).sum()
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].1
    }

    fn pos(&self) -> usize {
        self.toks[self.at].0
    }

    fn bump(&mut self) -> (usize, Tok) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn syntax(&self, expected: &[&str]) -> DslError {
        DslError::Syntax {
            pos: self.pos(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: describe(self.peek()),
        }
    }

    fn enter(&mut self) -> Result<(), DslError> {
        self.depth += 1;
        if self.depth > MAX_NESTING {
            return Err(DslError::TooLarge {
                pos: self.pos(),
                detail: format!("nesting deeper than {MAX_NESTING}"),
            });
        }
        Ok(())
    }

    fn check_size(&self, p: &XyPoly, pos: usize) -> Result<(), DslError> {
        if term_count(p) > MAX_TERMS {
            return Err(DslError::TooLarge {
                pos,
                detail: format!("more than {MAX_TERMS} terms"),
            });
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<XyPoly, DslError> {
        let mut acc = self.term()?;
        while let Tok::Op(c @ ('+' | '-')) = *self.peek() {
            let pos = self.bump().0;
            let rhs = self.term()?;
            for (k, v) in rhs {
                add_into(&mut acc, k, if c == '-' { -v } else { v });
            }
            self.check_size(&acc, pos)?;
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<XyPoly, DslError> {
        let mut acc = self.unary()?;
        while let Tok::Op(c @ ('*' | '/')) = *self.peek() {
            let pos = self.bump().0;
            let rhs_pos = self.pos();
            let rhs = self.unary()?;
            if c == '*' {
                acc = self.mul(&acc, &rhs, pos)?;
            } else {
                match as_constant(&rhs) {
                    Some(k) if k.is_zero() => {
                        return Err(DslError::DivisionByZero { pos: rhs_pos });
                    }
                    Some(k) => {
                        let inv = k.recip();
                        for v in acc.values_mut() {
                            *v = v.scale(&inv);
                        }
                    }
                    None if has_xy(&rhs) => {
                        return Err(DslError::NonPolynomialInXY {
                            pos: rhs_pos,
                            detail: "division by an expression in x or y".to_string(),
                        });
                    }
                    None => return Err(DslError::DivisionBySymbol { pos: rhs_pos }),
                }
            }
        }
        Ok(acc)
    }

    fn mul(&self, a: &XyPoly, b: &XyPoly, pos: usize) -> Result<XyPoly, DslError> {
        let mut out = XyPoly::new();
        for (&(i1, j1), c1) in a {
            for (&(i2, j2), c2) in b {
                let (i, j) = (i1 + i2, j1 + j2);
                if i.max(j) > MAX_DENSITY_EXPONENT {
                    return Err(DslError::ExponentBoundExceeded {
                        pos,
                        exponent: i.max(j),
                        bound: MAX_DENSITY_EXPONENT,
                    });
                }
                if c1.num_terms() * c2.num_terms() > MAX_TERMS {
                    return Err(DslError::TooLarge {
                        pos,
                        detail: format!("more than {MAX_TERMS} terms"),
                    });
                }
                add_into(&mut out, (i, j), c1 * c2);
            }
        }
        self.check_size(&out, pos)?;
        Ok(out)
    }

    fn unary(&mut self) -> Result<XyPoly, DslError> {
        if *self.peek() == Tok::Op('-') {
            self.bump();
            self.enter()?;
            let v = self.unary()?;
            self.depth -= 1;
            return Ok(v.into_iter().map(|(k, c)| (k, -c)).collect());
        }
        self.factor()
    }

    fn factor(&mut self) -> Result<XyPoly, DslError> {
        let base_pos = self.pos();
        let base = self.base()?;
        if *self.peek() != Tok::Op('^') {
            return Ok(base);
        }
        let caret = self.bump().0;
        let (exp_pos, negative, e) = self.exponent()?;
        if negative && !e.is_zero() {
            return Err(if has_xy(&base) {
                DslError::NonPolynomialInXY {
                    pos: exp_pos,
                    detail: "negative exponent".to_string(),
                }
            } else {
                match as_constant(&base) {
                    Some(k) if !k.is_zero() => {
                        // A negative power of a nonzero constant stays polynomial.
                        let e: u32 = match u32::try_from(&e) {
                            Ok(e) if e <= MAX_PARAM_EXPONENT => e,
                            _ => {
                                return Err(DslError::ExponentBoundExceeded {
                                    pos: exp_pos,
                                    exponent: u32::try_from(&e).unwrap_or(u32::MAX),
                                    bound: MAX_PARAM_EXPONENT,
                                })
                            }
                        };
                        return Ok(constant(self.table, num_traits::pow(k.recip(), e as usize)));
                    }
                    Some(_) => DslError::DivisionByZero { pos: base_pos },
                    None => DslError::DivisionBySymbol { pos: exp_pos },
                }
            });
        }
        let bound = if has_xy(&base) {
            MAX_DENSITY_EXPONENT
        } else {
            MAX_PARAM_EXPONENT
        };
        let e = match u32::try_from(&e) {
            Ok(e) if e <= bound => e,
            _ => {
                return Err(DslError::ExponentBoundExceeded {
                    pos: exp_pos,
                    exponent: u32::try_from(&e).unwrap_or(u32::MAX),
                    bound,
                })
            }
        };
        let mut acc = constant(self.table, BigRational::one());
        for _ in 0..e {
            acc = self.mul(&acc, &base, caret)?;
        }
        Ok(acc)
    }

    /// Returns (position, negative, magnitude).
    fn exponent(&mut self) -> Result<(usize, bool, BigInt), DslError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok((pos, false, n))
            }
            Tok::Op('-') => {
                self.bump();
                match self.peek().clone() {
                    Tok::Int(n) => {
                        self.bump();
                        Ok((pos, true, n))
                    }
                    _ => Err(self.syntax(&["integer"])),
                }
            }
            Tok::Op('(') => {
                self.bump();
                let neg = if *self.peek() == Tok::Op('-') {
                    self.bump();
                    true
                } else {
                    false
                };
                let n = match self.peek().clone() {
                    Tok::Int(n) => {
                        self.bump();
                        n
                    }
                    _ => return Err(self.syntax(&["integer"])),
                };
                if *self.peek() != Tok::Op(')') {
                    return Err(self.syntax(&["`)`"]));
                }
                self.bump();
                Ok((pos, neg, n))
            }
            _ => Err(self.syntax(&["integer", "`(`", "`-`"])),
        }
    }

    fn base(&mut self) -> Result<XyPoly, DslError> {
        let (pos, tok) = (self.pos(), self.peek().clone());
        match tok {
            Tok::Int(n) => {
                self.bump();
                Ok(constant(self.table, BigRational::from_integer(n)))
            }
            Tok::Ident(name) => {
                self.bump();
                match name.as_str() {
                    "x" => Ok(XyPoly::from([((1, 0), Poly::one(self.table))])),
                    "y" => Ok(XyPoly::from([((0, 1), Poly::one(self.table))])),
                    _ => match self.table.lookup(&name) {
                        Some(idx) => Ok(XyPoly::from([((0, 0), Poly::var(self.table, idx))])),
                        None => Err(DslError::UndeclaredSymbol { pos, name }),
                    },
                }
            }
            Tok::Op('(') => {
                self.bump();
                self.enter()?;
                let v = self.expr()?;
                self.depth -= 1;
                if *self.peek() != Tok::Op(')') {
                    return Err(self.syntax(&["`)`", "operator"]));
                }
                self.bump();
                Ok(v)
            }
            _ => Err(self.syntax(&["number", "identifier", "`(`", "`-`"])),
        }
    }
}

/// Parses `text` into its `x, y` coefficient map.
pub fn parse_expr(text: &str, table: &Arc<SymbolTable>) -> Result<XyPoly, DslError> {
    let mut p = Parser {
        toks: tokenize(text)?,
        at: 0,
        table,
        depth: 0,
    };
    let v = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.syntax(&["operator", "end of input"]));
    }
    Ok(v)
}

/// Parses a polynomial in the parameters only.
pub fn parse_param_poly(text: &str, table: &Arc<SymbolTable>) -> Result<Poly, DslError> {
    let mut v = parse_expr(text, table)?;
    if has_xy(&v) {
        return Err(DslError::Spec(format!("`{text}` must not involve x or y")));
    }
    Ok(v.remove(&(0, 0)).unwrap_or_else(|| Poly::zero(table)))
}

//! Sparse multivariate polynomials over the rationals in parameter symbols.
//!
//! Terms are kept in a `BTreeMap` keyed by [`Monomial`], whose ordering is
//! graded lexicographic. The greatest term is the leading term and is
//! printed first.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::symbols::SymbolTable;

/// Exponent vector aligned with a [`SymbolTable`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Monomial(pub Vec<u16>);

impl Monomial {
    pub fn one(n: usize) -> Self {
        Monomial(vec![0; n])
    }

    pub fn var(n: usize, idx: usize) -> Self {
        let mut e = vec![0; n];
        e[idx] = 1;
        Monomial(e)
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&e| e as u32).sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn divides(&self, other: &Monomial) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// `other / self`; caller guarantees divisibility.
    pub fn quotient_of(&self, other: &Monomial) -> Monomial {
        Monomial(other.0.iter().zip(&self.0).map(|(a, b)| a - b).collect())
    }

    pub fn gcd(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| *a.min(b)).collect())
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum PolyError {
    #[error("polynomials use different symbol tables")]
    TableMismatch,
    #[error("division by the zero polynomial")]
    DivisionByZero,
    #[error("inexact polynomial division")]
    InexactDivision,
    #[error("no value assigned to symbol `{0}`")]
    MissingSymbol(String),
    #[error("polynomial is not univariate")]
    NotUnivariate,
}

/// Values for some or all symbols of a table, indexed like the table.
pub type Point = Vec<Option<BigRational>>;

/// A polynomial in the parameters of a [`SymbolTable`].
#[derive(Clone)]
pub struct Poly {
    table: Arc<SymbolTable>,
    terms: BTreeMap<Monomial, BigRational>,
}

impl PartialEq for Poly {
    fn eq(&self, other: &Self) -> bool {
        same_table(&self.table, &other.table) && self.terms == other.terms
    }
}

impl Eq for Poly {}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Poly({self})")
    }
}

pub(crate) fn same_table(a: &Arc<SymbolTable>, b: &Arc<SymbolTable>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

impl Poly {
    pub fn zero(table: &Arc<SymbolTable>) -> Self {
        Poly {
            table: table.clone(),
            terms: BTreeMap::new(),
        }
    }

    pub fn one(table: &Arc<SymbolTable>) -> Self {
        Self::constant(table, BigRational::one())
    }

    pub fn constant(table: &Arc<SymbolTable>, c: BigRational) -> Self {
        let mut p = Self::zero(table);
        if !c.is_zero() {
            p.terms.insert(Monomial::one(table.len()), c);
        }
        p
    }

    pub fn int(table: &Arc<SymbolTable>, n: i64) -> Self {
        Self::constant(table, int(n))
    }

    pub fn var(table: &Arc<SymbolTable>, idx: usize) -> Self {
        let mut p = Self::zero(table);
        p.terms.insert(Monomial::var(table.len(), idx), BigRational::one());
        p
    }

    /// Variable by name; panics when the name is not in the table.
    pub fn named(table: &Arc<SymbolTable>, name: &str) -> Self {
        let idx = table
            .lookup(name)
            .unwrap_or_else(|| panic!("symbol `{name}` not in table"));
        Self::var(table, idx)
    }

    pub fn from_term(table: &Arc<SymbolTable>, mono: Monomial, coeff: BigRational) -> Self {
        let mut p = Self::zero(table);
        if !coeff.is_zero() {
            p.terms.insert(mono, coeff);
        }
        p
    }

    /// Builds from terms with distinct monomials and nonzero coefficients.
    pub(crate) fn from_distinct_terms(
        table: &Arc<SymbolTable>,
        terms: impl IntoIterator<Item = (Monomial, BigRational)>,
    ) -> Self {
        Poly {
            table: table.clone(),
            terms: terms.into_iter().collect(),
        }
    }

    pub fn table(&self) -> &Arc<SymbolTable> {
        &self.table
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// The value when the polynomial has no non-constant terms.
    pub fn as_constant(&self) -> Option<BigRational> {
        match self.terms.len() {
            0 => Some(BigRational::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.as_constant().is_some()
    }

    /// Terms from the leading (greatest) term down.
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigRational)> {
        self.terms.iter().rev()
    }

    pub fn leading(&self) -> Option<(&Monomial, &BigRational)> {
        self.terms.iter().next_back()
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|m| m.degree()).max().unwrap_or(0)
    }

    pub fn degree_in(&self, idx: usize) -> u32 {
        self.terms.keys().map(|m| m.0[idx] as u32).max().unwrap_or(0)
    }

    /// Indices of the symbols that occur with a positive exponent.
    pub fn symbols(&self) -> BTreeSet<usize> {
        let mut s = BTreeSet::new();
        for m in self.terms.keys() {
            for (i, &e) in m.0.iter().enumerate() {
                if e > 0 {
                    s.insert(i);
                }
            }
        }
        s
    }

    fn check_table(&self, other: &Poly) -> Result<(), PolyError> {
        if same_table(&self.table, &other.table) {
            Ok(())
        } else {
            Err(PolyError::TableMismatch)
        }
    }

    fn add_term(&mut self, mono: Monomial, coeff: BigRational) {
        if coeff.is_zero() {
            return;
        }
        match self.terms.entry(mono) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(coeff);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += coeff;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn checked_add(&self, other: &Poly) -> Result<Poly, PolyError> {
        self.check_table(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &Poly) -> Result<Poly, PolyError> {
        self.check_table(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c.clone());
        }
        Ok(out)
    }

    pub fn checked_mul(&self, other: &Poly) -> Result<Poly, PolyError> {
        self.check_table(other)?;
        let mut out = Poly::zero(&self.table);
        if self.is_zero() || other.is_zero() {
            return Ok(out);
        }
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &BigRational) -> Poly {
        if c.is_zero() {
            return Poly::zero(&self.table);
        }
        Poly {
            table: self.table.clone(),
            terms: self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect(),
        }
    }

    pub fn mul_monomial(&self, mono: &Monomial) -> Poly {
        Poly {
            table: self.table.clone(),
            terms: self.terms.iter().map(|(m, v)| (m.mul(mono), v.clone())).collect(),
        }
    }

    pub fn pow(&self, mut e: u32) -> Poly {
        let mut base = self.clone();
        let mut acc = Poly::one(&self.table);
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Exact quotient `self / divisor`.
    ///
    /// Uses multivariate division by a single divisor in graded-lex order;
    /// the remainder is zero exactly when `divisor` divides `self`.
    pub fn exact_divide(&self, divisor: &Poly) -> Result<Poly, PolyError> {
        self.check_table(divisor)?;
        let (lm, lc) = match divisor.leading() {
            Some((m, c)) => (m.clone(), c.clone()),
            None => return Err(PolyError::DivisionByZero),
        };
        if let Some(c) = divisor.as_constant() {
            return Ok(self.scale(&c.recip()));
        }
        let mut rem = self.clone();
        let mut quot = Poly::zero(&self.table);
        while let Some((m, c)) = rem.leading() {
            if !lm.divides(m) {
                return Err(PolyError::InexactDivision);
            }
            let qm = lm.quotient_of(m);
            let qc = c / &lc;
            for (dm, dc) in &divisor.terms {
                rem.add_term(dm.mul(&qm), -(dc * &qc));
            }
            quot.add_term(qm, qc);
        }
        Ok(quot)
    }

    pub fn divides(&self, other: &Poly) -> bool {
        other.exact_divide(self).is_ok()
    }

    /// Substitutes values for the symbols that have one; others stay symbolic.
    pub fn partial_eval(&self, point: &[Option<BigRational>]) -> Poly {
        let n = self.table.len();
        let mut out = Poly::zero(&self.table);
        // powers[i][e] cache
        let mut powers: Vec<Vec<BigRational>> = (0..n)
            .map(|i| match &point.get(i).and_then(|v| v.as_ref()) {
                Some(v) => vec![BigRational::one(), (*v).clone()],
                None => Vec::new(),
            })
            .collect();
        for (m, c) in &self.terms {
            let mut coeff = c.clone();
            let mut mono = m.clone();
            for i in 0..n {
                let e = m.0[i] as usize;
                if e == 0 || powers[i].is_empty() {
                    continue;
                }
                while powers[i].len() <= e {
                    let next = powers[i].last().unwrap() * &powers[i][1];
                    powers[i].push(next);
                }
                coeff *= &powers[i][e];
                mono.0[i] = 0;
            }
            out.add_term(mono, coeff);
        }
        out
    }

    /// Exact value at a point covering every occurring symbol.
    pub fn eval(&self, point: &[Option<BigRational>]) -> Result<BigRational, PolyError> {
        for i in self.symbols() {
            if point.get(i).is_none_or(|v| v.is_none()) {
                return Err(PolyError::MissingSymbol(self.table.name(i).to_string()));
            }
        }
        Ok(self.partial_eval(point).as_constant().expect("all symbols substituted"))
    }

    /// Evaluation by symbol name.
    pub fn eval_named(&self, values: &BTreeMap<String, BigRational>) -> Result<BigRational, PolyError> {
        let point: Point = (0..self.table.len())
            .map(|i| values.get(self.table.name(i)).cloned())
            .collect();
        self.eval(&point)
    }

    pub fn eval_f64(&self, point: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| {
                let mut v = c.to_f64().unwrap_or(f64::NAN);
                for (i, &e) in m.0.iter().enumerate() {
                    if e > 0 {
                        v *= point[i].powi(e as i32);
                    }
                }
                v
            })
            .sum()
    }

    /// Sum of absolute term values at a point; the natural scale of `eval_f64`.
    pub fn abs_term_sum_f64(&self, point: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| {
                let mut v = c.to_f64().unwrap_or(f64::NAN).abs();
                for (i, &e) in m.0.iter().enumerate() {
                    if e > 0 {
                        v *= point[i].abs().powi(e as i32);
                    }
                }
                v
            })
            .sum()
    }

    /// Replaces symbol `idx` by `value` (a polynomial over the same table).
    pub fn substitute(&self, idx: usize, value: &Poly) -> Poly {
        let mut subs = BTreeMap::new();
        subs.insert(idx, value.clone());
        self.substitute_all(&subs)
    }

    pub fn substitute_all(&self, subs: &BTreeMap<usize, Poly>) -> Poly {
        if subs.is_empty() {
            return self.clone();
        }
        let mut out = Poly::zero(&self.table);
        let mut cache: BTreeMap<(usize, u16), Poly> = BTreeMap::new();
        for (m, c) in &self.terms {
            let mut mono = m.clone();
            let mut factor = Poly::constant(&self.table, c.clone());
            for (&i, value) in subs {
                let e = m.0[i];
                if e == 0 {
                    continue;
                }
                mono.0[i] = 0;
                let p = cache.entry((i, e)).or_insert_with(|| value.pow(e as u32));
                factor = &factor * p;
            }
            for (fm, fc) in factor.mul_monomial(&mono).terms {
                out.add_term(fm, fc);
            }
        }
        out
    }

    /// Positive rational `c` such that `self / c` has coprime integer coefficients.
    pub fn content(&self) -> BigRational {
        let mut num = BigInt::zero();
        let mut den = BigInt::one();
        for c in self.terms.values() {
            num = num.gcd(c.numer());
            den = den.lcm(c.denom());
        }
        if num.is_zero() {
            BigRational::one()
        } else {
            BigRational::new(num, den)
        }
    }

    /// Greatest common monomial divisor of all terms.
    pub fn monomial_content(&self) -> Monomial {
        let mut it = self.terms.keys();
        match it.next() {
            None => Monomial::one(self.table.len()),
            Some(first) => it.fold(first.clone(), |acc, m| acc.gcd(m)),
        }
    }

    pub fn divide_monomial(&self, mono: &Monomial) -> Poly {
        Poly {
            table: self.table.clone(),
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (mono.quotient_of(m), c.clone()))
                .collect(),
        }
    }

    /// Primitive part with positive leading coefficient, and the sign removed.
    pub fn normalize_sign_content(&self) -> (Poly, i8) {
        if self.is_zero() {
            return (self.clone(), 1);
        }
        let content = self.content();
        let mut p = self.scale(&content.recip());
        let sign = if p.leading().unwrap().1.is_negative() {
            p = -p;
            -1
        } else {
            1
        };
        (p, sign)
    }

    /// Removes factors that cannot vanish: rational content, powers of `PI`,
    /// and monomial factors in symbols assumed positive. The result has
    /// coprime integer coefficients and a positive leading coefficient.
    pub fn strip_known_nonzero_factors(&self) -> Poly {
        self.strip_with_sign().0
    }

    /// As [`Poly::strip_known_nonzero_factors`], also returning the sign `s`
    /// such that `self = s * (positive factor) * stripped`.
    pub fn strip_with_sign(&self) -> (Poly, i8) {
        if self.is_zero() {
            return (self.clone(), 1);
        }
        let mut mono = self.monomial_content();
        for (i, e) in mono.0.iter_mut().enumerate() {
            if !self.table.is_positive(i) {
                *e = 0;
            }
        }
        self.divide_monomial(&mono).normalize_sign_content()
    }
}

impl Neg for Poly {
    type Output = Poly;
    fn neg(mut self) -> Poly {
        for v in self.terms.values_mut() {
            *v = -v.clone();
        }
        self
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        -self.clone()
    }
}

// Operator forms panic on mismatched tables; use the `checked_*` methods
// where the tables are not known to agree.
macro_rules! binop {
    ($tr:ident, $method:ident, $checked:ident) => {
        impl $tr<&Poly> for &Poly {
            type Output = Poly;
            fn $method(self, rhs: &Poly) -> Poly {
                self.$checked(rhs).expect("symbol table mismatch")
            }
        }
        impl $tr<Poly> for Poly {
            type Output = Poly;
            fn $method(self, rhs: Poly) -> Poly {
                (&self).$checked(&rhs).expect("symbol table mismatch")
            }
        }
        impl $tr<&Poly> for Poly {
            type Output = Poly;
            fn $method(self, rhs: &Poly) -> Poly {
                (&self).$checked(rhs).expect("symbol table mismatch")
            }
        }
    };
}

binop!(Add, add, checked_add);
binop!(Sub, sub, checked_sub);
binop!(Mul, mul, checked_mul);

pub fn format_rational(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        for (k, (m, c)) in self.terms().enumerate() {
            let neg = c.is_negative();
            match (k, neg) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            let abs = c.abs();
            let mut factors = Vec::new();
            if !abs.is_one() || m.is_one() {
                factors.push(format_rational(&abs));
            }
            for (i, &e) in m.0.iter().enumerate() {
                match e {
                    0 => {}
                    1 => factors.push(self.table.name(i).to_string()),
                    _ => factors.push(format!("{}^{}", self.table.name(i), e)),
                }
            }
            f.write_str(&factors.join("*"))?;
        }
        Ok(())
    }
}

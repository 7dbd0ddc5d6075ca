//! Integer polynomials with exponents packed into one `u128`, used by the
//! fraction-free elimination when the symbol table is small.
//!
//! A key holds the total degree in its top 16 bits and one 16-bit field per
//! symbol below it, so comparing keys is graded-lex comparison.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::poly::{Monomial, Poly};
use crate::symbols::SymbolTable;

/// Symbols that fit next to the degree field.
pub(crate) const MAX_SYMBOLS: usize = 7;
const FIELD: u32 = 16;
const MASK: u128 = 0xffff;

type Key = u128;

fn shift(i: usize) -> u32 {
    FIELD * (MAX_SYMBOLS - 1 - i) as u32
}

fn pack(m: &Monomial) -> Option<Key> {
    let mut key: Key = 0;
    let mut total: u32 = 0;
    for (i, &e) in m.0.iter().enumerate() {
        key |= u128::from(e) << shift(i);
        total += u32::from(e);
    }
    (total <= MASK as u32).then(|| key | (u128::from(total) << (FIELD * MAX_SYMBOLS as u32)))
}

fn unpack(key: Key, n: usize) -> Monomial {
    Monomial((0..n).map(|i| ((key >> shift(i)) & MASK) as u16).collect())
}

fn total_degree(key: Key) -> u128 {
    key >> (FIELD * MAX_SYMBOLS as u32)
}

fn divides(a: Key, b: Key, n: usize) -> bool {
    (0..n).all(|i| (a >> shift(i)) & MASK <= (b >> shift(i)) & MASK)
}

/// Terms in strictly decreasing key order, no zero coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
struct IntPoly(Vec<(Key, BigInt)>);

impl IntPoly {
    fn one() -> Self {
        IntPoly(vec![(0, BigInt::one())])
    }

    fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    fn mul(&self, other: &IntPoly) -> Option<IntPoly> {
        if self.is_zero() || other.is_zero() {
            return Some(IntPoly::default());
        }
        let (da, db) = (total_degree(self.0[0].0), total_degree(other.0[0].0));
        if da + db > MASK {
            return None;
        }
        let mut terms = Vec::with_capacity(self.0.len() * other.0.len());
        for (ka, ca) in &self.0 {
            for (kb, cb) in &other.0 {
                terms.push((ka + kb, ca * cb));
            }
        }
        terms.sort_unstable_by(|x, y| y.0.cmp(&x.0));
        let mut out: Vec<(Key, BigInt)> = Vec::with_capacity(terms.len());
        for (k, c) in terms {
            match out.last_mut() {
                Some((lk, lc)) if *lk == k => *lc += c,
                _ => {
                    if out.last().is_some_and(|(_, c)| c.is_zero()) {
                        out.pop();
                    }
                    out.push((k, c));
                }
            }
        }
        if out.last().is_some_and(|(_, c)| c.is_zero()) {
            out.pop();
        }
        Some(IntPoly(out))
    }

    fn sub(&self, other: &IntPoly) -> IntPoly {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut a, mut b) = (self.0.iter().peekable(), other.0.iter().peekable());
        loop {
            match (a.peek(), b.peek()) {
                (Some((ka, ca)), Some((kb, cb))) => {
                    if ka > kb {
                        out.push((*ka, ca.clone()));
                        a.next();
                    } else if kb > ka {
                        out.push((*kb, -cb));
                        b.next();
                    } else {
                        let c = ca - cb;
                        if !c.is_zero() {
                            out.push((*ka, c));
                        }
                        a.next();
                        b.next();
                    }
                }
                (Some((ka, ca)), None) => {
                    out.push((*ka, ca.clone()));
                    a.next();
                }
                (None, Some((kb, cb))) => {
                    out.push((*kb, -cb));
                    b.next();
                }
                (None, None) => break,
            }
        }
        IntPoly(out)
    }

    /// Exact quotient with integer coefficients, `None` when there is none.
    fn exact_divide(&self, d: &IntPoly, n: usize) -> Option<IntPoly> {
        let (lk, lc) = d.0.first()?;
        if d.0.len() == 1 && *lk == 0 {
            let mut out = Vec::with_capacity(self.0.len());
            for (k, c) in &self.0 {
                let (q, r) = c.div_rem(lc);
                if !r.is_zero() {
                    return None;
                }
                out.push((*k, q));
            }
            return Some(IntPoly(out));
        }
        let mut rem: BTreeMap<Key, BigInt> = self.0.iter().cloned().collect();
        let mut quot = Vec::new();
        while let Some((k, c)) = rem.pop_last() {
            if !divides(*lk, k, n) {
                return None;
            }
            let (qc, r) = c.div_rem(lc);
            if !r.is_zero() {
                return None;
            }
            let qk = k - lk;
            for (dk, dc) in &d.0[1..] {
                let key = dk + qk;
                let v = rem.entry(key).or_insert_with(BigInt::zero);
                *v -= dc * &qc;
                if v.is_zero() {
                    rem.remove(&key);
                }
            }
            quot.push((qk, qc));
        }
        Some(IntPoly(quot))
    }
}

pub(crate) struct PackedElimination {
    pub adjugate: Vec<Vec<Poly>>,
    pub determinant: Poly,
    pub pivots: Vec<Poly>,
    pub swapped: bool,
}

pub(crate) enum Outcome {
    Done(PackedElimination),
    Singular,
    /// Table too large or exponents out of range; use the generic path.
    NotApplicable,
}

/// Fraction-free Gauss-Jordan on `[L*A | I]` with `L` clearing every
/// denominator, then rescaled back to `A`.
pub(crate) fn bareiss(a: &[Vec<Poly>], table: &Arc<SymbolTable>) -> Outcome {
    let n = a.len();
    let nvars = table.len();
    if nvars > MAX_SYMBOLS || n == 0 {
        return Outcome::NotApplicable;
    }
    let mut lcm = BigInt::one();
    for p in a.iter().flatten() {
        for (_, c) in p.terms() {
            lcm = lcm.lcm(c.denom());
        }
    }
    let mut rows: Vec<Vec<IntPoly>> = Vec::with_capacity(n);
    for (i, row) in a.iter().enumerate() {
        let mut r = Vec::with_capacity(2 * n);
        for p in row {
            let mut terms = Vec::with_capacity(p.num_terms());
            for (m, c) in p.terms() {
                let Some(k) = pack(m) else {
                    return Outcome::NotApplicable;
                };
                terms.push((k, (c * BigRational::from_integer(lcm.clone())).to_integer()));
            }
            terms.sort_unstable_by(|x, y| y.0.cmp(&x.0));
            r.push(IntPoly(terms));
        }
        r.extend((0..n).map(|j| if i == j { IntPoly::one() } else { IntPoly::default() }));
        rows.push(r);
    }
    let mut prev = IntPoly::one();
    let mut pivots = Vec::with_capacity(n);
    let mut negate = false;
    let mut swapped = false;
    for k in 0..n {
        if rows[k][k].is_zero() {
            let Some(i) = (k + 1..n).find(|&i| !rows[i][k].is_zero()) else {
                return Outcome::Singular;
            };
            rows.swap(k, i);
            negate = !negate;
            swapped = true;
        }
        let pivot_row = rows[k].clone();
        let pivot = pivot_row[k].clone();
        let ok = rows
            .par_iter_mut()
            .enumerate()
            .filter(|(i, _)| *i != k)
            .all(|(_, row)| {
                let factor = row[k].clone();
                for j in 0..2 * n {
                    if j == k {
                        row[j] = IntPoly::default();
                        continue;
                    }
                    let Some(mut v) = pivot.mul(&row[j]) else {
                        return false;
                    };
                    if !factor.is_zero() && !pivot_row[j].is_zero() {
                        let Some(w) = factor.mul(&pivot_row[j]) else {
                            return false;
                        };
                        v = v.sub(&w);
                    }
                    row[j] = if v.is_zero() {
                        v
                    } else {
                        match v.exact_divide(&prev, nvars) {
                            Some(q) => q,
                            None => return false,
                        }
                    };
                }
                true
            });
        if !ok {
            return Outcome::NotApplicable;
        }
        pivots.push(pivot.clone());
        prev = pivot;
    }
    // det(L A) = L^n det A and adj(L A) = L^(n-1) adj A.
    let lcm = BigRational::from_integer(lcm);
    let pow = |e: usize| (0..e).fold(BigRational::one(), |acc, _| acc * &lcm);
    let to_poly = |p: &IntPoly, scale: &BigRational| {
        Poly::from_distinct_terms(
            table,
            p.0.iter()
                .map(|(k, c)| (unpack(*k, nvars), BigRational::from_integer(c.clone()) / scale)),
        )
    };
    let sign_scale = |s: BigRational| if negate { -s } else { s };
    let adj_scale = sign_scale(pow(n - 1));
    let adjugate = rows
        .iter()
        .map(|row| row[n..].iter().map(|p| to_poly(p, &adj_scale)).collect())
        .collect();
    let determinant = to_poly(&prev, &sign_scale(pow(n)));
    let pivots = pivots
        .iter()
        .enumerate()
        .map(|(i, p)| to_poly(p, &pow(i + 1)))
        .collect();
    Outcome::Done(PackedElimination {
        adjugate,
        determinant,
        pivots,
        swapped,
    })
}

//! Exact inversion, the zeros-in-the-inverse mask and its cofactor equations.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::matrix::{write_labeled_matrix, MomentMatrix, MonomialBasis};
use crate::moments::{DensityFamily, MomentError};
use crate::packed;
use crate::poly::{Monomial, Point, Poly, PolyError};
use crate::symbols::SymbolTable;

/// Largest size handled by the memoized Laplace expansion.
pub const EXPANSION_MAX_SIZE: usize = 8;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum InverseError {
    #[error("moment matrix is singular (determinant is identically zero)")]
    Singular,
    #[error("adjugate self-check failed: M * adj != det * I at a random point")]
    SelfCheckFailed,
    #[error(transparent)]
    Moment(#[from] MomentError),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// Unordered basis-index pairs `(r, c)`, `r <= c`, whose inverse entry must vanish.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZiiMask {
    basis: MonomialBasis,
    pairs: Vec<(usize, usize)>,
}

impl ZiiMask {
    /// Pairs with `max(a1,b1) + max(a2,b2) > d`, in row-major order.
    pub fn new(basis: &MonomialBasis) -> Self {
        let d = basis.degree();
        let n = basis.len();
        let mut pairs = Vec::new();
        for r in 0..n {
            for c in r..n {
                if mask_rule(basis.get(r), basis.get(c), d) {
                    pairs.push((r, c));
                }
            }
        }
        ZiiMask {
            basis: basis.clone(),
            pairs,
        }
    }

    pub fn basis(&self) -> &MonomialBasis {
        &self.basis
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, r: usize, c: usize) -> bool {
        mask_rule(self.basis.get(r), self.basis.get(c), self.basis.degree())
    }

    /// `"x^2 | x*y"`.
    pub fn pair_label(&self, (r, c): (usize, usize)) -> String {
        format!("{} | {}", self.basis.label(r), self.basis.label(c))
    }
}

pub fn mask_rule(a: (u32, u32), b: (u32, u32), d: u32) -> bool {
    a.0.max(b.0) + a.1.max(b.1) > d
}

pub fn compute_mask(basis: &MonomialBasis) -> ZiiMask {
    ZiiMask::new(basis)
}

/// Result of fraction-free elimination on `[M | I]`.
struct Elimination {
    adjugate: Vec<Vec<Poly>>,
    determinant: Poly,
    /// Pivots of each step; leading principal minors when no row swap occurred.
    pivots: Vec<Poly>,
    swapped: bool,
}

/// Fraction-free Gauss-Jordan on `[A | I]`.
///
/// After step `k` every row except `k` is updated by
/// `a_ij <- (p_k a_ij - a_ik a_kj) / p_{k-1}`, the division being exact.
/// The final matrix is `[p_n I | p_n A^{-1}]`, so the right half is the
/// adjugate up to the sign of the row permutation.
fn bareiss(a: &[Vec<Poly>], table: &Arc<SymbolTable>) -> Result<Elimination, InverseError> {
    match packed::bareiss(a, table) {
        packed::Outcome::Done(e) => Ok(Elimination {
            adjugate: e.adjugate,
            determinant: e.determinant,
            pivots: e.pivots,
            swapped: e.swapped,
        }),
        packed::Outcome::Singular => Err(InverseError::Singular),
        packed::Outcome::NotApplicable => bareiss_generic(a, table),
    }
}

/// Same elimination over rational coefficients, for any table.
fn bareiss_generic(a: &[Vec<Poly>], table: &Arc<SymbolTable>) -> Result<Elimination, InverseError> {
    let n = a.len();
    let zero = Poly::zero(table);
    let mut rows: Vec<Vec<Poly>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { Poly::one(table) } else { zero.clone() }));
            r
        })
        .collect();
    let mut prev = Poly::one(table);
    let mut pivots = Vec::with_capacity(n);
    let mut sign: i64 = 1;
    let mut swapped = false;
    for k in 0..n {
        if rows[k][k].is_zero() {
            let Some(i) = (k + 1..n).find(|&i| !rows[i][k].is_zero()) else {
                return Err(InverseError::Singular);
            };
            rows.swap(k, i);
            sign = -sign;
            swapped = true;
        }
        let pivot_row = rows[k].clone();
        let pivot = pivot_row[k].clone();
        rows.par_iter_mut()
            .enumerate()
            .filter(|(i, _)| *i != k)
            .try_for_each(|(_, row)| -> Result<(), PolyError> {
                let factor = row[k].clone();
                for j in 0..2 * n {
                    if j == k {
                        row[j] = Poly::zero(table);
                        continue;
                    }
                    let mut v = &pivot * &row[j];
                    if !factor.is_zero() && !pivot_row[j].is_zero() {
                        v = v - &factor * &pivot_row[j];
                    }
                    row[j] = if v.is_zero() { v } else { v.exact_divide(&prev)? };
                }
                Ok(())
            })?;
        pivots.push(pivot.clone());
        prev = pivot;
    }
    let s = BigRational::from_integer(BigInt::from(sign));
    let adjugate = rows
        .into_iter()
        .map(|row| row[n..].iter().map(|p| p.scale(&s)).collect())
        .collect();
    Ok(Elimination {
        adjugate,
        determinant: prev.scale(&s),
        pivots,
        swapped,
    })
}

/// Determinant by fraction-free elimination.
pub fn determinant(a: &[Vec<Poly>], table: &Arc<SymbolTable>) -> Result<Poly, InverseError> {
    if a.is_empty() {
        return Ok(Poly::one(table));
    }
    match bareiss(a, table) {
        Ok(e) => Ok(e.determinant),
        Err(InverseError::Singular) => Ok(Poly::zero(table)),
        Err(e) => Err(e),
    }
}

fn minor_matrix(a: &[Vec<Poly>], r: usize, c: usize) -> Vec<Vec<Poly>> {
    a.iter()
        .enumerate()
        .filter(|(i, _)| *i != r)
        .map(|(_, row)| {
            row.iter()
                .enumerate()
                .filter(|(j, _)| *j != c)
                .map(|(_, p)| p.clone())
                .collect()
        })
        .collect()
}

fn cofactor_sign(r: usize, c: usize) -> BigRational {
    if (r + c).is_multiple_of(2) {
        BigRational::one()
    } else {
        -BigRational::one()
    }
}

/// Signed `(n-1)`-minor `(-1)^(r+c) det(M without row r, column c)`.
pub fn cofactor(m: &MomentMatrix, r: usize, c: usize) -> Result<Poly, InverseError> {
    let minor = minor_matrix(m.entries(), r, c);
    Ok(determinant(&minor, m.table())?.scale(&cofactor_sign(r, c)))
}

/// Determinant by Laplace expansion along rows, memoized on column subsets.
/// Independent of the elimination path; limited to small sizes.
pub fn determinant_by_expansion(a: &[Vec<Poly>], table: &Arc<SymbolTable>) -> Poly {
    let n = a.len();
    assert!(n <= 16, "expansion is exponential in the size");
    let mut memo: HashMap<u32, Poly> = HashMap::new();
    expand(a, table, 0, (1u32 << n) - 1, &mut memo)
}

fn expand(a: &[Vec<Poly>], table: &Arc<SymbolTable>, row: usize, cols: u32, memo: &mut HashMap<u32, Poly>) -> Poly {
    if cols == 0 {
        return Poly::one(table);
    }
    if let Some(p) = memo.get(&cols) {
        return p.clone();
    }
    let mut acc = Poly::zero(table);
    let mut position = 0;
    for j in 0..a.len() {
        if cols & (1 << j) == 0 {
            continue;
        }
        if !a[row][j].is_zero() {
            let sub = expand(a, table, row + 1, cols & !(1 << j), memo);
            let term = &a[row][j] * &sub;
            acc = if position % 2 == 0 { acc + term } else { acc - term };
        }
        position += 1;
    }
    memo.insert(cols, acc.clone());
    acc
}

/// Cofactor via [`determinant_by_expansion`]; `None` above [`EXPANSION_MAX_SIZE`].
pub fn cofactor_by_expansion(m: &MomentMatrix, r: usize, c: usize) -> Option<Poly> {
    if m.size() > EXPANSION_MAX_SIZE {
        return None;
    }
    let minor = minor_matrix(m.entries(), r, c);
    Some(determinant_by_expansion(&minor, m.table()).scale(&cofactor_sign(r, c)))
}

/// `M^{-1} = adjugate / determinant`, never formed as quotients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactInverse {
    basis: MonomialBasis,
    table: Arc<SymbolTable>,
    adjugate: Vec<Vec<Poly>>,
    determinant: Poly,
}

impl ExactInverse {
    pub fn basis(&self) -> &MonomialBasis {
        &self.basis
    }

    pub fn adjugate(&self) -> &[Vec<Poly>] {
        &self.adjugate
    }

    pub fn determinant(&self) -> &Poly {
        &self.determinant
    }

    /// Entry of the inverse when the determinant is a nonzero constant.
    pub fn constant_entry(&self, r: usize, c: usize) -> Option<BigRational> {
        let det = self.determinant.as_constant()?;
        Some(self.adjugate[r][c].as_constant()? / det)
    }

    /// Exact inverse entries at a full parameter point; `None` if singular there.
    pub fn inverse_at(&self, point: &[Option<BigRational>]) -> Result<Option<Vec<Vec<BigRational>>>, PolyError> {
        let det = self.determinant.eval(point)?;
        if det.is_zero() {
            return Ok(None);
        }
        let mut out = Vec::with_capacity(self.adjugate.len());
        for row in &self.adjugate {
            let mut r = Vec::with_capacity(row.len());
            for p in row {
                r.push(p.eval(point)? / &det);
            }
            out.push(r);
        }
        Ok(Some(out))
    }
}

impl fmt::Display for ExactInverse {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "determinant: {}", self.determinant)?;
        writeln!(f, "adjugate:")?;
        write_labeled_matrix(f, &self.basis, &self.adjugate)
    }
}

/// Exact adjugate and determinant of `m`.
pub fn invert_exact(m: &MomentMatrix) -> Result<ExactInverse, InverseError> {
    let prepared = Prepared::new(m)?;
    Ok(prepared.restore())
}

/// Elimination on the matrix with its common power of `PI` divided out.
struct Prepared {
    original: MomentMatrix,
    scaled: MomentMatrix,
    pi_power: u16,
    elim: Elimination,
}

impl Prepared {
    fn new(m: &MomentMatrix) -> Result<Self, InverseError> {
        let table = m.table();
        let pi = table.pi_index();
        let pi_power = m
            .entries()
            .iter()
            .flatten()
            .filter(|p| !p.is_zero())
            .map(|p| p.monomial_content().0[pi])
            .min()
            .unwrap_or(0);
        let mut mono = Monomial::one(table.len());
        mono.0[pi] = pi_power;
        let scaled = if pi_power == 0 {
            m.clone()
        } else {
            m.map_entries(|p| p.divide_monomial(&mono))
        };
        let elim = if scaled.size() == 0 {
            Elimination {
                adjugate: vec![],
                determinant: Poly::one(table),
                pivots: vec![],
                swapped: false,
            }
        } else {
            bareiss(scaled.entries(), table)?
        };
        self_check(&scaled, &elim)?;
        Ok(Prepared {
            original: m.clone(),
            scaled,
            pi_power,
            elim,
        })
    }

    fn restore(&self) -> ExactInverse {
        let table = self.original.table();
        let n = self.original.size() as u16;
        let power = |e: u16| {
            let mut mono = Monomial::one(table.len());
            mono.0[table.pi_index()] = e;
            mono
        };
        let adj_mono = power(self.pi_power * n.saturating_sub(1));
        let det_mono = power(self.pi_power * n);
        ExactInverse {
            basis: self.original.basis().clone(),
            table: table.clone(),
            adjugate: self
                .elim
                .adjugate
                .iter()
                .map(|row| row.iter().map(|p| p.mul_monomial(&adj_mono)).collect())
                .collect(),
            determinant: self.elim.determinant.mul_monomial(&det_mono),
        }
    }

    /// Nonconstant primitive factors known to be positive wherever the
    /// moment matrix is positive definite: diagonal entries, 2x2 principal
    /// minors and, without row swaps, the leading principal minors.
    fn positive_factors(&self) -> Vec<(Poly, i8)> {
        let a = self.scaled.entries();
        let n = a.len();
        let mut candidates: Vec<Poly> = Vec::new();
        for i in 0..n {
            candidates.push(a[i][i].clone());
            for j in i + 1..n {
                candidates.push(&a[i][i] * &a[j][j] - &a[i][j] * &a[i][j]);
            }
        }
        if !self.elim.swapped {
            candidates.extend(self.elim.pivots.iter().cloned());
        }
        // Principal blocks of the connected components of the sparsity graph.
        let blocks = components(a);
        if blocks.len() > 1 {
            for block in blocks.iter().filter(|b| b.len() > 1) {
                let sub: Vec<Vec<Poly>> = block
                    .iter()
                    .map(|&i| block.iter().map(|&j| a[i][j].clone()).collect())
                    .collect();
                if let Ok(det) = determinant(&sub, self.scaled.table()) {
                    candidates.push(det);
                }
            }
        }
        let mut out: Vec<(Poly, i8)> = Vec::new();
        for c in candidates {
            if c.is_zero() {
                continue;
            }
            let (p, s) = c.strip_with_sign();
            if p.is_constant() || out.iter().any(|(q, _)| *q == p) {
                continue;
            }
            out.push((p, s));
        }
        // Prefer removing large factors first so their pieces are not split up.
        out.sort_by_key(|(p, _)| std::cmp::Reverse(p.total_degree()));
        out
    }
}

/// Index sets of the connected components of the nonzero pattern.
fn components(a: &[Vec<Poly>]) -> Vec<Vec<usize>> {
    let n = a.len();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut stack = vec![start];
        let mut comp = Vec::new();
        while let Some(i) = stack.pop() {
            comp.push(i);
            for j in 0..n {
                if !seen[j] && !a[i][j].is_zero() {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// `M * adj == det * I` at one pseudo-random rational point.
fn self_check(m: &MomentMatrix, e: &Elimination) -> Result<(), InverseError> {
    let n = m.size();
    if n == 0 {
        return Ok(());
    }
    let table = m.table();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5a11_c0fa);
    let point: Point = (0..table.len())
        .map(|_| {
            let num: i64 = rng.gen_range(-40..=40);
            let den: i64 = rng.gen_range(1..=17);
            Some(BigRational::new(num.into(), den.into()))
        })
        .collect();
    let ev = |p: &Poly| p.eval(&point);
    let mv: Vec<Vec<BigRational>> = m
        .entries()
        .iter()
        .map(|row| row.iter().map(ev).collect::<Result<_, _>>())
        .collect::<Result<_, _>>()?;
    let av: Vec<Vec<BigRational>> = e
        .adjugate
        .iter()
        .map(|row| row.iter().map(ev).collect::<Result<_, _>>())
        .collect::<Result<_, _>>()?;
    let det = ev(&e.determinant)?;
    for i in 0..n {
        for j in 0..n {
            let mut s = BigRational::zero();
            for k in 0..n {
                s += &mv[i][k] * &av[k][j];
            }
            let expect = if i == j { det.clone() } else { BigRational::zero() };
            if s != expect {
                return Err(InverseError::SelfCheckFailed);
            }
        }
    }
    Ok(())
}

/// One normalized ZII equation `equation = 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZiiEquation {
    /// Mask pairs whose cofactor normalizes to this equation.
    pub pairs: Vec<(usize, usize)>,
    pub equation: Poly,
    /// Cofactor of the first pair, before any normalization.
    pub raw: Poly,
    /// `raw = sign * (factor positive on the PD region) * equation`.
    pub sign: i8,
}

/// Stripped cofactor equations of the mask at one degree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquationSystem {
    mask: ZiiMask,
    table: Arc<SymbolTable>,
    equations: Vec<ZiiEquation>,
    vanishing: Vec<(usize, usize)>,
    determinant: Poly,
}

impl EquationSystem {
    pub fn degree(&self) -> u32 {
        self.mask.basis().degree()
    }

    pub fn mask(&self) -> &ZiiMask {
        &self.mask
    }

    pub fn table(&self) -> &Arc<SymbolTable> {
        &self.table
    }

    pub fn equations(&self) -> &[ZiiEquation] {
        &self.equations
    }

    /// Mask pairs whose cofactor is identically zero.
    pub fn vanishing(&self) -> &[(usize, usize)] {
        &self.vanishing
    }

    /// Determinant with known nonzero factors stripped; the equations are
    /// only meaningful where it does not vanish.
    pub fn determinant(&self) -> &Poly {
        &self.determinant
    }

    pub fn polys(&self) -> Vec<Poly> {
        self.equations.iter().map(|e| e.equation.clone()).collect()
    }

    /// True when some equation is a nonzero constant, so no parameter value satisfies the system.
    pub fn is_inconsistent(&self) -> bool {
        self.equations.iter().any(|e| e.equation.is_constant())
    }
}

impl fmt::Display for EquationSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "degree: {}", self.degree())?;
        writeln!(f, "mask pairs: {}", self.mask.len())?;
        writeln!(f, "equations: {}", self.equations.len())?;
        for e in &self.equations {
            let labels: Vec<String> = e.pairs.iter().map(|&p| self.mask.pair_label(p)).collect();
            writeln!(f, "  {} = 0    [{}]", e.equation, labels.join("; "))?;
        }
        if !self.vanishing.is_empty() {
            let labels: Vec<String> = self.vanishing.iter().map(|&p| self.mask.pair_label(p)).collect();
            writeln!(f, "identically zero: {}", labels.join("; "))?;
        }
        Ok(())
    }
}

fn divide_out(mut eq: Poly, mut sign: i8, factors: &[(Poly, i8)]) -> (Poly, i8) {
    for (f, s) in factors {
        loop {
            if eq.is_constant() || f.total_degree() > eq.total_degree() {
                break;
            }
            let fits = (0..eq.table().len()).all(|i| f.degree_in(i) <= eq.degree_in(i));
            if !fits {
                break;
            }
            match eq.exact_divide(f) {
                Ok(q) => {
                    eq = q;
                    sign *= s;
                }
                Err(_) => break,
            }
        }
    }
    let (eq, s) = eq.strip_with_sign();
    (eq, sign * s)
}

/// ZII equation system of `family` at degree `d`.
pub fn zii_equations(family: &DensityFamily, d: u32) -> Result<EquationSystem, InverseError> {
    let m = MomentMatrix::build(family, d)?;
    equations_from_matrix(&m)
}

pub fn equations_from_matrix(m: &MomentMatrix) -> Result<EquationSystem, InverseError> {
    let mask = ZiiMask::new(m.basis());
    let prepared = Prepared::new(m)?;
    let restored = prepared.restore();
    let factors = prepared.positive_factors();
    let normalized: Vec<Option<ZiiEquation>> = mask
        .pairs()
        .par_iter()
        .map(|&(r, c)| {
            // cofactor(r, c) is adj[c][r]
            let scaled = &prepared.elim.adjugate[c][r];
            if scaled.is_zero() {
                return None;
            }
            let (p, s) = scaled.strip_with_sign();
            let (equation, sign) = divide_out(p, s, &factors);
            Some(ZiiEquation {
                pairs: vec![(r, c)],
                equation,
                raw: restored.adjugate[c][r].clone(),
                sign,
            })
        })
        .collect();
    let mut equations: Vec<ZiiEquation> = Vec::new();
    let mut vanishing = Vec::new();
    for (pair, eq) in mask.pairs().iter().zip(normalized) {
        match eq {
            None => vanishing.push(*pair),
            Some(eq) => match equations.iter_mut().find(|e| e.equation == eq.equation) {
                Some(existing) => existing.pairs.push(*pair),
                None => equations.push(eq),
            },
        }
    }
    Ok(EquationSystem {
        mask,
        table: m.table().clone(),
        equations,
        vanishing,
        determinant: prepared.elim.determinant.strip_known_nonzero_factors(),
    })
}

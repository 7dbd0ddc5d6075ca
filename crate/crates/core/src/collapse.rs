//! Solution analysis of ZII systems and the search for the collapse order.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::inverse::{zii_equations, EquationSystem, InverseError};
use crate::moments::{
    solve_linear, BaseMeasure, DensityFamily, FamilyKind, MomentError, NamedFamily, ParamConstraint, Relation,
};
use crate::poly::{format_rational, Point, Poly, PolyError};
use crate::symbols::{Assumption, SymbolTable};
use crate::univariate::{RealRoot, UniPoly};

/// Largest degree accepted by [`collapse_order`].
pub const MAX_COLLAPSE_DEGREE: u32 = 14;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum CollapseError {
    #[error("polynomial is not univariate")]
    NotUnivariate,
    #[error("maximum degree {0} exceeds {MAX_COLLAPSE_DEGREE}")]
    DegreeTooLarge(u32),
    #[error(transparent)]
    Inverse(#[from] InverseError),
    #[error(transparent)]
    Moment(#[from] MomentError),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// Tuning of the deterministic sampling strategy.
#[derive(Debug, Clone)]
pub struct AnalysisOptions {
    /// Grid points per sampled symbol.
    pub grid_points: usize,
    /// Cap on the total number of grid points; per-symbol counts shrink to fit.
    pub max_grid: usize,
    /// Witnesses kept in the report (all found ones are still checked).
    pub max_witnesses: usize,
    /// Isolation width for irrational roots.
    pub root_width: BigRational,
    /// Relative residual accepted at approximate points.
    pub residual_tol: f64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            grid_points: 21,
            max_grid: 20_000,
            max_witnesses: 8,
            root_width: BigRational::new(BigInt::one(), BigInt::from(10u64.pow(12))),
            residual_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnalysisStatus {
    /// Univariate system solved exactly; the root list is complete.
    ExactRoots,
    /// Multivariate system probed on a grid; emptiness is evidence only.
    NumericSample,
    Undecided,
}

impl AnalysisStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            AnalysisStatus::ExactRoots => "exact-roots",
            AnalysisStatus::NumericSample => "numeric-sample",
            AnalysisStatus::Undecided => "undecided",
        }
    }
}

/// A parameter point satisfying the system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub point: Point,
    /// Some coordinate is a rational approximation of an irrational root.
    pub approximate: bool,
}

impl Witness {
    pub fn format(&self, table: &SymbolTable) -> String {
        let parts: Vec<String> = table
            .parameters()
            .filter_map(|(i, s)| {
                self.point[i].as_ref().map(|v| {
                    if self.approximate && !v.is_integer() {
                        format!("{}~{}", s.name, format_f64(v.to_f64().unwrap_or(f64::NAN)))
                    } else {
                        format!("{}={}", s.name, format_rational(v))
                    }
                })
            })
            .collect();
        if parts.is_empty() {
            "(no parameters)".to_string()
        } else {
            parts.join(", ")
        }
    }
}

fn format_f64(v: f64) -> String {
    format!("{v:.9}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionAnalysis {
    pub status: AnalysisStatus,
    /// `symbol = expression` in elimination order, fully substituted.
    pub eliminations: Vec<(usize, Poly)>,
    /// Equations left after elimination.
    pub reduced: Vec<Poly>,
    /// Univariate path: the solved symbol and its admissible real roots.
    pub roots: Option<(usize, Vec<RealRoot>)>,
    /// Kept witnesses, exact ones first.
    pub witnesses: Vec<Witness>,
    pub exact_witness_count: usize,
    pub approximate_witness_count: usize,
    /// Grid points evaluated (zero on the exact path).
    pub samples: usize,
    /// Smallest relative residual of the unsolved equations over sampled candidates.
    pub min_residual: Option<f64>,
    /// Every witness found, for verdicts (not all are kept in `witnesses`).
    all_witnesses: Vec<Witness>,
    pub notes: Vec<String>,
}

impl SolutionAnalysis {
    pub fn is_nonempty(&self) -> bool {
        self.exact_witness_count + self.approximate_witness_count > 0
    }

    /// Emptiness established exactly rather than by sampling.
    pub fn is_exactly_empty(&self) -> bool {
        !self.is_nonempty() && self.status == AnalysisStatus::ExactRoots
    }

    pub fn all_witnesses(&self) -> &[Witness] {
        &self.all_witnesses
    }
}

fn rational_height(v: &BigRational) -> BigInt {
    v.numer().abs().max(v.denom().clone())
}

fn point_key(p: &Point) -> (BigInt, Vec<Option<BigRational>>) {
    let h = p
        .iter()
        .flatten()
        .map(rational_height)
        .max()
        .unwrap_or_else(BigInt::zero);
    (h, p.clone())
}

/// Grid values for one symbol: `lo + (hi-lo) k/(n-1)`, filtered by the assumption.
fn grid_values(table: &SymbolTable, idx: usize, n: usize) -> Vec<BigRational> {
    let sym = table.get(idx);
    let (lo, hi) = sym.bounds.clone().unwrap_or_else(|| match sym.assumption {
        Assumption::None => (
            BigRational::from_integer((-10).into()),
            BigRational::from_integer(10.into()),
        ),
        _ => (BigRational::zero(), BigRational::from_integer(10.into())),
    });
    if sym.assumption == Assumption::NonnegInteger {
        let mut k = lo.ceil().to_integer().max(BigInt::zero());
        let mut out = Vec::new();
        while BigRational::from_integer(k.clone()) <= hi {
            out.push(BigRational::from_integer(k.clone()));
            k += 1;
        }
        return out;
    }
    if lo == hi || n < 2 {
        return vec![lo].into_iter().filter(|v| sym.assumption.admits(v)).collect();
    }
    let steps = BigRational::from_integer(BigInt::from(n - 1));
    (0..n)
        .map(|k| &lo + (&hi - &lo) * BigRational::from_integer(BigInt::from(k)) / &steps)
        .filter(|v| sym.assumption.admits(v))
        .collect()
}

fn in_bounds(table: &SymbolTable, idx: usize, v: &BigRational) -> bool {
    let sym = table.get(idx);
    sym.assumption.admits(v) && sym.bounds.as_ref().is_none_or(|(lo, hi)| lo <= v && v <= hi)
}

fn root_admissible(table: &SymbolTable, idx: usize, root: &RealRoot) -> bool {
    let sym = table.get(idx);
    match root {
        RealRoot::Rational(r) => in_bounds(table, idx, r),
        RealRoot::Isolated { lo, hi } => {
            if sym.assumption == Assumption::NonnegInteger {
                return false;
            }
            if sym.assumption == Assumption::Positive && !lo.is_positive() && !hi.is_positive() {
                return false;
            }
            match &sym.bounds {
                Some((blo, bhi)) => hi >= blo && lo <= bhi,
                None => sym.assumption != Assumption::Positive || hi.is_positive(),
            }
        }
    }
}

/// Admissible real roots of a univariate polynomial, honoring the symbol's
/// assumption and bounds and the inequality constraints that mention only it.
pub fn solve_univariate(
    p: &Poly,
    constraints: &[ParamConstraint],
    width: &BigRational,
) -> Result<(usize, Vec<RealRoot>), CollapseError> {
    let syms = p.symbols();
    if syms.len() != 1 {
        return Err(CollapseError::NotUnivariate);
    }
    let var = *syms.iter().next().unwrap();
    let uni = UniPoly::from_poly(p, var).map_err(|_| CollapseError::NotUnivariate)?;
    let table = p.table().clone();
    let roots = uni
        .real_roots(width)
        .into_iter()
        .filter(|r| root_admissible(&table, var, r))
        .filter(|r| {
            constraints.iter().all(|c| {
                let only_var = c.lhs.symbols().iter().all(|&s| s == var);
                if !only_var {
                    return true;
                }
                let mut point: Point = vec![None; table.len()];
                point[var] = Some(r.approx());
                match r {
                    RealRoot::Rational(_) => c.holds_at(&point).unwrap_or(true),
                    RealRoot::Isolated { .. } => {
                        let v = c.lhs.eval_f64(&f64_point(&point));
                        match c.relation {
                            Relation::Eq => v.abs() <= 1e-9 * c.lhs.abs_term_sum_f64(&f64_point(&point)).max(1.0),
                            Relation::Gt | Relation::Ge => v >= -1e-12,
                        }
                    }
                }
            })
        })
        .collect();
    Ok((var, roots))
}

fn f64_point(point: &[Option<BigRational>]) -> Vec<f64> {
    point
        .iter()
        .map(|v| v.as_ref().and_then(|r| r.to_f64()).unwrap_or(std::f64::consts::PI))
        .collect()
}

/// `|p(x)| / sum |term(x)|` evaluated exactly at a rational point.
fn exact_relative_residual(p: &Poly, point: &[Option<BigRational>]) -> Option<f64> {
    let mut value = BigRational::zero();
    let mut scale = BigRational::zero();
    for (m, c) in p.terms() {
        let term = Poly::from_term(p.table(), m.clone(), c.clone()).eval(point).ok()?;
        scale += term.abs();
        value += term;
    }
    if scale.is_zero() {
        return Some(0.0);
    }
    (value.abs() / scale).to_f64()
}

/// Inputs shared by the analysis stages.
struct Problem<'a> {
    table: Arc<SymbolTable>,
    original: Vec<Poly>,
    inequalities: Vec<ParamConstraint>,
    nonzero: Vec<Poly>,
    opts: &'a AnalysisOptions,
}

impl Problem<'_> {
    /// Fills eliminated symbols and validates a candidate point.
    fn complete(&self, mut point: Point, approximate: bool, elims: &[(usize, Poly)]) -> Option<Witness> {
        for (idx, expr) in elims {
            point[*idx] = Some(expr.eval(&point).ok()?);
            if !in_bounds(&self.table, *idx, point[*idx].as_ref().unwrap()) {
                return None;
            }
        }
        if approximate {
            let fp = f64_point(&point);
            for p in &self.original {
                if exact_relative_residual(p, &point)? >= self.opts.residual_tol {
                    return None;
                }
            }
            for c in &self.inequalities {
                if c.lhs.eval_f64(&fp) < -1e-12 * c.lhs.abs_term_sum_f64(&fp) {
                    return None;
                }
            }
            // Indistinguishable from a singular point at this precision.
            for p in &self.nonzero {
                if exact_relative_residual(p, &point)? < self.opts.residual_tol {
                    return None;
                }
            }
        } else {
            for p in &self.original {
                if !p.eval(&point).ok()?.is_zero() {
                    return None;
                }
            }
            for c in &self.inequalities {
                if !c.holds_at(&point).ok()? {
                    return None;
                }
            }
            for p in &self.nonzero {
                if p.eval(&point).ok()?.is_zero() {
                    return None;
                }
            }
        }
        Some(Witness { point, approximate })
    }
}

/// Analyzes `equations = 0` together with the family constraints.
///
/// Symbols occurring linearly with a constant coefficient are eliminated
/// first (in symbol-table order). One remaining symbol goes to the exact
/// univariate solver; more are sampled on a deterministic grid, solving
/// a triangular subset of the equations for one fresh symbol each and
/// checking the rest. `nonzero` lists polynomials that must not vanish at
/// a witness. `prior` are eliminations already in force.
pub fn analyze_system(
    equations: &[Poly],
    constraints: &[ParamConstraint],
    nonzero: &[Poly],
    prior: &[(usize, Poly)],
    opts: &AnalysisOptions,
) -> Result<SolutionAnalysis, CollapseError> {
    let table = match equations
        .first()
        .or(nonzero.first())
        .or(constraints.first().map(|c| &c.lhs))
    {
        Some(p) => p.table().clone(),
        None => match prior.first() {
            Some((_, p)) => p.table().clone(),
            None => SymbolTable::empty(),
        },
    };
    analyze_with_table(&table, equations, constraints, nonzero, prior, opts)
}

pub fn analyze_with_table(
    table: &Arc<SymbolTable>,
    equations: &[Poly],
    constraints: &[ParamConstraint],
    nonzero: &[Poly],
    prior: &[(usize, Poly)],
    opts: &AnalysisOptions,
) -> Result<SolutionAnalysis, CollapseError> {
    let mut pool: Vec<Poly> = equations.iter().filter(|p| !p.is_zero()).cloned().collect();
    pool.extend(
        constraints
            .iter()
            .filter(|c| c.relation == Relation::Eq && !c.lhs.is_zero())
            .map(|c| c.lhs.clone()),
    );
    let problem = Problem {
        table: table.clone(),
        original: pool.clone(),
        inequalities: constraints
            .iter()
            .filter(|c| c.relation != Relation::Eq)
            .cloned()
            .collect(),
        nonzero: nonzero.iter().filter(|p| !p.is_zero()).cloned().collect(),
        opts,
    };
    let eliminated_before: BTreeSet<usize> = prior.iter().map(|(i, _)| *i).collect();
    let mut elims: Vec<(usize, Poly)> = prior.to_vec();
    let mut notes = Vec::new();

    // Linear eliminations.
    'outer: loop {
        for (idx, _) in table.parameters() {
            if elims.iter().any(|(i, _)| *i == idx) {
                continue;
            }
            for k in 0..pool.len() {
                if let Ok(expr) = solve_linear(&pool[k], idx) {
                    pool.remove(k);
                    let sub = BTreeMap::from([(idx, expr.clone())]);
                    pool = pool
                        .iter()
                        .map(|p| p.substitute_all(&sub))
                        .filter(|p| !p.is_zero())
                        .collect();
                    for (_, e) in elims.iter_mut() {
                        *e = e.substitute_all(&sub);
                    }
                    elims.push((idx, expr));
                    continue 'outer;
                }
            }
        }
        break;
    }
    let new_elims: Vec<(usize, Poly)> = elims
        .iter()
        .filter(|(i, _)| !eliminated_before.contains(i))
        .cloned()
        .collect();
    // Eliminations are applied in reverse when completing points.
    let completion: Vec<(usize, Poly)> = elims.iter().rev().cloned().collect();

    let mut analysis = SolutionAnalysis {
        status: AnalysisStatus::NumericSample,
        eliminations: new_elims,
        reduced: pool.clone(),
        roots: None,
        witnesses: Vec::new(),
        exact_witness_count: 0,
        approximate_witness_count: 0,
        samples: 0,
        min_residual: None,
        all_witnesses: Vec::new(),
        notes: Vec::new(),
    };

    if pool.iter().any(|p| p.is_constant()) {
        analysis.status = AnalysisStatus::ExactRoots;
        notes.push("system contains a nonzero constant equation: no solutions".to_string());
        analysis.notes = notes;
        return Ok(analysis);
    }

    let free: Vec<usize> = table
        .parameters()
        .map(|(i, _)| i)
        .filter(|i| !elims.iter().any(|(j, _)| j == i))
        .collect();

    let mut found: Vec<Witness> = Vec::new();
    if free.len() == 1 && !pool.is_empty() {
        // Exact univariate path on the gcd of all remaining equations.
        let var = free[0];
        let mut g = UniPoly::from_poly(&pool[0], var).map_err(|_| CollapseError::NotUnivariate)?;
        for p in &pool[1..] {
            g = g.gcd(&UniPoly::from_poly(p, var).map_err(|_| CollapseError::NotUnivariate)?);
        }
        let gpoly = uni_to_poly(&g, table, var);
        analysis.status = AnalysisStatus::ExactRoots;
        let roots = if gpoly.is_constant() {
            Vec::new()
        } else {
            solve_univariate(&gpoly, &problem.inequalities, &opts.root_width)?.1
        };
        for r in &roots {
            let mut point: Point = vec![None; table.len()];
            point[var] = Some(r.approx());
            if let Some(w) = problem.complete(point, !r.is_rational(), &completion) {
                found.push(w);
            }
        }
        analysis.roots = Some((var, roots));
    } else if free.is_empty() {
        analysis.status = AnalysisStatus::ExactRoots;
        let point: Point = vec![None; table.len()];
        if let Some(w) = problem.complete(point, false, &completion) {
            found.push(w);
        }
    } else {
        sample(
            &problem,
            &pool,
            &free,
            &completion,
            &mut analysis,
            &mut found,
            &mut notes,
        );
    }

    found.sort_by(|a, b| {
        a.approximate
            .cmp(&b.approximate)
            .then_with(|| point_key(&a.point).cmp(&point_key(&b.point)))
    });
    found.dedup();
    analysis.exact_witness_count = found.iter().filter(|w| !w.approximate).count();
    analysis.approximate_witness_count = found.len() - analysis.exact_witness_count;
    analysis.witnesses = found.iter().take(opts.max_witnesses).cloned().collect();
    analysis.all_witnesses = found;
    analysis.notes = notes;
    Ok(analysis)
}

fn uni_to_poly(u: &UniPoly, table: &Arc<SymbolTable>, var: usize) -> Poly {
    let x = Poly::var(table, var);
    u.coeffs()
        .iter()
        .enumerate()
        .fold(Poly::zero(table), |acc, (k, c)| acc + x.pow(k as u32).scale(c))
}

/// One step of the triangular plan.
enum Step {
    Solve { eq: Poly, var: usize },
    Check(Poly),
}

fn sample(
    problem: &Problem<'_>,
    pool: &[Poly],
    free: &[usize],
    completion: &[(usize, Poly)],
    analysis: &mut SolutionAnalysis,
    found: &mut Vec<Witness>,
    notes: &mut Vec<String>,
) {
    let table = &problem.table;
    let opts = problem.opts;
    let mut ordered: Vec<Poly> = pool.to_vec();
    ordered.sort_by_key(|p| (p.symbols().len(), p.total_degree()));
    let mut seen: BTreeSet<usize> = BTreeSet::new();
    let mut solved: BTreeSet<usize> = BTreeSet::new();
    let mut plan = Vec::new();
    for eq in ordered {
        let syms = eq.symbols();
        let fresh: Vec<usize> = syms.iter().copied().filter(|s| !seen.contains(s)).collect();
        seen.extend(syms.iter().copied());
        match fresh
            .iter()
            .copied()
            .min_by(|&a, &b| eq.degree_in(a).cmp(&eq.degree_in(b)).then(b.cmp(&a)))
        {
            Some(var) => {
                solved.insert(var);
                plan.push(Step::Solve { eq, var });
            }
            None => plan.push(Step::Check(eq)),
        }
    }
    let grid_syms: Vec<usize> = free.iter().copied().filter(|s| !solved.contains(s)).collect();
    let mut per = opts.grid_points.max(2);
    while per > 2
        && per
            .checked_pow(grid_syms.len() as u32)
            .is_none_or(|t| t > opts.max_grid)
    {
        per -= 1;
    }
    let axes: Vec<Vec<BigRational>> = grid_syms.iter().map(|&s| grid_values(table, s, per)).collect();
    let total: usize = axes.iter().map(|a| a.len()).product();
    let mut min_residual: Option<f64> = None;
    let mut candidates = 0usize;

    // Row-major over the axes, last symbol fastest.
    for flat in 0..total {
        let mut rem = flat;
        let mut point: Point = vec![None; table.len()];
        for k in (0..axes.len()).rev() {
            point[grid_syms[k]] = Some(axes[k][rem % axes[k].len()].clone());
            rem /= axes[k].len();
        }
        analysis.samples += 1;
        descend(
            problem,
            &plan,
            0,
            point,
            false,
            completion,
            found,
            &mut min_residual,
            &mut candidates,
        );
    }
    let names: Vec<String> = grid_syms
        .iter()
        .zip(&axes)
        .map(|(&s, a)| {
            let lo = a.first().map(format_rational).unwrap_or_default();
            let hi = a.last().map(format_rational).unwrap_or_default();
            format!("{} in [{}, {}] ({} pts)", table.name(s), lo, hi, a.len())
        })
        .collect();
    notes.push(format!(
        "grid: {} point(s){}{}",
        total,
        if names.is_empty() {
            String::new()
        } else {
            " over ".to_string()
        },
        names.join(", ")
    ));
    let solved_names: Vec<&str> = plan
        .iter()
        .filter_map(|s| match s {
            Step::Solve { var, .. } => Some(table.name(*var)),
            Step::Check(_) => None,
        })
        .collect();
    if !solved_names.is_empty() {
        notes.push(format!("solved per grid point for: {}", solved_names.join(", ")));
    }
    let checks = plan.iter().filter(|s| matches!(s, Step::Check(_))).count();
    notes.push(format!(
        "{candidates} complete candidate(s); {checks} equation(s) checked by residual"
    ));
    analysis.min_residual = min_residual;
}

#[allow(clippy::too_many_arguments)]
fn descend(
    problem: &Problem<'_>,
    plan: &[Step],
    step: usize,
    point: Point,
    approximate: bool,
    completion: &[(usize, Poly)],
    found: &mut Vec<Witness>,
    min_residual: &mut Option<f64>,
    candidates: &mut usize,
) {
    let Some(current) = plan.get(step) else {
        *candidates += 1;
        // Candidate complete: record residual of checked equations, then validate.
        let worst = plan
            .iter()
            .filter_map(|s| match s {
                Step::Check(p) => exact_relative_residual(p, &point),
                Step::Solve { .. } => None,
            })
            .fold(0.0f64, f64::max);
        if plan.iter().any(|s| matches!(s, Step::Check(_))) {
            *min_residual = Some(min_residual.map_or(worst, |m: f64| m.min(worst)));
        }
        if let Some(w) = problem.complete(point, approximate, completion) {
            found.push(w);
        }
        return;
    };
    match current {
        Step::Check(_) => descend(
            problem,
            plan,
            step + 1,
            point,
            approximate,
            completion,
            found,
            min_residual,
            candidates,
        ),
        Step::Solve { eq, var } => {
            let reduced = eq.partial_eval(&point);
            let uni = match UniPoly::from_poly(&reduced, *var) {
                Ok(u) => u,
                Err(_) => return,
            };
            let values: Vec<(BigRational, bool)> = if uni.is_zero() {
                grid_values(&problem.table, *var, problem.opts.grid_points)
                    .into_iter()
                    .map(|v| (v, false))
                    .collect()
            } else if uni.degree() == 0 {
                Vec::new()
            } else {
                uni.real_roots(&problem.opts.root_width)
                    .into_iter()
                    .filter(|r| root_admissible(&problem.table, *var, r))
                    .map(|r| (r.approx(), !r.is_rational()))
                    .collect()
            };
            for (v, approx) in values {
                let mut next = point.clone();
                next[*var] = Some(v);
                descend(
                    problem,
                    plan,
                    step + 1,
                    next,
                    approximate || approx,
                    completion,
                    found,
                    min_residual,
                    candidates,
                );
            }
        }
    }
}

/// Whether a density factors as `f(x) g(y)` at a parameter point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProductVerdict {
    ProductForm,
    NotProductForm,
    /// Support is not a Cartesian product.
    DomainNotProduct,
    ZeroDensity,
}

impl ProductVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            ProductVerdict::ProductForm => "ProductForm",
            ProductVerdict::NotProductForm => "NotProductForm",
            ProductVerdict::DomainNotProduct => "DomainNotProduct",
            ProductVerdict::ZeroDensity => "ZeroDensity",
        }
    }
}

impl fmt::Display for ProductVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Exact rank of a sparse coefficient map is at most one.
fn rank_at_most_one(c: &BTreeMap<(u32, u32), BigRational>) -> bool {
    let entries: Vec<_> = c.iter().collect();
    for (a, &(&(i1, j1), v1)) in entries.iter().enumerate() {
        for &(&(i2, j2), v2) in &entries[a + 1..] {
            let cross1 = c.get(&(i1, j2)).cloned().unwrap_or_else(BigRational::zero);
            let cross2 = c.get(&(i2, j1)).cloned().unwrap_or_else(BigRational::zero);
            if v1 * v2 != cross1 * cross2 {
                return false;
            }
        }
    }
    true
}

fn rank_at_most_one_f64(c: &BTreeMap<(u32, u32), f64>) -> bool {
    let scale = c.values().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-9 * scale * scale;
    let get = |k| c.get(&k).copied().unwrap_or(0.0);
    for (&(i1, j1), &v1) in c {
        for (&(i2, j2), &v2) in c {
            if (v1 * v2 - get((i1, j2)) * get((i2, j1))).abs() > tol {
                return false;
            }
        }
    }
    true
}

/// Product-form verdict at an exact parameter point.
pub fn check_product_form(family: &DensityFamily, point: &[Option<BigRational>]) -> Result<ProductVerdict, PolyError> {
    if matches!(family.base(), Some(BaseMeasure::UnitDisk)) {
        return Ok(ProductVerdict::DomainNotProduct);
    }
    if let FamilyKind::Named(NamedFamily::KibbleGamma { rho, .. }) = family.kind() {
        return Ok(if rho.eval(point)?.is_zero() {
            ProductVerdict::ProductForm
        } else {
            ProductVerdict::NotProductForm
        });
    }
    if let FamilyKind::Named(NamedFamily::SumPowerExp { ell }) = family.kind() {
        // (x+y)^ell separates only for ell = 0, integer or not.
        let v = ell.eval(point)?;
        if !(v.is_integer() && !v.is_negative()) {
            return Ok(ProductVerdict::NotProductForm);
        }
    }
    let coeffs = family.coefficient_matrix_at(&point.to_vec())?.unwrap_or_default();
    Ok(if coeffs.is_empty() {
        ProductVerdict::ZeroDensity
    } else if rank_at_most_one(&coeffs) {
        ProductVerdict::ProductForm
    } else {
        ProductVerdict::NotProductForm
    })
}

/// Verdict at a witness; approximate coordinates use a floating rank test.
pub fn witness_verdict(family: &DensityFamily, w: &Witness) -> Result<ProductVerdict, PolyError> {
    if !w.approximate {
        return check_product_form(family, &w.point);
    }
    if matches!(family.base(), Some(BaseMeasure::UnitDisk)) {
        return Ok(ProductVerdict::DomainNotProduct);
    }
    match family.kind() {
        FamilyKind::Polynomial { coeffs, .. } => {
            let fp = f64_point(&w.point);
            let c: BTreeMap<(u32, u32), f64> = coeffs
                .iter()
                .map(|(k, p)| (*k, p.eval_f64(&fp)))
                .filter(|(_, v)| v.abs() > 1e-12)
                .collect();
            Ok(if c.is_empty() {
                ProductVerdict::ZeroDensity
            } else if rank_at_most_one_f64(&c) {
                ProductVerdict::ProductForm
            } else {
                ProductVerdict::NotProductForm
            })
        }
        FamilyKind::Named(_) => check_product_form(family, &w.point),
    }
}

/// A residual value, exact when the moments allow it.
#[derive(Debug, Clone, PartialEq)]
pub enum Residual {
    Exact(BigRational),
    Approx(f64),
}

impl Residual {
    pub fn to_f64(&self) -> f64 {
        match self {
            Residual::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            Residual::Approx(v) => *v,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Residual::Exact(r) => r.is_zero(),
            Residual::Approx(v) => *v == 0.0,
        }
    }
}

impl fmt::Display for Residual {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Residual::Exact(r) => f.write_str(&format_rational(r)),
            Residual::Approx(v) => write!(f, "{v:.3e}"),
        }
    }
}

/// `|E[x^p y^q] - E[x^p] E[y^q]|` for `p, q <= d`, moments normalized by total mass.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorizationTable {
    pub degree: u32,
    pub entries: Vec<((u32, u32), Residual)>,
}

impl FactorizationTable {
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|(_, r)| r.to_f64().abs()).fold(0.0, f64::max)
    }

    pub fn all_zero(&self) -> bool {
        self.entries.iter().all(|(_, r)| r.is_zero())
    }

    pub fn get(&self, p: u32, q: u32) -> Option<&Residual> {
        self.entries.iter().find(|(k, _)| *k == (p, q)).map(|(_, r)| r)
    }
}

/// Moment factorization residuals from the exact moment oracle.
///
/// Moments are evaluated at `point`; when they are all rational multiples
/// of one power of `PI` the ratios are exact, otherwise floating.
pub fn moment_factorization_check(
    family: &DensityFamily,
    point: &[Option<BigRational>],
    d: u32,
) -> Result<FactorizationTable, CollapseError> {
    let table = family.table();
    let pi = table.pi_index();
    let mut values: BTreeMap<(u32, u32), Poly> = BTreeMap::new();
    for p in 0..=d {
        for q in 0..=d {
            for key in [(p, q), (p, 0), (0, q)] {
                if let std::collections::btree_map::Entry::Vacant(e) = values.entry(key) {
                    e.insert(family.moment(key.0, key.1)?.partial_eval(point));
                }
            }
        }
    }
    values.entry((0, 0)).or_insert(family.moment(0, 0)?.partial_eval(point));
    // Each value is a polynomial in PI alone; exact if all are c * PI^k for one k.
    let mut power: Option<u16> = None;
    let mut exact = true;
    for v in values.values() {
        if v.symbols().iter().any(|&s| s != pi) {
            return Err(CollapseError::Poly(PolyError::MissingSymbol(
                table.name(*v.symbols().iter().find(|&&s| s != pi).unwrap()).to_string(),
            )));
        }
        if v.is_zero() {
            continue;
        }
        if v.num_terms() != 1 {
            exact = false;
            break;
        }
        let k = v.leading().unwrap().0 .0[pi];
        if power.is_some_and(|p| p != k) {
            exact = false;
            break;
        }
        power = Some(k);
    }
    let mut entries = Vec::new();
    if exact {
        let c = |k: (u32, u32)| -> BigRational {
            values[&k]
                .leading()
                .map(|(_, c)| c.clone())
                .unwrap_or_else(BigRational::zero)
        };
        let m00 = c((0, 0));
        for p in 0..=d {
            for q in 0..=d {
                let r = c((p, q)) / &m00 - (c((p, 0)) / &m00) * (c((0, q)) / &m00);
                entries.push(((p, q), Residual::Exact(r.abs())));
            }
        }
    } else {
        let mut fp = vec![0.0; table.len()];
        fp[pi] = std::f64::consts::PI;
        let v = |k: (u32, u32)| values[&k].eval_f64(&fp);
        let m00 = v((0, 0));
        for p in 0..=d {
            for q in 0..=d {
                let r = v((p, q)) / m00 - (v((p, 0)) / m00) * (v((0, q)) / m00);
                entries.push(((p, q), Residual::Approx(r.abs())));
            }
        }
    }
    Ok(FactorizationTable { degree: d, entries })
}

/// Analysis of one degree within a collapse search.
#[derive(Debug, Clone)]
pub struct DegreeReport {
    pub degree: u32,
    pub system: EquationSystem,
    /// Equations analyzed at this degree: the union over degrees so far,
    /// after substituting earlier eliminations.
    pub accumulated: Vec<Poly>,
    pub analysis: SolutionAnalysis,
    /// Verdicts of the kept witnesses (same order).
    pub verdicts: Vec<ProductVerdict>,
    /// Every witness found has product form.
    pub all_product: bool,
    pub collapsed: bool,
}

#[derive(Debug, Clone)]
pub struct CollapseReport {
    pub table: Arc<SymbolTable>,
    pub max_degree: u32,
    pub degrees: Vec<DegreeReport>,
    /// Least degree at which the solutions are nonempty and all of product form.
    pub order: Option<u32>,
}

impl CollapseReport {
    pub fn collapse_witness(&self) -> Option<&Witness> {
        let d = self.order?;
        self.degrees.iter().find(|r| r.degree == d)?.analysis.witnesses.first()
    }

    pub fn summary(&self) -> String {
        match (self.order, self.collapse_witness()) {
            (Some(d), Some(w)) => format!("collapse order: {d}; witness {}", w.format(&self.table)),
            (Some(d), None) => format!("collapse order: {d}"),
            (None, _) => format!("collapse order: not found <= {}", self.max_degree),
        }
    }
}

impl fmt::Display for CollapseReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = &self.table;
        for r in &self.degrees {
            writeln!(f, "== degree {} ==", r.degree)?;
            writeln!(
                f,
                "mask pairs: {}; equations at this degree: {}; identically zero: {}",
                r.system.mask().len(),
                r.system.equations().len(),
                r.system.vanishing().len()
            )?;
            for e in r.system.equations() {
                writeln!(f, "  {} = 0", e.equation)?;
            }
            for (idx, expr) in &r.analysis.eliminations {
                writeln!(f, "eliminated: {} = {}", t.name(*idx), expr)?;
            }
            writeln!(f, "remaining equations: {}", r.analysis.reduced.len())?;
            for p in &r.analysis.reduced {
                writeln!(f, "  {p} = 0")?;
            }
            writeln!(f, "analysis: {}", r.analysis.status.as_str())?;
            if let Some((var, roots)) = &r.analysis.roots {
                let rs: Vec<String> = roots.iter().map(format_root).collect();
                writeln!(f, "admissible roots in {}: [{}]", t.name(*var), rs.join(", "))?;
            }
            for n in &r.analysis.notes {
                writeln!(f, "note: {n}")?;
            }
            if let Some(m) = r.analysis.min_residual {
                writeln!(f, "min relative residual of checked equations: {m:.3e}")?;
            }
            writeln!(
                f,
                "witnesses: {} exact, {} approximate",
                r.analysis.exact_witness_count, r.analysis.approximate_witness_count
            )?;
            for (w, v) in r.analysis.witnesses.iter().zip(&r.verdicts) {
                writeln!(f, "  {} -> {}", w.format(t), v)?;
            }
            if !r.analysis.is_nonempty() {
                if r.analysis.is_exactly_empty() {
                    writeln!(f, "solution set: empty (exact)")?;
                } else {
                    writeln!(f, "solution set: no point found (sampling evidence, not a proof)")?;
                }
            }
        }
        writeln!(f, "{}", self.summary())
    }
}

fn format_root(r: &RealRoot) -> String {
    match r {
        RealRoot::Rational(v) => format_rational(v),
        RealRoot::Isolated { .. } => format!("~{}", format_f64(r.to_f64())),
    }
}

/// Iterates `d = 1..=max_d`, imposing all ZII equations up to `d`, until the
/// solutions are nonempty and all of product form.
///
/// Linear eliminations found at one degree are substituted into the family
/// before the next degree is built.
pub fn collapse_order(
    family: &DensityFamily,
    max_d: u32,
    opts: &AnalysisOptions,
) -> Result<CollapseReport, CollapseError> {
    if max_d > MAX_COLLAPSE_DEGREE {
        return Err(CollapseError::DegreeTooLarge(max_d));
    }
    let table = family.table().clone();
    let mut current = family.clone();
    let mut elims: Vec<(usize, Poly)> = Vec::new();
    let mut accumulated: Vec<Poly> = Vec::new();
    let mut degrees = Vec::new();
    let mut order = None;
    for d in 1..=max_d {
        let system = zii_equations(&current, d)?;
        for p in system.polys() {
            if !accumulated.contains(&p) {
                accumulated.push(p);
            }
        }
        let analysis = analyze_with_table(
            &table,
            &accumulated,
            current.constraints(),
            std::slice::from_ref(system.determinant()),
            &elims,
            opts,
        )?;
        let mut all_product = true;
        for w in analysis.all_witnesses() {
            if witness_verdict(family, w)? != ProductVerdict::ProductForm {
                all_product = false;
                break;
            }
        }
        let verdicts = analysis
            .witnesses
            .iter()
            .map(|w| witness_verdict(family, w))
            .collect::<Result<Vec<_>, _>>()?;
        let collapsed = analysis.is_nonempty() && all_product;
        if !analysis.eliminations.is_empty() {
            let mut subs: BTreeMap<usize, Poly> = BTreeMap::new();
            for (i, e) in &analysis.eliminations {
                subs.insert(*i, e.clone());
            }
            for (_, e) in elims.iter_mut() {
                *e = e.substitute_all(&subs);
            }
            elims.extend(analysis.eliminations.iter().cloned());
            current = current.substitute(&subs);
            accumulated = accumulated
                .iter()
                .map(|p| p.substitute_all(&subs).strip_known_nonzero_factors())
                .filter(|p| !p.is_zero())
                .collect();
        }
        degrees.push(DegreeReport {
            degree: d,
            system,
            accumulated: analysis.reduced.clone(),
            analysis,
            verdicts,
            all_product,
            collapsed,
        });
        if collapsed {
            order = Some(d);
            break;
        }
    }
    Ok(CollapseReport {
        table,
        max_degree: max_d,
        degrees,
        order,
    })
}

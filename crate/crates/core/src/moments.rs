//! Closed-form exact moments of the supported base measures and density families.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::poly::{int, Point, Poly, PolyError};
use crate::symbols::{Assumption, Symbol, SymbolTable};

/// Largest exponent of `x` or `y` allowed in a density coefficient map.
pub const MAX_DENSITY_EXPONENT: u32 = 32;
/// Largest moment order `p + q` the oracle will expand.
pub const MAX_MOMENT_ORDER: u32 = 128;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum MomentError {
    #[error("moment order {0} exceeds the supported bound {MAX_MOMENT_ORDER}")]
    OrderTooLarge(u32),
    #[error("density exponent {0} exceeds the bound {MAX_DENSITY_EXPONENT}")]
    ExponentBound(u32),
    #[error("density is identically zero")]
    ZeroDensity,
    #[error("gamma shape must be a positive rational or a positive symbol, got `{0}`")]
    InvalidShape(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("normalization: coefficient `{0}` does not occur")]
    CoefficientAbsent(String),
    #[error("normalization: coefficient `{0}` does not occur linearly")]
    CoefficientNonlinear(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// Reference measure the density polynomial is taken against.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BaseMeasure {
    /// `e^{-x-y} x^{k1-1} y^{k2-1} / (Γ(k1) Γ(k2))` on the positive quadrant.
    OrthantGamma { k1: Poly, k2: Poly },
    /// Lebesgue measure on `[0,1]^2`.
    UnitBox,
    /// Lebesgue measure on the closed unit disk.
    UnitDisk,
}

impl BaseMeasure {
    pub fn tag(&self) -> &'static str {
        match self {
            BaseMeasure::OrthantGamma { .. } => "orthant-gamma",
            BaseMeasure::UnitBox => "unit-box",
            BaseMeasure::UnitDisk => "unit-disk",
        }
    }

    /// Whether the support is a Cartesian product.
    pub fn is_product(&self) -> bool {
        !matches!(self, BaseMeasure::UnitDisk)
    }

    fn check_shape(p: &Poly) -> Result<(), MomentError> {
        let ok = match p.as_constant() {
            Some(c) => c.is_positive(),
            None => {
                p.num_terms() == 1
                    && p.leading().is_some_and(|(m, c)| {
                        c.is_one()
                            && m.degree() == 1
                            && m.0
                                .iter()
                                .position(|&e| e == 1)
                                .is_some_and(|i| p.table().is_positive(i))
                    })
            }
        };
        if ok {
            Ok(())
        } else {
            Err(MomentError::InvalidShape(p.to_string()))
        }
    }
}

/// Families with a closed moment formula that is not a polynomial density.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NamedFamily {
    /// `e^{-(x+y)} (x+y)^ell / (ell+1)!` on the positive quadrant.
    SumPowerExp { ell: Poly },
    /// Correlated bivariate gamma with an `I0` kernel; numeric moments only.
    KibbleGamma { sigma1: Poly, sigma2: Poly, rho: Poly },
}

impl NamedFamily {
    pub fn tag(&self) -> &'static str {
        match self {
            NamedFamily::SumPowerExp { .. } => "sum-power-exp",
            NamedFamily::KibbleGamma { .. } => "kibble-gamma",
        }
    }

    pub fn args(&self) -> Vec<&Poly> {
        match self {
            NamedFamily::SumPowerExp { ell } => vec![ell],
            NamedFamily::KibbleGamma { sigma1, sigma2, rho } => vec![sigma1, sigma2, rho],
        }
    }

    fn map_args(&self, f: impl Fn(&Poly) -> Poly) -> NamedFamily {
        match self {
            NamedFamily::SumPowerExp { ell } => NamedFamily::SumPowerExp { ell: f(ell) },
            NamedFamily::KibbleGamma { sigma1, sigma2, rho } => NamedFamily::KibbleGamma {
                sigma1: f(sigma1),
                sigma2: f(sigma2),
                rho: f(rho),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Eq,
    Gt,
    Ge,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Eq => "=",
            Relation::Gt => ">",
            Relation::Ge => ">=",
        }
    }
}

/// `lhs <relation> 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamConstraint {
    pub lhs: Poly,
    pub relation: Relation,
}

impl ParamConstraint {
    pub fn new(lhs: Poly, relation: Relation) -> Self {
        ParamConstraint { lhs, relation }
    }

    pub fn eq(lhs: Poly) -> Self {
        Self::new(lhs, Relation::Eq)
    }

    pub fn holds_at(&self, point: &[Option<BigRational>]) -> Result<bool, PolyError> {
        let v = self.lhs.eval(point)?;
        Ok(match self.relation {
            Relation::Eq => v.is_zero(),
            Relation::Gt => v.is_positive(),
            Relation::Ge => !v.is_negative(),
        })
    }

    pub fn substitute(&self, subs: &BTreeMap<usize, Poly>) -> Self {
        ParamConstraint::new(self.lhs.substitute_all(subs), self.relation)
    }
}

impl fmt::Display for ParamConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} 0", self.lhs, self.relation.symbol())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FamilyKind {
    /// Density `sum coeffs[(i,j)] x^i y^j` relative to `base`.
    Polynomial {
        base: BaseMeasure,
        coeffs: BTreeMap<(u32, u32), Poly>,
    },
    Named(NamedFamily),
}

/// A parameterized bivariate density.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DensityFamily {
    table: Arc<SymbolTable>,
    kind: FamilyKind,
    constraints: Vec<ParamConstraint>,
    /// Common positive factor applied to every moment.
    scale: BigRational,
}

impl DensityFamily {
    pub fn polynomial(
        table: &Arc<SymbolTable>,
        base: BaseMeasure,
        coeffs: BTreeMap<(u32, u32), Poly>,
        constraints: Vec<ParamConstraint>,
    ) -> Result<Self, MomentError> {
        let coeffs: BTreeMap<_, _> = coeffs.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        if coeffs.is_empty() {
            return Err(MomentError::ZeroDensity);
        }
        for (&(i, j), c) in &coeffs {
            if i.max(j) > MAX_DENSITY_EXPONENT {
                return Err(MomentError::ExponentBound(i.max(j)));
            }
            check_table(table, c)?;
        }
        if let BaseMeasure::OrthantGamma { k1, k2 } = &base {
            check_table(table, k1)?;
            check_table(table, k2)?;
            BaseMeasure::check_shape(k1)?;
            BaseMeasure::check_shape(k2)?;
        }
        Self::check_constraints(table, &constraints)?;
        Ok(DensityFamily {
            table: table.clone(),
            kind: FamilyKind::Polynomial { base, coeffs },
            constraints,
            scale: BigRational::one(),
        })
    }

    pub fn named(
        table: &Arc<SymbolTable>,
        family: NamedFamily,
        constraints: Vec<ParamConstraint>,
    ) -> Result<Self, MomentError> {
        for a in family.args() {
            check_table(table, a)?;
        }
        Self::check_constraints(table, &constraints)?;
        Ok(DensityFamily {
            table: table.clone(),
            kind: FamilyKind::Named(family),
            constraints,
            scale: BigRational::one(),
        })
    }

    fn check_constraints(table: &Arc<SymbolTable>, cs: &[ParamConstraint]) -> Result<(), MomentError> {
        cs.iter().try_for_each(|c| check_table(table, &c.lhs))
    }

    pub fn table(&self) -> &Arc<SymbolTable> {
        &self.table
    }

    pub fn kind(&self) -> &FamilyKind {
        &self.kind
    }

    pub fn constraints(&self) -> &[ParamConstraint] {
        &self.constraints
    }

    pub fn scale(&self) -> &BigRational {
        &self.scale
    }

    pub fn with_constraint(mut self, c: ParamConstraint) -> Result<Self, MomentError> {
        check_table(&self.table, &c.lhs)?;
        self.constraints.push(c);
        Ok(self)
    }

    /// Base measure of a polynomial family; the orthant for `SumPowerExp`.
    pub fn base(&self) -> Option<BaseMeasure> {
        match &self.kind {
            FamilyKind::Polynomial { base, .. } => Some(base.clone()),
            FamilyKind::Named(NamedFamily::SumPowerExp { .. }) | FamilyKind::Named(NamedFamily::KibbleGamma { .. }) => {
                Some(BaseMeasure::OrthantGamma {
                    k1: Poly::one(&self.table),
                    k2: Poly::one(&self.table),
                })
            }
        }
    }

    pub fn coeffs(&self) -> Option<&BTreeMap<(u32, u32), Poly>> {
        match &self.kind {
            FamilyKind::Polynomial { coeffs, .. } => Some(coeffs),
            FamilyKind::Named(_) => None,
        }
    }

    /// Same family with every moment multiplied by `c > 0`.
    pub fn rescaled(&self, c: &BigRational) -> Self {
        assert!(c.is_positive(), "moment rescaling factor must be positive");
        let mut out = self.clone();
        out.scale = &self.scale * c;
        out
    }

    /// Replaces symbols by polynomials everywhere (density, shapes, constraints).
    pub fn substitute(&self, subs: &BTreeMap<usize, Poly>) -> Self {
        let kind = match &self.kind {
            FamilyKind::Polynomial { base, coeffs } => {
                let base = match base {
                    BaseMeasure::OrthantGamma { k1, k2 } => BaseMeasure::OrthantGamma {
                        k1: k1.substitute_all(subs),
                        k2: k2.substitute_all(subs),
                    },
                    other => other.clone(),
                };
                FamilyKind::Polynomial {
                    base,
                    coeffs: coeffs
                        .iter()
                        .map(|(k, c)| (*k, c.substitute_all(subs)))
                        .filter(|(_, c)| !c.is_zero())
                        .collect(),
                }
            }
            FamilyKind::Named(n) => FamilyKind::Named(n.map_args(|p| p.substitute_all(subs))),
        };
        DensityFamily {
            table: self.table.clone(),
            kind,
            constraints: self.constraints.iter().map(|c| c.substitute(subs)).collect(),
            scale: self.scale.clone(),
        }
    }

    /// Exact moment `E[x^p y^q]` (up to the family's common positive scale).
    pub fn moment(&self, p: u32, q: u32) -> Result<Poly, MomentError> {
        let raw = match &self.kind {
            FamilyKind::Polynomial { base, coeffs } => {
                let mut acc = Poly::zero(&self.table);
                for (&(i, j), c) in coeffs {
                    let m = base_monomial_moment(&self.table, base, p + i, q + j)?;
                    acc = acc + c * &m;
                }
                acc
            }
            FamilyKind::Named(NamedFamily::SumPowerExp { ell }) => sum_power_exp_moment(ell, p, q)?,
            FamilyKind::Named(NamedFamily::KibbleGamma { .. }) => {
                return Err(MomentError::Unsupported(
                    "kibble-gamma has no closed-form polynomial moments; use the numeric oracle".into(),
                ))
            }
        };
        Ok(raw.scale(&self.scale))
    }

    /// `moment(0,0) - 1`, the total-mass equation.
    pub fn normalization_constraint(&self) -> Result<Poly, MomentError> {
        match self.base() {
            Some(BaseMeasure::UnitDisk) => Err(MomentError::Unsupported(
                "normalization on the unit disk involves PI; not an exact polynomial equation".into(),
            )),
            _ => Ok(self.moment(0, 0)? - Poly::one(&self.table)),
        }
    }

    /// Solves the normalization equation for a coefficient that occurs linearly.
    pub fn solve_normalization_for(&self, name: &str) -> Result<Poly, MomentError> {
        let eq = self.normalization_constraint()?;
        let idx = self
            .table
            .lookup(name)
            .ok_or_else(|| MomentError::CoefficientAbsent(name.to_string()))?;
        solve_linear(&eq, idx).map_err(|absent| {
            if absent {
                MomentError::CoefficientAbsent(name.to_string())
            } else {
                MomentError::CoefficientNonlinear(name.to_string())
            }
        })
    }

    /// Numeric coefficient map of the density at a full parameter point,
    /// when the density is a polynomial (times the base weight).
    pub fn coefficient_matrix_at(&self, point: &Point) -> Result<Option<BTreeMap<(u32, u32), BigRational>>, PolyError> {
        match &self.kind {
            FamilyKind::Polynomial { coeffs, .. } => {
                let mut out = BTreeMap::new();
                for (k, c) in coeffs {
                    let v = c.eval(point)?;
                    if !v.is_zero() {
                        out.insert(*k, v);
                    }
                }
                Ok(Some(out))
            }
            FamilyKind::Named(NamedFamily::SumPowerExp { ell }) => {
                let v = ell.eval(point)?;
                if !(v.is_integer() && !v.is_negative()) {
                    return Ok(None);
                }
                let n: u32 = v.to_integer().try_into().unwrap_or(u32::MAX);
                if n > MAX_DENSITY_EXPONENT {
                    return Ok(None);
                }
                let mut out = BTreeMap::new();
                for i in 0..=n {
                    out.insert((i, n - i), BigRational::from_integer(binomial(n, i)));
                }
                Ok(Some(out))
            }
            FamilyKind::Named(NamedFamily::KibbleGamma { .. }) => Ok(None),
        }
    }

    // Shipped families.

    /// Constant density on the orthant with rational gamma shapes.
    pub fn gamma_product(k1: BigRational, k2: BigRational) -> Self {
        let t = SymbolTable::empty();
        let base = BaseMeasure::OrthantGamma {
            k1: Poly::constant(&t, k1),
            k2: Poly::constant(&t, k2),
        };
        Self::polynomial(&t, base, BTreeMap::from([((0, 0), Poly::one(&t))]), vec![]).expect("valid shipped family")
    }

    /// Independent unit exponentials, `e^{-x} e^{-y}`.
    pub fn product_exponential() -> Self {
        Self::gamma_product(BigRational::one(), BigRational::one())
    }

    /// Sum-power exponential family in `ell`, declared a nonnegative integer.
    pub fn sum_power_exp() -> Self {
        let t = SymbolTable::new([Symbol::new("ell", Assumption::NonnegInteger).with_bounds(int(0), int(10))]).unwrap();
        let ell = Poly::named(&t, "ell");
        Self::named(&t, NamedFamily::SumPowerExp { ell }, vec![]).unwrap()
    }

    /// `a11 x y + a10 x + a01 y + a00` on the unit box.
    pub fn bilinear_box() -> Self {
        let names = ["a00", "a01", "a10", "a11"];
        let t = SymbolTable::new(
            names
                .iter()
                .map(|n| Symbol::new(*n, Assumption::Positive).with_bounds(int(0), int(2))),
        )
        .unwrap();
        let v = |n| Poly::named(&t, n);
        let coeffs = BTreeMap::from([
            ((0, 0), v("a00")),
            ((1, 0), v("a10")),
            ((0, 1), v("a01")),
            ((1, 1), v("a11")),
        ]);
        Self::polynomial(&t, BaseMeasure::UnitBox, coeffs, vec![]).unwrap()
    }

    /// `v + a x^2 + (b + c) x y + d y^2` on the unit disk: the quadratic-form
    /// density `1 + (a x^2 + c x y + b x y + d y^2) / v` times `v > 0`,
    /// with `a d - b c = 1` and the normalizing constant fixed by `v = 1`.
    pub fn disk_quadratic() -> Self {
        let mut syms: Vec<Symbol> = ["a", "b", "c", "d"]
            .iter()
            .map(|n| Symbol::new(*n, Assumption::None).with_bounds(int(-4), int(4)))
            .collect();
        syms.push(Symbol::new("v", Assumption::Positive).with_bounds(int(1), int(1)));
        let t = SymbolTable::new(syms).unwrap();
        let v = |n| Poly::named(&t, n);
        let coeffs = BTreeMap::from([
            ((0, 0), v("v")),
            ((2, 0), v("a")),
            ((1, 1), v("b") + v("c")),
            ((0, 2), v("d")),
        ]);
        let sl2 = ParamConstraint::eq(v("a") * v("d") - v("b") * v("c") - Poly::one(&t));
        let unit = ParamConstraint::eq(v("v") - Poly::one(&t));
        Self::polynomial(&t, BaseMeasure::UnitDisk, coeffs, vec![sl2, unit]).unwrap()
    }
}

fn check_table(table: &Arc<SymbolTable>, p: &Poly) -> Result<(), MomentError> {
    if crate::poly::same_table(table, p.table()) {
        Ok(())
    } else {
        Err(MomentError::Poly(PolyError::TableMismatch))
    }
}

/// For `eq = k * s + rest` with constant `k != 0` and `rest` free of `s`,
/// returns `-rest / k`. `Err(true)` when `s` is absent, `Err(false)` when
/// it occurs nonlinearly or with a non-constant coefficient.
pub(crate) fn solve_linear(eq: &Poly, idx: usize) -> Result<Poly, bool> {
    if eq.degree_in(idx) == 0 {
        return Err(true);
    }
    if eq.degree_in(idx) > 1 {
        return Err(false);
    }
    let table = eq.table();
    let n = table.len();
    let mut coeff = None;
    let mut rest = Poly::zero(table);
    for (m, c) in eq.terms() {
        if m.0[idx] == 1 {
            if m.degree() != 1 || coeff.is_some() {
                return Err(false);
            }
            coeff = Some(c.clone());
        } else {
            rest = rest + Poly::from_term(table, m.clone(), c.clone());
        }
    }
    let _ = n;
    let k = coeff.ok_or(false)?;
    Ok(rest.scale(&(-k.recip())))
}

fn factorial(n: u32) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * k)
}

fn binomial(n: u32, k: u32) -> BigInt {
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// `(n-1)!!` style double factorial; `double_factorial(-1) = 1`.
fn double_factorial(n: i64) -> BigInt {
    let mut acc = BigInt::one();
    let mut k = n;
    while k > 1 {
        acc *= k;
        k -= 2;
    }
    acc
}

fn rising(k: &Poly, n: u32) -> Poly {
    let t = k.table();
    (0..n).fold(Poly::one(t), |acc, s| acc * (k + &Poly::int(t, s as i64)))
}

/// Moment of `x^i y^j` against the base measure.
pub fn base_monomial_moment(table: &Arc<SymbolTable>, base: &BaseMeasure, i: u32, j: u32) -> Result<Poly, MomentError> {
    if i + j > MAX_MOMENT_ORDER {
        return Err(MomentError::OrderTooLarge(i + j));
    }
    Ok(match base {
        BaseMeasure::OrthantGamma { k1, k2 } => rising(k1, i) * rising(k2, j),
        BaseMeasure::UnitBox => Poly::constant(
            table,
            BigRational::new(BigInt::one(), BigInt::from((i + 1) as u64 * (j + 1) as u64)),
        ),
        BaseMeasure::UnitDisk => {
            if i % 2 == 1 || j % 2 == 1 {
                Poly::zero(table)
            } else {
                let num = BigInt::from(2) * double_factorial(i as i64 - 1) * double_factorial(j as i64 - 1);
                let den = double_factorial((i + j) as i64) * BigInt::from(i + j + 2);
                Poly::var(table, table.pi_index()).scale(&BigRational::new(num, den))
            }
        }
    })
}

/// `p! q! / (p+q+1)! * prod_{k=2}^{p+q+1} (ell + k)`; moments of the
/// sum-power exponential divided by the positive factor `(ell+1)!`.
fn sum_power_exp_moment(ell: &Poly, p: u32, q: u32) -> Result<Poly, MomentError> {
    if p + q > MAX_MOMENT_ORDER {
        return Err(MomentError::OrderTooLarge(p + q));
    }
    let t = ell.table();
    let c = BigRational::new(factorial(p) * factorial(q), factorial(p + q + 1));
    let prod = (2..=p + q + 1).fold(Poly::one(t), |acc, k| acc * (ell + &Poly::int(t, k as i64)));
    Ok(prod.scale(&c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::rat;

    #[test]
    fn orthant_unit_shapes_give_factorials() {
        let f = DensityFamily::product_exponential();
        assert_eq!(f.moment(2, 3).unwrap().as_constant(), Some(int(12)));
        for i in 0..=10u32 {
            for j in 0..=10u32 {
                let expect = BigRational::from_integer(factorial(i) * factorial(j));
                assert_eq!(f.moment(i, j).unwrap().as_constant(), Some(expect));
            }
        }
    }

    #[test]
    fn disk_moments() {
        let t = SymbolTable::empty();
        let pi = Poly::named(&t, "PI");
        let m = |i, j| base_monomial_moment(&t, &BaseMeasure::UnitDisk, i, j).unwrap();
        assert_eq!(m(0, 0), pi);
        assert_eq!(m(2, 2), pi.scale(&rat(1, 24)));
        assert!(m(1, 2).is_zero());
        assert!(m(3, 3).is_zero());
        // Even moments are PI times a positive rational.
        for i in (0..8).step_by(2) {
            for j in (0..8).step_by(2) {
                let v = m(i, j);
                assert_eq!(v.num_terms(), 1);
                let (mono, c) = v.leading().unwrap();
                assert_eq!(mono.0[t.pi_index()], 1);
                assert!(c.is_positive());
            }
        }
    }

    #[test]
    fn box_moment() {
        let t = SymbolTable::empty();
        assert_eq!(
            base_monomial_moment(&t, &BaseMeasure::UnitBox, 1, 1)
                .unwrap()
                .as_constant(),
            Some(rat(1, 4))
        );
    }

    #[test]
    fn sum_power_exp_moments() {
        let f = DensityFamily::sum_power_exp();
        let t = f.table().clone();
        let ell = Poly::named(&t, "ell");
        assert_eq!(f.moment(0, 0).unwrap(), Poly::one(&t));
        let expect = ((&ell + &Poly::int(&t, 2)) * (&ell + &Poly::int(&t, 3))).scale(&rat(1, 6));
        assert_eq!(f.moment(1, 1).unwrap(), expect);
        assert!(f.normalization_constraint().unwrap().is_zero());
    }

    #[test]
    fn sum_power_exp_matches_binomial_expansion() {
        // (x+y)^l = sum C(l,j) x^j y^(l-j); against e^{-x-y}: moments factor
        // into factorials. Divide by (l+1)!.
        let f = DensityFamily::sum_power_exp();
        let t = f.table().clone();
        for l in 0..6u32 {
            let pt: Point = (0..t.len())
                .map(|i| (t.name(i) == "ell").then(|| int(l as i64)))
                .collect();
            for p in 0..4u32 {
                for q in 0..4u32 {
                    let mut direct = BigInt::zero();
                    for j in 0..=l {
                        direct += binomial(l, j) * factorial(p + j) * factorial(q + l - j);
                    }
                    let expect = BigRational::new(direct, factorial(l + 1));
                    assert_eq!(f.moment(p, q).unwrap().eval(&pt).unwrap(), expect, "l={l} p={p} q={q}");
                }
            }
        }
    }

    #[test]
    fn bilinear_mass_and_normalization() {
        let f = DensityFamily::bilinear_box();
        assert_eq!(f.moment(0, 0).unwrap().to_string(), "a00 + 1/2*a01 + 1/2*a10 + 1/4*a11");
        assert_eq!(
            f.normalization_constraint().unwrap().to_string(),
            "a00 + 1/2*a01 + 1/2*a10 + 1/4*a11 - 1"
        );
        assert_eq!(
            f.solve_normalization_for("a00").unwrap().to_string(),
            "-1/2*a01 - 1/2*a10 - 1/4*a11 + 1"
        );
    }

    #[test]
    fn constant_box_density_normalizes_to_one() {
        let t = SymbolTable::new([Symbol::new("a00", Assumption::None)]).unwrap();
        let f = DensityFamily::polynomial(
            &t,
            BaseMeasure::UnitBox,
            BTreeMap::from([((0, 0), Poly::named(&t, "a00"))]),
            vec![],
        )
        .unwrap();
        assert_eq!(f.solve_normalization_for("a00").unwrap(), Poly::one(&t));
    }

    #[test]
    fn normalization_errors() {
        let t = SymbolTable::new([Symbol::new("a", Assumption::None), Symbol::new("b", Assumption::None)]).unwrap();
        let a = Poly::named(&t, "a");
        let f = DensityFamily::polynomial(
            &t,
            BaseMeasure::UnitBox,
            BTreeMap::from([((0, 0), a.pow(2)), ((1, 0), Poly::one(&t))]),
            vec![],
        )
        .unwrap();
        assert_eq!(
            f.solve_normalization_for("a"),
            Err(MomentError::CoefficientNonlinear("a".into()))
        );
        assert_eq!(
            f.solve_normalization_for("b"),
            Err(MomentError::CoefficientAbsent("b".into()))
        );
        assert!(matches!(
            DensityFamily::disk_quadratic().normalization_constraint(),
            Err(MomentError::Unsupported(_))
        ));
    }

    #[test]
    fn moments_are_linear_in_coefficients() {
        let t = SymbolTable::new([Symbol::new("a", Assumption::None), Symbol::new("b", Assumption::None)]).unwrap();
        let a = Poly::named(&t, "a");
        let b = Poly::named(&t, "b");
        let mk =
            |c: BTreeMap<(u32, u32), Poly>| DensityFamily::polynomial(&t, BaseMeasure::UnitDisk, c, vec![]).unwrap();
        let f1 = mk(BTreeMap::from([((2, 0), a.clone()), ((0, 0), Poly::one(&t))]));
        let f2 = mk(BTreeMap::from([((2, 0), b.clone()), ((1, 1), a.clone())]));
        let sum = mk(BTreeMap::from([
            ((2, 0), &a + &b),
            ((0, 0), Poly::one(&t)),
            ((1, 1), a.clone()),
        ]));
        for p in 0..5 {
            for q in 0..5 {
                assert_eq!(
                    sum.moment(p, q).unwrap(),
                    f1.moment(p, q).unwrap() + f2.moment(p, q).unwrap()
                );
            }
        }
    }

    #[test]
    fn rejects_zero_density_and_bad_shapes() {
        let t = SymbolTable::new([Symbol::new("k", Assumption::None)]).unwrap();
        assert_eq!(
            DensityFamily::polynomial(&t, BaseMeasure::UnitBox, BTreeMap::new(), vec![]),
            Err(MomentError::ZeroDensity)
        );
        let base = BaseMeasure::OrthantGamma {
            k1: Poly::named(&t, "k"),
            k2: Poly::one(&t),
        };
        assert!(matches!(
            DensityFamily::polynomial(&t, base, BTreeMap::from([((0, 0), Poly::one(&t))]), vec![]),
            Err(MomentError::InvalidShape(_))
        ));
    }

    #[test]
    fn symbolic_shapes_are_rising_factorials() {
        let t = SymbolTable::new([
            Symbol::new("k1", Assumption::Positive),
            Symbol::new("k2", Assumption::Positive),
        ])
        .unwrap();
        let k1 = Poly::named(&t, "k1");
        let base = BaseMeasure::OrthantGamma {
            k1: k1.clone(),
            k2: Poly::named(&t, "k2"),
        };
        let m = base_monomial_moment(&t, &base, 2, 0).unwrap();
        assert_eq!(m, &k1 * &(&k1 + &Poly::one(&t)));
    }
}

//! Floating-point moments by Gaussian quadrature and floating ZII residuals.

pub mod bessel;
pub mod quadrature;

use std::f64::consts::PI;

use num_rational::BigRational;
use num_traits::ToPrimitive;
use statrs::function::gamma::ln_gamma;

use crate::inverse::ZiiMask;
use crate::matrix::MonomialBasis;
use crate::moments::{BaseMeasure, DensityFamily, FamilyKind, NamedFamily};
use crate::poly::{Poly, PolyError};

pub use bessel::{bessel_i0, bessel_i0_scaled};
use quadrature::{laguerre, legendre01, LAGUERRE_MAX_NODES, LEGENDRE_MAX_NODES};

/// Condition estimate above which floating inversion is refused.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum NumericError {
    #[error("quadrature did not converge within {nodes} nodes (last change {change:e})")]
    NoConvergence { nodes: usize, change: f64 },
    #[error("moment matrix is ill-conditioned (estimate {condition:e}); use the exact path")]
    IllConditioned { condition: f64 },
    #[error("moment matrix is numerically singular")]
    Singular,
    #[error("tolerance {0:e} is below the supported 1e-12")]
    ToleranceTooSmall(f64),
    #[error("invalid numeric density: {0}")]
    Invalid(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum NumericDomain {
    /// Gamma base `x^{k1-1} y^{k2-1} e^{-x-y} / (Gamma(k1) Gamma(k2))`.
    Orthant {
        k1: f64,
        k2: f64,
    },
    UnitBox,
    UnitDisk,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Evaluator {
    /// `sum c_ij x^i y^j` relative to the domain's base measure.
    Polynomial(Vec<((u32, u32), f64)>),
    /// `e^{-(x+y)} (x+y)^ell / (ell+1)!` on the orthant.
    SumPowerExp { ell: f64 },
    /// Kibble bivariate gamma with unit shapes and correlation `rho`.
    Kibble { sigma1: f64, sigma2: f64, rho: f64 },
}

/// A density with a numeric evaluator and the domain it lives on.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericDensity {
    pub domain: NumericDomain,
    pub evaluator: Evaluator,
}

impl NumericDensity {
    pub fn kibble(sigma1: f64, sigma2: f64, rho: f64) -> Result<Self, NumericError> {
        if !(sigma1 > 0.0 && sigma2 > 0.0 && (0.0..1.0).contains(&rho)) {
            return Err(NumericError::Invalid(format!(
                "kibble-gamma needs sigma1, sigma2 > 0 and 0 <= rho < 1 (got {sigma1}, {sigma2}, {rho})"
            )));
        }
        Ok(NumericDensity {
            domain: NumericDomain::Orthant { k1: 1.0, k2: 1.0 },
            evaluator: Evaluator::Kibble { sigma1, sigma2, rho },
        })
    }

    /// Numeric density of `family` at an exact parameter point.
    pub fn from_family(family: &DensityFamily, point: &[Option<BigRational>]) -> Result<Self, NumericError> {
        let val = |p: &Poly| -> Result<f64, NumericError> { Ok(p.eval(point)?.to_f64().unwrap_or(f64::NAN)) };
        match family.kind() {
            FamilyKind::Polynomial { base, coeffs } => {
                let domain = match base {
                    BaseMeasure::OrthantGamma { k1, k2 } => NumericDomain::Orthant {
                        k1: val(k1)?,
                        k2: val(k2)?,
                    },
                    BaseMeasure::UnitBox => NumericDomain::UnitBox,
                    BaseMeasure::UnitDisk => NumericDomain::UnitDisk,
                };
                let scale = family.scale().to_f64().unwrap_or(f64::NAN);
                let mut c = Vec::new();
                for (k, p) in coeffs {
                    c.push((*k, scale * val(p)?));
                }
                Ok(NumericDensity {
                    domain,
                    evaluator: Evaluator::Polynomial(c),
                })
            }
            FamilyKind::Named(NamedFamily::SumPowerExp { ell }) => Ok(NumericDensity {
                domain: NumericDomain::Orthant { k1: 1.0, k2: 1.0 },
                evaluator: Evaluator::SumPowerExp { ell: val(ell)? },
            }),
            FamilyKind::Named(NamedFamily::KibbleGamma { sigma1, sigma2, rho }) => {
                Self::kibble(val(sigma1)?, val(sigma2)?, val(rho)?)
            }
        }
    }

    /// Integrand relative to the quadrature weight at `(x, y)`.
    fn integrand(&self, x: f64, y: f64) -> f64 {
        match &self.evaluator {
            Evaluator::Polynomial(c) => c
                .iter()
                .map(|&((i, j), v)| v * x.powi(i as i32) * y.powi(j as i32))
                .sum(),
            Evaluator::SumPowerExp { ell } => (ell * (x + y).ln() - ln_gamma(ell + 2.0)).exp(),
            // Unit scales; moments are rescaled by sigma^p afterwards.
            Evaluator::Kibble { rho, .. } => {
                let z = 2.0 * (rho * x * y).sqrt() / (1.0 - rho);
                let log = -(x + y) / (1.0 - rho) + x + y + z;
                log.exp() * bessel_i0_scaled(z) / (1.0 - rho)
            }
        }
    }

    fn node_cap(&self) -> usize {
        match self.domain {
            NumericDomain::Orthant { .. } => LAGUERRE_MAX_NODES,
            _ => LEGENDRE_MAX_NODES,
        }
    }

    /// Tensor rule estimate with `n` nodes per axis.
    fn estimate(&self, i: u32, j: u32, n: usize) -> f64 {
        let f = |x: f64, y: f64| x.powi(i as i32) * y.powi(j as i32) * self.integrand(x, y);
        match self.domain {
            NumericDomain::Orthant { k1, k2 } => {
                let rx = laguerre(n, k1 - 1.0);
                let ry = if k2 == k1 { rx.clone() } else { laguerre(n, k2 - 1.0) };
                let mut s = 0.0;
                for (x, wx) in rx.nodes.iter().zip(&rx.weights) {
                    for (y, wy) in ry.nodes.iter().zip(&ry.weights) {
                        s += wx * wy * f(*x, *y);
                    }
                }
                s
            }
            NumericDomain::UnitBox => {
                let r = legendre01(n);
                let mut s = 0.0;
                for (x, wx) in r.nodes.iter().zip(&r.weights) {
                    for (y, wy) in r.nodes.iter().zip(&r.weights) {
                        s += wx * wy * f(*x, *y);
                    }
                }
                s
            }
            NumericDomain::UnitDisk => {
                let r = legendre01(n);
                let t = legendre01(2 * n);
                let mut s = 0.0;
                for (rho, wr) in r.nodes.iter().zip(&r.weights) {
                    for (u, wt) in t.nodes.iter().zip(&t.weights) {
                        let th = 2.0 * PI * u;
                        s += wr * wt * 2.0 * PI * rho * f(rho * th.cos(), rho * th.sin());
                    }
                }
                s
            }
        }
    }

    fn moment_scale(&self, i: u32, j: u32) -> f64 {
        match self.evaluator {
            Evaluator::Kibble { sigma1, sigma2, .. } => sigma1.powi(i as i32) * sigma2.powi(j as i32),
            _ => 1.0,
        }
    }
}

/// `E[x^i y^j]` by tensor Gaussian quadrature, doubling the node count until
/// successive estimates differ by less than `tol * max(1, |estimate|)`.
pub fn numeric_moment(nd: &NumericDensity, i: u32, j: u32, tol: f64) -> Result<f64, NumericError> {
    if tol < 1e-12 {
        return Err(NumericError::ToleranceTooSmall(tol));
    }
    let mut n = 8;
    let mut prev = nd.estimate(i, j, n);
    let mut change = f64::INFINITY;
    while n * 2 <= nd.node_cap() {
        n *= 2;
        let est = nd.estimate(i, j, n);
        change = (est - prev).abs();
        if change < tol * est.abs().max(1.0) {
            return Ok(est * nd.moment_scale(i, j));
        }
        prev = est;
    }
    Err(NumericError::NoConvergence { nodes: n, change })
}

/// Floating inverse entries at the mask positions of `M_d`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZiiResiduals {
    pub mask: ZiiMask,
    /// Signed inverse entries, one per mask pair.
    pub entries: Vec<f64>,
    /// `||M||_1 ||M^{-1}||_1`.
    pub condition: f64,
}

impl ZiiResiduals {
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Moment matrix of `nd` at degree `d` by quadrature.
pub fn numeric_moment_matrix(nd: &NumericDensity, d: u32, tol: f64) -> Result<Vec<Vec<f64>>, NumericError> {
    let basis = MonomialBasis::new(d);
    let mut cache = std::collections::BTreeMap::new();
    let n = basis.len();
    let mut m = vec![vec![0.0; n]; n];
    for r in 0..n {
        for c in 0..n {
            let (a1, a2) = basis.get(r);
            let (b1, b2) = basis.get(c);
            let key = (a1 + b1, a2 + b2);
            if let std::collections::btree_map::Entry::Vacant(e) = cache.entry(key) {
                e.insert(numeric_moment(nd, key.0, key.1, tol)?);
            }
            m[r][c] = cache[&key];
        }
    }
    Ok(m)
}

/// Inverse by Gauss-Jordan elimination with partial pivoting.
pub fn invert_f64(m: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, NumericError> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for k in 0..n {
        let p = (k..n).max_by(|&x, &y| a[x][k].abs().total_cmp(&a[y][k].abs())).unwrap();
        if a[p][k] == 0.0 || !a[p][k].is_finite() {
            return Err(NumericError::Singular);
        }
        a.swap(k, p);
        let pivot = a[k][k];
        for v in a[k].iter_mut() {
            *v /= pivot;
        }
        let row_k = a[k].clone();
        for (i, row) in a.iter_mut().enumerate() {
            if i != k && row[k] != 0.0 {
                let f = row[k];
                for (v, rk) in row.iter_mut().zip(&row_k) {
                    *v -= f * rk;
                }
            }
        }
    }
    Ok(a.into_iter().map(|row| row[n..].to_vec()).collect())
}

fn norm1(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    (0..n)
        .map(|c| m.iter().map(|row| row[c].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Floating cross-check of the ZII condition at degree `d`.
pub fn numeric_zii_residuals(nd: &NumericDensity, d: u32, tol: f64) -> Result<ZiiResiduals, NumericError> {
    let m = numeric_moment_matrix(nd, d, tol)?;
    zii_residuals_from_matrix(&m, d)
}

pub fn zii_residuals_from_matrix(m: &[Vec<f64>], d: u32) -> Result<ZiiResiduals, NumericError> {
    let inv = invert_f64(m);
    let inv = match inv {
        Ok(inv) => inv,
        Err(NumericError::Singular) => {
            return Err(NumericError::IllConditioned {
                condition: f64::INFINITY,
            })
        }
        Err(e) => return Err(e),
    };
    let condition = norm1(m) * norm1(&inv);
    if !(condition <= MAX_CONDITION) {
        return Err(NumericError::IllConditioned { condition });
    }
    let mask = ZiiMask::new(&MonomialBasis::new(d));
    let entries = mask.pairs().iter().map(|&(r, c)| inv[r][c]).collect();
    Ok(ZiiResiduals {
        mask,
        entries,
        condition,
    })
}

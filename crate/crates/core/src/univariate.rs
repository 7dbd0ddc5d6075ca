//! Dense univariate polynomials over Q with exact real-root isolation.
//!
//! Real roots are isolated by Sturm-sequence bisection on the square-free
//! part. Rational roots are certified exactly: once an isolating interval is
//! narrower than `1 / (2 L^2)`, where `L` bounds the denominator of any
//! rational root, the only candidate is a continued-fraction convergent of
//! the midpoint.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::poly::{Poly, PolyError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UniPoly {
    /// Coefficients from the constant term up; no trailing zeros.
    coeffs: Vec<BigRational>,
}

/// A real root: exact when rational, otherwise an isolating open interval.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RealRoot {
    Rational(BigRational),
    Isolated { lo: BigRational, hi: BigRational },
}

impl RealRoot {
    /// Exact value, or the interval midpoint.
    pub fn approx(&self) -> BigRational {
        match self {
            RealRoot::Rational(r) => r.clone(),
            RealRoot::Isolated { lo, hi } => (lo + hi) / BigRational::from_integer(2.into()),
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.approx().to_f64().unwrap_or(f64::NAN)
    }

    pub fn is_rational(&self) -> bool {
        matches!(self, RealRoot::Rational(_))
    }
}

impl UniPoly {
    pub fn new(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        UniPoly { coeffs }
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        Self::new(coeffs.iter().map(|&c| BigRational::from_integer(c.into())).collect())
    }

    /// View of `p` as a polynomial in symbol `var`; every other symbol must be absent.
    pub fn from_poly(p: &Poly, var: usize) -> Result<Self, PolyError> {
        let mut coeffs = vec![BigRational::zero(); p.degree_in(var) as usize + 1];
        for (m, c) in p.terms() {
            if m.0.iter().enumerate().any(|(i, &e)| i != var && e > 0) {
                return Err(PolyError::NotUnivariate);
            }
            coeffs[m.0[var] as usize] += c;
        }
        Ok(Self::new(coeffs))
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn leading(&self) -> BigRational {
        self.coeffs.last().cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn sign_at(&self, x: &BigRational) -> i8 {
        sign(&self.eval(x))
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * BigRational::from_integer(k.into()))
                .collect(),
        )
    }

    pub fn monic(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let lc = self.leading();
        Self::new(self.coeffs.iter().map(|c| c / &lc).collect())
    }

    pub fn div_rem(&self, d: &UniPoly) -> (UniPoly, UniPoly) {
        assert!(!d.is_zero(), "division by zero polynomial");
        let mut rem = self.coeffs.clone();
        let dd = d.degree();
        let lc = d.leading();
        if rem.len() <= dd {
            return (UniPoly::new(vec![]), self.clone());
        }
        let mut quot = vec![BigRational::zero(); rem.len() - dd];
        for k in (0..quot.len()).rev() {
            let q = &rem[k + dd] / &lc;
            if q.is_zero() {
                continue;
            }
            for (j, dc) in d.coeffs.iter().enumerate() {
                rem[k + j] -= &q * dc;
            }
            quot[k] = q;
        }
        rem.truncate(dd);
        (UniPoly::new(quot), UniPoly::new(rem))
    }

    pub fn gcd(&self, other: &UniPoly) -> UniPoly {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = r.monic();
        }
        a.monic()
    }

    /// Product of the distinct irreducible factors (monic).
    pub fn square_free(&self) -> UniPoly {
        if self.degree() == 0 {
            return self.monic();
        }
        let g = self.gcd(&self.derivative());
        self.div_rem(&g).0.monic()
    }

    /// Integer multiple with coprime integer coefficients.
    pub fn primitive_integer(&self) -> Vec<BigInt> {
        let mut den = BigInt::one();
        for c in &self.coeffs {
            den = den.lcm(c.denom());
        }
        let ints: Vec<BigInt> = self
            .coeffs
            .iter()
            .map(|c| (c * BigRational::from_integer(den.clone())).to_integer())
            .collect();
        let g = ints.iter().fold(BigInt::zero(), |acc, c| acc.gcd(c));
        if g.is_zero() {
            return ints;
        }
        ints.into_iter().map(|c| c / &g).collect()
    }

    /// Every real root modulo multiplicity, in increasing order.
    ///
    /// Irrational roots come back as intervals of width at most `width`.
    pub fn real_roots(&self, width: &BigRational) -> Vec<RealRoot> {
        if self.degree() == 0 {
            return Vec::new();
        }
        let mut sf = self.square_free();
        let mut rational = Vec::new();
        let mut isolated = Vec::new();
        // Each exact rational root found is deflated out and the search restarts,
        // so interval endpoints never coincide with roots.
        'search: loop {
            isolated.clear();
            if sf.degree() == 0 {
                break;
            }
            if sf.degree() == 1 {
                rational.push(-&sf.coeffs[0] / &sf.coeffs[1]);
                break;
            }
            let sturm = sturm_sequence(&sf);
            let bound = cauchy_bound(&sf);
            let ints = sf.primitive_integer();
            let lc = ints.last().unwrap().abs();
            // Any rational root p/q has q | lc; isolate finer than 1/(2 lc^2).
            let cert_width = BigRational::new(BigInt::one(), BigInt::from(2) * &lc * &lc);
            let mut stack = vec![(-bound.clone(), bound)];
            while let Some((lo, hi)) = stack.pop() {
                let n = variations(&sturm, &lo) - variations(&sturm, &hi);
                if n == 0 {
                    continue;
                }
                if n == 1 {
                    match refine_single(&sf, &sturm, lo, hi, &cert_width, width) {
                        RealRoot::Rational(r) => {
                            sf = sf.deflate(&r);
                            rational.push(r);
                            continue 'search;
                        }
                        iso => isolated.push(iso),
                    }
                    continue;
                }
                let mid = midpoint(&lo, &hi);
                if sf.eval(&mid).is_zero() {
                    sf = sf.deflate(&mid);
                    rational.push(mid);
                    continue 'search;
                }
                stack.push((mid.clone(), hi));
                stack.push((lo, mid));
            }
            break;
        }
        let mut out: Vec<RealRoot> = rational.into_iter().map(RealRoot::Rational).collect();
        out.extend(isolated);
        out.sort_by_key(|a| a.approx());
        out
    }

    /// Quotient by `(x - r)` for an exact root `r`.
    fn deflate(&self, r: &BigRational) -> UniPoly {
        let lin = UniPoly::new(vec![-r.clone(), BigRational::one()]);
        let (q, rem) = self.div_rem(&lin);
        debug_assert!(rem.is_zero());
        q
    }
}

fn sign(v: &BigRational) -> i8 {
    if v.is_zero() {
        0
    } else if v.is_positive() {
        1
    } else {
        -1
    }
}

fn midpoint(a: &BigRational, b: &BigRational) -> BigRational {
    (a + b) / BigRational::from_integer(2.into())
}

pub fn sturm_sequence(p: &UniPoly) -> Vec<UniPoly> {
    let mut seq = vec![p.clone(), p.derivative()];
    loop {
        let n = seq.len();
        if seq[n - 1].is_zero() {
            seq.pop();
            break;
        }
        let (_, r) = seq[n - 2].div_rem(&seq[n - 1]);
        if r.is_zero() {
            break;
        }
        seq.push(UniPoly::new(r.coeffs.into_iter().map(|c| -c).collect()));
    }
    seq
}

/// Sign variations of the Sturm sequence at `x`.
pub(crate) fn variations(seq: &[UniPoly], x: &BigRational) -> i64 {
    let mut count = 0;
    let mut last = 0i8;
    for p in seq {
        let s = p.sign_at(x);
        if s == 0 {
            continue;
        }
        if last != 0 && s != last {
            count += 1;
        }
        last = s;
    }
    count
}

/// Strict bound: every real root lies in `(-B, B)`.
fn cauchy_bound(p: &UniPoly) -> BigRational {
    let lc = p.leading().abs();
    let max = p.coeffs[..p.degree()]
        .iter()
        .map(|c| c.abs() / &lc)
        .max()
        .unwrap_or_else(BigRational::zero);
    BigRational::one() + max
}

/// Narrow an interval holding exactly one root in `(lo, hi]`.
fn refine_single(
    sf: &UniPoly,
    sturm: &[UniPoly],
    mut lo: BigRational,
    mut hi: BigRational,
    cert_width: &BigRational,
    width: &BigRational,
) -> RealRoot {
    let target = if cert_width < width { cert_width } else { width };
    while &(&hi - &lo) > target {
        let mid = midpoint(&lo, &hi);
        if sf.eval(&mid).is_zero() {
            return RealRoot::Rational(mid);
        }
        if variations(sturm, &lo) - variations(sturm, &mid) == 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    if sf.eval(&hi).is_zero() {
        return RealRoot::Rational(hi);
    }
    for cand in convergents(&midpoint(&lo, &hi)) {
        if cand > lo && cand < hi && sf.eval(&cand).is_zero() {
            return RealRoot::Rational(cand);
        }
    }
    // Irrational: keep refining up to the requested width.
    while &(&hi - &lo) > width {
        let mid = midpoint(&lo, &hi);
        if variations(sturm, &lo) - variations(sturm, &mid) == 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    RealRoot::Isolated { lo, hi }
}

/// Continued-fraction convergents of a rational number.
fn convergents(x: &BigRational) -> Vec<BigRational> {
    let mut out = Vec::new();
    let (mut h0, mut h1) = (BigInt::zero(), BigInt::one());
    let (mut k0, mut k1) = (BigInt::one(), BigInt::zero());
    let mut rest = x.clone();
    for _ in 0..256 {
        let a = rest.floor().to_integer();
        let h2 = &a * &h1 + &h0;
        let k2 = &a * &k1 + &k0;
        out.push(BigRational::new(h2.clone(), k2.clone()));
        h0 = std::mem::replace(&mut h1, h2);
        k0 = std::mem::replace(&mut k1, k2);
        let frac = &rest - BigRational::from_integer(a);
        if frac.is_zero() {
            break;
        }
        rest = frac.recip();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::rat;

    fn width() -> BigRational {
        rat(1, 1_000_000_000_000)
    }

    #[test]
    fn rational_roots_are_exact() {
        // ell^2 + 2 ell = ell (ell + 2)
        let p = UniPoly::from_i64(&[0, 2, 1]);
        let roots = p.real_roots(&width());
        assert_eq!(
            roots,
            vec![
                RealRoot::Rational(BigRational::from_integer((-2).into())),
                RealRoot::Rational(BigRational::zero())
            ]
        );
    }

    #[test]
    fn no_real_roots() {
        assert!(UniPoly::from_i64(&[1, 0, 1]).real_roots(&width()).is_empty());
    }

    #[test]
    fn irrational_roots_isolated_to_width() {
        // x^2 - 2
        let roots = UniPoly::from_i64(&[-2, 0, 1]).real_roots(&width());
        assert_eq!(roots.len(), 2);
        for r in &roots {
            match r {
                RealRoot::Isolated { lo, hi } => {
                    assert!(hi - lo <= width());
                    assert!((r.to_f64().abs() - 2f64.sqrt()).abs() < 1e-11);
                }
                other => panic!("expected isolated root, got {other:?}"),
            }
        }
    }

    #[test]
    fn repeated_and_fractional_roots() {
        // (3x - 2)^2 (x + 5) (x^2 - 3)
        let a = UniPoly::from_i64(&[-2, 3]);
        let b = UniPoly::from_i64(&[5, 1]);
        let c = UniPoly::from_i64(&[-3, 0, 1]);
        let p = mul(&mul(&mul(&a, &a), &b), &c);
        let roots = p.real_roots(&width());
        let rational: Vec<_> = roots.iter().filter(|r| r.is_rational()).cloned().collect();
        assert_eq!(
            rational,
            vec![
                RealRoot::Rational(BigRational::from_integer((-5).into())),
                RealRoot::Rational(rat(2, 3))
            ]
        );
        assert_eq!(roots.len(), 4);
    }

    #[test]
    fn root_at_bisection_point() {
        // roots 0 and 1 and 1/2 land on dyadic midpoints
        let p = mul(
            &mul(&UniPoly::from_i64(&[0, 1]), &UniPoly::from_i64(&[-1, 1])),
            &UniPoly::from_i64(&[-1, 2]),
        );
        let roots = p.real_roots(&width());
        assert_eq!(roots.len(), 3);
        assert!(roots.iter().all(|r| r.is_rational()));
    }

    fn mul(a: &UniPoly, b: &UniPoly) -> UniPoly {
        let mut c = vec![BigRational::zero(); a.coeffs.len() + b.coeffs.len() - 1];
        for (i, x) in a.coeffs.iter().enumerate() {
            for (j, y) in b.coeffs.iter().enumerate() {
                c[i + j] += x * y;
            }
        }
        UniPoly::new(c)
    }

    #[test]
    fn gcd_and_square_free() {
        let p = UniPoly::from_i64(&[1, 2, 1]); // (x+1)^2
        assert_eq!(p.square_free(), UniPoly::from_i64(&[1, 1]));
        let q = UniPoly::from_i64(&[-1, 0, 1]);
        assert_eq!(p.gcd(&q), UniPoly::from_i64(&[1, 1]));
    }
}

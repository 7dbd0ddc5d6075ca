//! Exact moments against quadrature, and exact inverses against floating ones.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::ToPrimitive;
use zii_core::inverse::invert_exact;
use zii_core::matrix::MomentMatrix;
use zii_core::moments::{base_monomial_moment, BaseMeasure, DensityFamily};
use zii_core::numeric::{invert_f64, numeric_moment, Evaluator, NumericDensity, NumericDomain};
use zii_core::poly::{rat, Point, Poly};
use zii_core::symbols::SymbolTable;

const PI_F64: f64 = std::f64::consts::PI;

fn pi_point(family: &DensityFamily, values: &[(&str, BigRational)]) -> Point {
    let t = family.table();
    let mut p: Point = vec![None; t.len()];
    for (name, v) in values {
        p[t.lookup(name).unwrap()] = Some(v.clone());
    }
    p
}

fn exact_f64(m: &Poly, point: &Point) -> f64 {
    // PI stays symbolic in the exact path; substitute it only here.
    let t = m.table();
    let mut fp: Vec<f64> = point
        .iter()
        .map(|v| v.as_ref().map_or(0.0, |v| v.to_f64().unwrap()))
        .collect();
    fp[t.pi_index()] = PI_F64;
    m.eval_f64(&fp)
}

fn assert_agree(family: &DensityFamily, point: &Point, label: &str) {
    let nd = NumericDensity::from_family(family, point).unwrap();
    for p in 0..=8u32 {
        for q in 0..=8 - p {
            let exact = exact_f64(&family.moment(p, q).unwrap().partial_eval(point), point);
            let num = numeric_moment(&nd, p, q, 1e-12).unwrap();
            let rel = (exact - num).abs() / exact.abs().max(1e-300);
            let abs_ok = exact == 0.0 && num.abs() < 1e-12;
            assert!(abs_ok || rel < 1e-9, "{label} ({p},{q}): exact {exact} numeric {num}");
        }
    }
}

#[test]
fn base_measures_match_quadrature() {
    let t = SymbolTable::empty();
    for (k1, k2) in [(rat(1, 1), rat(1, 1)), (rat(2, 1), rat(3, 1)), (rat(5, 2), rat(1, 1))] {
        let f = DensityFamily::gamma_product(k1.clone(), k2.clone());
        assert_agree(&f, &vec![None; t.len()], &format!("gamma({k1},{k2})"));
    }
    for base in [BaseMeasure::UnitBox, BaseMeasure::UnitDisk] {
        let f = DensityFamily::polynomial(&t, base.clone(), BTreeMap::from([((0, 0), Poly::one(&t))]), vec![]).unwrap();
        assert_agree(&f, &vec![None; t.len()], base.tag());
    }
}

#[test]
fn shipped_families_match_quadrature() {
    let b = DensityFamily::bilinear_box();
    let pt = pi_point(
        &b,
        &[
            ("a00", rat(1, 3)),
            ("a01", rat(1, 1)),
            ("a10", rat(2, 1)),
            ("a11", rat(7, 5)),
        ],
    );
    assert_agree(&b, &pt, "bilinear");
    let d = DensityFamily::disk_quadratic();
    let pt = pi_point(
        &d,
        &[
            ("a", rat(2, 1)),
            ("b", rat(1, 2)),
            ("c", rat(-1, 2)),
            ("d", rat(5, 8)),
            ("v", rat(1, 1)),
        ],
    );
    assert_agree(&d, &pt, "disk quadratic");
    let s = DensityFamily::sum_power_exp();
    for ell in [0, 1, 3, 6] {
        let pt = pi_point(&s, &[("ell", rat(ell, 1))]);
        assert_agree(&s, &pt, &format!("sum-power-exp ell={ell}"));
    }
}

#[test]
fn gamma_unit_shapes_are_factorials() {
    let t = SymbolTable::empty();
    let base = BaseMeasure::OrthantGamma {
        k1: Poly::one(&t),
        k2: Poly::one(&t),
    };
    let fact = |n: u32| (1..=n as i64).product::<i64>();
    for i in 0..=10 {
        for j in 0..=10 {
            let m = base_monomial_moment(&t, &base, i, j).unwrap();
            assert_eq!(m.as_constant(), Some(rat(fact(i) * fact(j), 1)));
        }
    }
}

#[test]
fn disk_moments_parity_and_pi() {
    let t = SymbolTable::empty();
    let pi = t.pi_index();
    for i in 0..=12 {
        for j in 0..=12 {
            let m = base_monomial_moment(&t, &BaseMeasure::UnitDisk, i, j).unwrap();
            if i % 2 == 1 || j % 2 == 1 {
                assert!(m.is_zero());
            } else {
                let (mono, c) = m.leading().unwrap();
                assert_eq!(m.num_terms(), 1);
                assert_eq!(mono.0[pi], 1);
                assert!(*c > rat(0, 1));
            }
        }
    }
    let m = base_monomial_moment(&t, &BaseMeasure::UnitDisk, 2, 2).unwrap();
    assert_eq!(m.to_string(), "1/24*PI");
    let m = base_monomial_moment(&t, &BaseMeasure::UnitDisk, 0, 0).unwrap();
    assert_eq!(m.to_string(), "PI");
}

#[test]
fn moments_are_linear_in_coefficients() {
    let b = DensityFamily::bilinear_box();
    let t = b.table().clone();
    let v = |n| Poly::named(&t, n);
    let c1 = BTreeMap::from([((0, 0), v("a00")), ((1, 1), v("a11"))]);
    let c2 = BTreeMap::from([((1, 0), v("a10")), ((0, 1), v("a01")), ((1, 1), v("a00"))]);
    let mut sum = c1.clone();
    for (k, c) in &c2 {
        let e = sum.entry(*k).or_insert_with(|| Poly::zero(&t));
        *e = &*e + c;
    }
    let f = |c: BTreeMap<(u32, u32), Poly>| DensityFamily::polynomial(&t, BaseMeasure::UnitBox, c, vec![]).unwrap();
    let (f1, f2, fs) = (f(c1), f(c2), f(sum));
    for p in 0..4 {
        for q in 0..4 {
            assert_eq!(
                fs.moment(p, q).unwrap(),
                f1.moment(p, q).unwrap() + f2.moment(p, q).unwrap()
            );
        }
    }
}

fn numeric_matrix(m: &MomentMatrix, point: &Point) -> Vec<Vec<f64>> {
    m.entries()
        .iter()
        .map(|row| row.iter().map(|e| exact_f64(&e.partial_eval(point), point)).collect())
        .collect()
}

fn cholesky_ok(a: &[Vec<f64>]) -> bool {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = a[i][i] - s;
                if d <= 0.0 {
                    return false;
                }
                l[i][i] = d.sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    true
}

fn sample_points() -> Vec<(DensityFamily, Point)> {
    let b = DensityFamily::bilinear_box();
    let d = DensityFamily::disk_quadratic();
    let s = DensityFamily::sum_power_exp();
    vec![
        (
            b.clone(),
            pi_point(
                &b,
                &[
                    ("a00", rat(1, 1)),
                    ("a01", rat(1, 2)),
                    ("a10", rat(1, 3)),
                    ("a11", rat(2, 1)),
                ],
            ),
        ),
        (
            b.clone(),
            pi_point(
                &b,
                &[
                    ("a00", rat(1, 1)),
                    ("a01", rat(1, 1)),
                    ("a10", rat(1, 1)),
                    ("a11", rat(2, 1)),
                ],
            ),
        ),
        (
            d.clone(),
            pi_point(
                &d,
                &[
                    ("a", rat(1, 1)),
                    ("b", rat(1, 2)),
                    ("c", rat(-1, 2)),
                    ("d", rat(3, 4)),
                    ("v", rat(1, 1)),
                ],
            ),
        ),
        (s.clone(), pi_point(&s, &[("ell", rat(2, 1))])),
        (s.clone(), pi_point(&s, &[("ell", rat(0, 1))])),
    ]
}

#[test]
fn moment_matrices_are_positive_definite_at_feasible_points() {
    let pe = DensityFamily::product_exponential();
    for d in 1..=3 {
        let m = MomentMatrix::build(&pe, d).unwrap();
        assert!(cholesky_ok(&numeric_matrix(&m, &vec![None; pe.table().len()])));
    }
    for (family, point) in sample_points() {
        for d in 1..=2 {
            let m = MomentMatrix::build(&family, d).unwrap();
            assert!(cholesky_ok(&numeric_matrix(&m, &point)), "d={d}");
        }
    }
}

#[test]
fn adjugate_over_determinant_matches_floating_inverse() {
    for (family, point) in sample_points() {
        for d in 1..=2 {
            let m = MomentMatrix::build(&family, d).unwrap();
            let inv = invert_exact(&m).unwrap();
            let det = exact_f64(&inv.determinant().partial_eval(&point), &point);
            let float = invert_f64(&numeric_matrix(&m, &point)).unwrap();
            for (r, row) in inv.adjugate().iter().enumerate() {
                for (c, adj) in row.iter().enumerate() {
                    let exact = exact_f64(&adj.partial_eval(&point), &point) / det;
                    let scale = exact.abs().max(1.0);
                    assert!(
                        (exact - float[r][c]).abs() < 1e-8 * scale,
                        "d={d} ({r},{c}) {exact} vs {}",
                        float[r][c]
                    );
                }
            }
        }
    }
}

#[test]
fn numeric_disk_density_matches_polar_closed_form() {
    // x^2 y^2 against the unit disk, integrated as a density coefficient.
    let nd = NumericDensity {
        domain: NumericDomain::UnitDisk,
        evaluator: Evaluator::Polynomial(vec![((2, 2), 1.0)]),
    };
    let v = numeric_moment(&nd, 0, 0, 1e-12).unwrap();
    assert!((v - std::f64::consts::PI / 24.0).abs() < 1e-12);
}

//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.
//!
//! Each criterion has a wall-clock budget; exceeding it is a failure.

mod common;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use zii_core::collapse::{
    check_product_form, collapse_order, moment_factorization_check, AnalysisOptions, ProductVerdict,
};
use zii_core::dsl::{parse_density_spec, parse_expr, render_spec, render_xy, DslError};
use zii_core::inverse::{compute_mask, invert_exact, zii_equations, ZiiMask};
use zii_core::matrix::{MomentMatrix, MonomialBasis};
use zii_core::moments::{BaseMeasure, DensityFamily};
use zii_core::numeric::{numeric_moment, numeric_zii_residuals, NumericDensity};
use zii_core::poly::{rat, Monomial, Point, Poly};
use zii_core::symbols::{Assumption, Symbol, SymbolTable};

type Outcome = Result<Vec<String>, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn point(f: &DensityFamily, values: &[(&str, BigRational)]) -> Point {
    let t = f.table();
    let mut p: Point = vec![None; t.len()];
    for (name, v) in values {
        p[t.lookup(name).expect("declared")] = Some(v.clone());
    }
    p
}

fn table(rows: &[&[(i64, i64)]]) -> Vec<Vec<BigRational>> {
    rows.iter()
        .map(|r| r.iter().map(|&(n, d)| rat(n, d)).collect())
        .collect()
}

fn constant_matrix(m: &MomentMatrix) -> Result<Vec<Vec<BigRational>>, String> {
    m.entries()
        .iter()
        .map(|row| {
            row.iter()
                .map(|p| p.as_constant().ok_or("non-constant entry".to_string()))
                .collect()
        })
        .collect()
}

fn constant_inverse(m: &MomentMatrix) -> Result<Vec<Vec<BigRational>>, String> {
    let inv = invert_exact(m).map_err(err)?;
    let n = m.size();
    (0..n)
        .map(|r| {
            (0..n)
                .map(|c| inv.constant_entry(r, c).ok_or("non-constant inverse".to_string()))
                .collect()
        })
        .collect()
}

fn printed_m2_inverse() -> Vec<Vec<BigRational>> {
    let i = |n| (n, 1);
    let (h, q) = ((1, 2), (1, 4));
    table(&[
        &[i(6), i(-4), i(-4), h, i(1), h],
        &[i(-4), i(6), i(1), i(-1), i(-1), i(0)],
        &[i(-4), i(1), i(6), i(0), i(-1), i(-1)],
        &[h, i(-1), i(0), q, i(0), i(0)],
        &[i(1), i(-1), i(-1), i(0), i(1), i(0)],
        &[h, i(0), i(-1), i(0), i(0), q],
    ])
}

fn c1_printed_matrices() -> Outcome {
    let f = DensityFamily::product_exponential();
    let m1 = MomentMatrix::build(&f, 1).map_err(err)?;
    let m2 = MomentMatrix::build(&f, 2).map_err(err)?;
    let want_m1 = table(&[
        &[(1, 1), (1, 1), (1, 1)],
        &[(1, 1), (2, 1), (1, 1)],
        &[(1, 1), (1, 1), (2, 1)],
    ]);
    let want_m1_inv = table(&[
        &[(3, 1), (-1, 1), (-1, 1)],
        &[(-1, 1), (1, 1), (0, 1)],
        &[(-1, 1), (0, 1), (1, 1)],
    ]);
    let r = |v: [i64; 6]| v.map(|n| (n, 1));
    let want_m2 = table(&[
        &r([1, 1, 1, 2, 1, 2]),
        &r([1, 2, 1, 6, 2, 2]),
        &r([1, 1, 2, 2, 2, 6]),
        &r([2, 6, 2, 24, 6, 4]),
        &r([1, 2, 2, 6, 4, 6]),
        &r([2, 2, 6, 4, 6, 24]),
    ]);
    ensure(constant_matrix(&m1)? == want_m1, || "M1 differs".into())?;
    ensure(constant_inverse(&m1)? == want_m1_inv, || "M1 inverse differs".into())?;
    ensure(constant_matrix(&m2)? == want_m2, || "M2 differs".into())?;
    ensure(constant_inverse(&m2)? == printed_m2_inverse(), || {
        "M2 inverse differs".into()
    })?;
    Ok(vec!["M1, M1^-1, M2, M2^-1 equal entry for entry".into()])
}

fn c2_mask() -> Outcome {
    let m1 = ZiiMask::new(&MonomialBasis::new(1));
    ensure(m1.pairs() == [(1, 2)], || format!("d=1 mask {:?}", m1.pairs()))?;
    let m2 = ZiiMask::new(&MonomialBasis::new(2));
    let printed = printed_m2_inverse();
    let zeros: Vec<(usize, usize)> = (0..6)
        .flat_map(|r| (r..6).map(move |c| (r, c)))
        .filter(|&(r, c)| printed[r][c].is_zero())
        .collect();
    ensure(m2.pairs() == zeros.as_slice(), || {
        format!("d=2 mask {:?} vs zeros {zeros:?}", m2.pairs())
    })?;
    let basis = MonomialBasis::new(14);
    let e = basis.exponents();
    let mut brute = Vec::new();
    for r in 0..e.len() {
        for c in r..e.len() {
            if e[r].0.max(e[c].0) + e[r].1.max(e[c].1) > 14 {
                brute.push((r, c));
            }
        }
    }
    let m14 = compute_mask(&basis);
    ensure(m14.pairs() == brute.as_slice(), || {
        "d=14 mask differs from brute force".into()
    })?;
    Ok(vec![format!(
        "d=1 {{(2,3)}}; d=2 {} pairs on the printed zeros; d=14 {} pairs over {} monomials",
        m2.len(),
        m14.len(),
        basis.len()
    )])
}

fn c3_sum_power_exp() -> Outcome {
    let f = DensityFamily::sum_power_exp();
    let m = MomentMatrix::build(&f, 1).map_err(err)?;
    let sys = zii_equations(&f, 1).map_err(err)?;
    ensure(sys.equations().len() == 1, || {
        format!("{} equations", sys.equations().len())
    })?;
    let eq = &sys.equations()[0];
    for l in 0..=10i64 {
        let pt = point(&f, &[("ell", rat(l, 1))]);
        let at = |r, c| m.entry(r, c).eval(&pt).map_err(err);
        let v = at(0, 0)? * at(1, 2)? - at(1, 0)? * at(0, 2)?;
        let raw = eq.raw.eval(&pt).map_err(err)?;
        ensure(raw == -v.clone(), || {
            format!("ell={l}: cofactor {raw} is not -v = {}", -v.clone())
        })?;
        let normalized = eq.equation.eval(&pt).map_err(err)?;
        if l == 0 {
            ensure(v.is_zero() && normalized.is_zero(), || "ell=0 not a root".into())?;
        } else {
            ensure(v < rat(0, 1), || format!("v({l}) = {v} is not negative"))?;
            ensure(!normalized.is_zero(), || format!("normalized equation vanishes at {l}"))?;
        }
    }
    let report = collapse_order(&f, 3, &AnalysisOptions::default()).map_err(err)?;
    ensure(report.order == Some(1), || format!("order {:?}", report.order))?;
    ensure(report.summary() == "collapse order: 1; witness ell=0", || {
        report.summary()
    })?;
    let verdict = check_product_form(&f, &point(&f, &[("ell", rat(0, 1))])).map_err(err)?;
    ensure(verdict == ProductVerdict::ProductForm, || {
        format!("check at ell=0: {verdict}")
    })?;
    Ok(vec![format!("{}; check ell=0: {verdict}", report.summary())])
}

fn c4_bilinear() -> Outcome {
    let f = DensityFamily::bilinear_box();
    let sys = zii_equations(&f, 1).map_err(err)?;
    let eqs: Vec<String> = sys.equations().iter().map(|e| e.equation.to_string()).collect();
    ensure(eqs == ["a00*a11 - a01*a10"], || format!("degree-1 system {eqs:?}"))?;
    let pt = point(
        &f,
        &[
            ("a00", rat(1, 1)),
            ("a10", rat(2, 1)),
            ("a01", rat(3, 1)),
            ("a11", rat(6, 1)),
        ],
    );
    let verdict = check_product_form(&f, &pt).map_err(err)?;
    ensure(verdict == ProductVerdict::ProductForm, || format!("verdict {verdict}"))?;
    let t = moment_factorization_check(&f, &pt, 3).map_err(err)?;
    ensure(
        t.entries
            .iter()
            .all(|(_, r)| matches!(r, zii_core::collapse::Residual::Exact(v) if v.is_zero())),
        || "a factorization residual is not exactly 0".into(),
    )?;
    Ok(vec![format!(
        "system [{} = 0]; (1,2,3,6): {verdict}, residuals exactly 0 for p,q <= 3",
        eqs[0]
    )])
}

fn c5_disk() -> Outcome {
    let f = DensityFamily::disk_quadratic();
    let sys1 = zii_equations(&f, 1).map_err(err)?;
    let eqs: Vec<String> = sys1.equations().iter().map(|e| e.equation.to_string()).collect();
    ensure(eqs == ["b + c"], || format!("degree-1 system {eqs:?}"))?;

    // Degree 2 on b + c = 0 with v = 1.
    let t = f.table().clone();
    let idx = |n: &str| t.lookup(n).expect("declared");
    let subs = BTreeMap::from([(idx("b"), -Poly::named(&t, "c")), (idx("v"), Poly::one(&t))]);
    let g = f.substitute(&subs);
    let sys2 = zii_equations(&g, 2).map_err(err)?;
    ensure(!sys2.equations().is_empty(), || "no degree-2 equation".into())?;
    let mask = sys2.mask();
    let mut lines = Vec::new();
    for e in sys2.equations() {
        let labels: Vec<String> = e.pairs.iter().map(|&p| mask.pair_label(p)).collect();
        lines.push(format!(
            "engine degree-2 equation: {} = 0  [{}]",
            e.equation,
            labels.join(", ")
        ));
    }

    let printed_quadratic = |a: f64, d: f64| 3.0 * a * a + 36.0 * a + 22.0 * d * a + 48.0 + 3.0 * d * d + 36.0 * d;
    let mut points = 0;
    let mut agree = 0;
    let mut printed_agree = 0;
    let mut compared = 0;
    for ai in 0..6 {
        for di in 0..6 {
            // Density 1 + a x^2 + d y^2 stays positive on the disk for a, d > -1.
            let a = rat(-3, 4) + rat(ai, 1) * rat(3, 4);
            let d = rat(-2, 3) + rat(di, 1) * rat(2, 3);
            let pt = point(
                &g,
                &[
                    ("a", a.clone()),
                    ("b", rat(0, 1)),
                    ("c", rat(0, 1)),
                    ("d", d.clone()),
                    ("v", rat(1, 1)),
                ],
            );
            let nd = NumericDensity::from_family(&g, &pt).map_err(err)?;
            let res = numeric_zii_residuals(&nd, 2, 1e-12).map_err(err)?;
            let (af, df) = (a.to_f64().unwrap(), d.to_f64().unwrap());
            points += 1;
            for e in sys2.equations() {
                let value = e.equation.eval(&pt).map_err(err)?.to_f64().unwrap();
                for &pair in &e.pairs {
                    let k = res.mask.pairs().iter().position(|&p| p == pair).expect("mask pair");
                    let inv = res.entries[k];
                    ensure(inv.abs() > 1e-9, || {
                        format!("inverse entry {inv:e} too small to sign at a={a}, d={d}")
                    })?;
                    compared += 1;
                    let expect = f64::from(e.sign) * value;
                    if expect.signum() == inv.signum() {
                        agree += 1;
                    }
                    if f64::from(e.sign) * printed_quadratic(af, df).signum() == inv.signum() {
                        printed_agree += 1;
                    }
                }
            }
        }
    }
    ensure(points >= 20, || format!("only {points} points"))?;
    ensure(agree == compared, || format!("sign agreement {agree}/{compared}"))?;
    lines.push(format!(
        "sign agreement with the floating inverse: {agree}/{compared} at {points} (a,d) points"
    ));
    let printed = "3*a^2 + 22*a*d + 3*d^2 + 36*a + 36*d + 48";
    let same = sys2.equations().iter().any(|e| e.equation.to_string() == printed);
    lines.push(format!(
        "printed quadratic 3a^2+36a+22da+48+3d^2+36d: {} the engine's equation; sign agreement {printed_agree}/{compared} (reported only)",
        if same { "identical to" } else { "differs from" }
    ));
    Ok(lines)
}

fn c6_product_measures() -> Outcome {
    let mut count = 0;
    for k1 in [rat(1, 1), rat(2, 1), rat(5, 2)] {
        for k2 in [rat(1, 1), rat(3, 1)] {
            let f = DensityFamily::gamma_product(k1.clone(), k2.clone());
            for d in 1..=4 {
                let sys = zii_equations(&f, d).map_err(err)?;
                ensure(
                    sys.equations().is_empty() && sys.vanishing().len() == sys.mask().len(),
                    || format!("k=({k1},{k2}) d={d}: {sys}"),
                )?;
                count += sys.mask().len();
            }
        }
    }
    Ok(vec![format!(
        "{count} mask cofactors over 6 shape pairs, d = 1..4, all identically zero"
    )])
}

fn shipped_exact_families() -> Result<Vec<(String, DensityFamily)>, String> {
    let dir = common::workspace_root().join("specs");
    let mut entries: Vec<_> = std::fs::read_dir(&dir)
        .map_err(err)?
        .map(|e| e.unwrap().path())
        .collect();
    entries.sort();
    let mut out = Vec::new();
    for path in entries
        .into_iter()
        .filter(|p| p.extension().is_some_and(|e| e == "toml"))
    {
        let f = parse_density_spec(&std::fs::read_to_string(&path).map_err(err)?).map_err(err)?;
        let name = path.file_stem().unwrap().to_string_lossy().into_owned();
        // Families without exact moments have no equation system to compare.
        if f.moment(0, 0).is_ok() {
            out.push((name, f));
        }
    }
    Ok(out)
}

fn c7_scaling() -> Outcome {
    let families = shipped_exact_families()?;
    for (name, f) in &families {
        for d in 1..=2 {
            let base = zii_equations(f, d).map_err(err)?.to_string();
            for c in [rat(2, 1), rat(7, 3)] {
                let scaled = zii_equations(&f.rescaled(&c), d).map_err(err)?.to_string();
                ensure(scaled == base, || format!("{name} d={d} c={c}"))?;
            }
        }
    }
    let names: Vec<&str> = families.iter().map(|(n, _)| n.as_str()).collect();
    Ok(vec![format!(
        "identical systems at d <= 2, c in {{2, 7/3}}: {}",
        names.join(", ")
    )])
}

fn c8_oracles() -> Outcome {
    let t = SymbolTable::empty();
    let mut worst: f64 = 0.0;
    let mut families = Vec::new();
    for (k1, k2) in [(rat(1, 1), rat(1, 1)), (rat(2, 1), rat(3, 1)), (rat(5, 2), rat(1, 1))] {
        families.push((format!("gamma({k1},{k2})"), DensityFamily::gamma_product(k1, k2)));
    }
    for base in [BaseMeasure::UnitBox, BaseMeasure::UnitDisk] {
        let one = BTreeMap::from([((0, 0), Poly::one(&t))]);
        families.push((
            base.tag().to_string(),
            DensityFamily::polynomial(&t, base, one, vec![]).map_err(err)?,
        ));
    }
    for (name, f) in &families {
        let pt: Point = vec![None; f.table().len()];
        let nd = NumericDensity::from_family(f, &pt).map_err(err)?;
        for p in 0..=8u32 {
            for q in 0..=8 - p {
                let m = f.moment(p, q).map_err(err)?;
                let mut fp = vec![0.0; f.table().len()];
                fp[f.table().pi_index()] = std::f64::consts::PI;
                let exact = m.eval_f64(&fp);
                let num = numeric_moment(&nd, p, q, 1e-12).map_err(err)?;
                let rel = if exact == 0.0 {
                    num.abs()
                } else {
                    ((exact - num) / exact).abs()
                };
                ensure(rel < 1e-9, || {
                    format!("{name} ({p},{q}): exact {exact} quadrature {num}")
                })?;
                worst = worst.max(rel);
            }
        }
    }
    let mut cov_err: f64 = 0.0;
    for k in 1..=9 {
        let rho = f64::from(k) / 10.0;
        let nd = NumericDensity::kibble(1.0, 1.0, rho).map_err(err)?;
        let m = |i, j| numeric_moment(&nd, i, j, 1e-10).map_err(err);
        let cov = m(1, 1)? - m(1, 0)? * m(0, 1)?;
        ensure((cov - rho).abs() < 2e-6, || format!("rho={rho}: covariance {cov}"))?;
        cov_err = cov_err.max((cov - rho).abs());
    }
    Ok(vec![
        format!("closed form vs quadrature, p+q <= 8 on gamma/box/disk: max relative error {worst:.2e}"),
        format!("correlated gamma covariance vs rho = 0.1..0.9: max error {cov_err:.2e} (nonzero, so never a product)"),
    ])
}

fn fuzz_table() -> std::sync::Arc<SymbolTable> {
    SymbolTable::new([
        Symbol::new("a", Assumption::None),
        Symbol::new("b", Assumption::Positive),
        Symbol::new("k", Assumption::NonnegInteger),
    ])
    .unwrap()
}

fn c9_parser() -> Outcome {
    let t = fuzz_table();
    let maps = prop::collection::vec(
        (
            (0u32..5, 0u32..5),
            prop::collection::vec(([0u16..3, 0u16..3, 0u16..2], -9i64..10, 1i64..5), 1..4),
        ),
        1..7,
    );
    let mut runner = TestRunner::new(Config {
        cases: 512,
        failure_persistence: None,
        ..Config::default()
    });
    runner
        .run(&maps, |raw| {
            let mut map: BTreeMap<(u32, u32), Poly> = BTreeMap::new();
            for (k, terms) in raw {
                let p = terms.iter().fold(Poly::zero(&t), |acc, (e, n, d)| {
                    acc + Poly::from_term(&t, Monomial(vec![0, e[0], e[1], e[2]]), rat(*n, *d))
                });
                let slot = map.entry(k).or_insert_with(|| Poly::zero(&t));
                *slot = &*slot + &p;
            }
            map.retain(|_, p| !p.is_zero());
            prop_assert_eq!(parse_expr(&render_xy(&map), &t).unwrap(), map.clone());
            if !map.is_empty() {
                let f = DensityFamily::polynomial(&t, BaseMeasure::UnitBox, map, vec![]).unwrap();
                prop_assert_eq!(parse_density_spec(&render_spec(&f)).unwrap(), f);
            }
            Ok(())
        })
        .map_err(|e| format!("round trip: {e}"))?;

    let atoms = prop::sample::select(vec![
        "x",
        "y",
        "a",
        "b",
        "k",
        "z",
        "PI",
        "2",
        "0",
        "7/3",
        "+",
        "-",
        "*",
        "/",
        "^",
        "(",
        ")",
        " ",
        "^(-2)",
        "^33",
        "^123456789012345678901234",
        "é",
        "0.5",
        ";",
        "((((",
        "))",
        "**",
        "y^",
        "/(",
        "/0",
    ]);
    let inputs = prop_oneof![
        prop::collection::vec(atoms, 0..48).prop_map(|v| v.concat()),
        ".{0,64}",
        prop::collection::vec(any::<u8>(), 0..64).prop_map(|b| String::from_utf8_lossy(&b).into_owned()),
    ];
    let mut runner = TestRunner::new(Config {
        cases: 10_000,
        failure_persistence: None,
        ..Config::default()
    });
    runner
        .run(&inputs, |input| {
            if let Err(e) = parse_expr(&input, &t) {
                let pos = match &e {
                    DslError::Syntax { pos, .. }
                    | DslError::UndeclaredSymbol { pos, .. }
                    | DslError::NonPolynomialInXY { pos, .. }
                    | DslError::DivisionBySymbol { pos }
                    | DslError::DivisionByZero { pos }
                    | DslError::ExponentBoundExceeded { pos, .. }
                    | DslError::TooLarge { pos, .. } => Some(*pos),
                    _ => None,
                };
                prop_assert!(pos.is_some_and(|p| p <= input.len()), "{:?} for {:?}", e, input);
            }
            Ok(())
        })
        .map_err(|e| format!("fuzz: {e}"))?;
    Ok(vec!["512 round trips; 10000 fuzz inputs, every error positioned".into()])
}

fn c10_determinism() -> Outcome {
    for (name, args) in common::GOLDEN {
        let mut outputs = Vec::new();
        for threads in ["1", "4"] {
            for _ in 0..2 {
                let out = common::zii(args, Some(threads));
                ensure(out.status.success(), || format!("{name}: exit {:?}", out.status.code()))?;
                outputs.push(out.stdout);
            }
        }
        ensure(outputs.windows(2).all(|w| w[0] == w[1]), || {
            format!("{name}: runs differ")
        })?;
        let golden = std::fs::read(common::golden_path(name)).map_err(err)?;
        ensure(outputs[0] == golden, || format!("{name}: differs from golden file"))?;
    }
    Ok(vec![format!(
        "{} golden examples byte-identical over 2 runs x ZII_THREADS in {{1, 4}}",
        common::GOLDEN.len()
    )])
}

fn main() {
    let criteria: [(&str, u64, fn() -> Outcome); 10] = [
        ("printed matrices and inverses", 1, c1_printed_matrices),
        ("mask correctness", 1, c2_mask),
        ("sum-power-exp collapse", 5, c3_sum_power_exp),
        ("bilinear collapse", 1, c4_bilinear),
        ("disk degree-1 condition and degree-2 cross-check", 10, c5_disk),
        ("product-measure zeros", 60, c6_product_measures),
        ("scaling invariance", 5, c7_scaling),
        ("oracle agreement", 30, c8_oracles),
        ("parser robustness", 60, c9_parser),
        ("determinism", 60, c10_determinism),
    ];
    let mut failed = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let over = elapsed > Duration::from_secs(*budget);
        let pass = outcome.is_ok() && !over;
        if !pass {
            failed += 1;
        }
        println!(
            "{} criterion {}: {name} ({:.2} s, budget {budget} s)",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            elapsed.as_secs_f64()
        );
        match outcome {
            Ok(notes) => notes.iter().for_each(|n| println!("    {n}")),
            Err(e) => println!("    {e}"),
        }
        if over {
            println!("    over budget");
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

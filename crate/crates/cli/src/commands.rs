//! Command implementations. Each returns the text and JSON payload of a report.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde_json::{json, Value};
use zii_core::collapse::{
    check_product_form, moment_factorization_check, AnalysisOptions, CollapseError, FactorizationTable, Residual,
    MAX_COLLAPSE_DEGREE,
};
use zii_core::dsl::{parse_rational, render_density};
use zii_core::inverse::{invert_exact, zii_equations};
use zii_core::matrix::{MomentMatrix, MonomialBasis};
use zii_core::moments::{DensityFamily, MomentError};
use zii_core::numeric::{numeric_moment, numeric_zii_residuals, NumericDensity, NumericError};
use zii_core::poly::{format_rational, Point};
use zii_core::{collapse_order, Error, ZiiMask};

use crate::mask;

/// Quadrature tolerance for `check`.
const NUMERIC_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum MaskFormat {
    Ascii,
    Svg,
    Report,
}

pub struct Output {
    pub text: String,
    pub payload: Value,
}

fn check_degree(d: u32) -> Result<(), Error> {
    if d > MAX_COLLAPSE_DEGREE {
        return Err(Error::Moment(MomentError::Unsupported(format!(
            "degree {d} exceeds the supported maximum {MAX_COLLAPSE_DEGREE}"
        ))));
    }
    Ok(())
}

fn grid(rows: &[Vec<String>]) -> Value {
    json!(rows)
}

fn strings(m: &[Vec<zii_core::Poly>]) -> Vec<Vec<String>> {
    m.iter()
        .map(|row| row.iter().map(|p| p.to_string()).collect())
        .collect()
}

pub fn mask(degree: u32, format: MaskFormat) -> Result<Output, Error> {
    check_degree(degree)?;
    let basis = MonomialBasis::new(degree);
    let m = ZiiMask::new(&basis);
    let text = match format {
        MaskFormat::Ascii => mask::ascii(&m),
        MaskFormat::Svg => mask::svg(&m),
        MaskFormat::Report => mask::report(&m),
    };
    let pairs: Vec<Value> = m
        .pairs()
        .iter()
        .map(|&(r, c)| json!({"row": r + 1, "col": c + 1, "label": m.pair_label((r, c))}))
        .collect();
    let payload = json!({
        "degree": degree,
        "basis": basis.labels(),
        "pairs": pairs,
        "forced_zero_cells": 2 * m.len(),
        "rendering": text,
    });
    Ok(Output { text, payload })
}

pub fn matrix(family: &DensityFamily, degree: u32) -> Result<Output, Error> {
    check_degree(degree)?;
    let m = MomentMatrix::build(family, degree)?;
    let payload = json!({
        "degree": degree,
        "density": render_density(family),
        "basis": m.basis().labels(),
        "entries": grid(&strings(m.entries())),
    });
    Ok(Output {
        text: m.to_string(),
        payload,
    })
}

pub fn inverse(family: &DensityFamily, degree: u32) -> Result<Output, Error> {
    check_degree(degree)?;
    let m = MomentMatrix::build(family, degree)?;
    let inv = invert_exact(&m)?;
    let mut text = inv.to_string();
    let n = m.size();
    // Spell out the inverse when the determinant is a number.
    let constant: Option<Vec<Vec<String>>> = inv.determinant().as_constant().map(|_| {
        (0..n)
            .map(|r| {
                (0..n)
                    .map(|c| format_rational(&inv.constant_entry(r, c).expect("constant")))
                    .collect()
            })
            .collect()
    });
    if let Some(rows) = &constant {
        let all_constant = (0..n).all(|r| (0..n).all(|c| inv.adjugate()[r][c].is_constant()));
        if all_constant {
            text.push_str("inverse:\n");
            for (r, row) in rows.iter().enumerate() {
                let _ = writeln!(text, "{}: [{}]", m.basis().label(r), row.join(", "));
            }
        }
    }
    let all_constant = (0..n).all(|r| (0..n).all(|c| inv.adjugate()[r][c].is_constant()));
    let payload = json!({
        "degree": degree,
        "density": render_density(family),
        "basis": m.basis().labels(),
        "determinant": inv.determinant().to_string(),
        "adjugate": grid(&strings(inv.adjugate())),
        "inverse": if all_constant { constant.map(|c| grid(&c)) } else { None },
    });
    Ok(Output { text, payload })
}

pub fn equations(family: &DensityFamily, degree: u32) -> Result<Output, Error> {
    check_degree(degree)?;
    let sys = zii_equations(family, degree)?;
    let mask = sys.mask();
    let eqs: Vec<Value> = sys
        .equations()
        .iter()
        .map(|e| {
            json!({
                "equation": format!("{} = 0", e.equation),
                "pairs": e.pairs.iter().map(|&p| mask.pair_label(p)).collect::<Vec<_>>(),
                "sign": e.sign,
            })
        })
        .collect();
    let payload = json!({
        "degree": degree,
        "density": render_density(family),
        "mask_pairs": mask.len(),
        "equations": eqs,
        "identically_zero": sys.vanishing().iter().map(|&p| mask.pair_label(p)).collect::<Vec<_>>(),
    });
    Ok(Output {
        text: sys.to_string(),
        payload,
    })
}

pub fn collapse(family: &DensityFamily, max_degree: u32, witnesses: usize) -> Result<Output, Error> {
    let opts = AnalysisOptions {
        max_witnesses: witnesses,
        ..AnalysisOptions::default()
    };
    let report = collapse_order(family, max_degree, &opts)?;
    let t = &report.table;
    let degrees: Vec<Value> = report
        .degrees
        .iter()
        .map(|r| {
            json!({
                "degree": r.degree,
                "equations": r.system.equations().iter().map(|e| format!("{} = 0", e.equation)).collect::<Vec<_>>(),
                "eliminations": r.analysis.eliminations.iter()
                    .map(|(i, p)| format!("{} = {}", t.name(*i), p)).collect::<Vec<_>>(),
                "remaining": r.analysis.reduced.iter().map(|p| format!("{p} = 0")).collect::<Vec<_>>(),
                "status": r.analysis.status.as_str(),
                "samples": r.analysis.samples,
                "exact_witnesses": r.analysis.exact_witness_count,
                "approximate_witnesses": r.analysis.approximate_witness_count,
                "min_residual": r.analysis.min_residual.map(|v| format!("{v:.3e}")),
                "witnesses": r.analysis.witnesses.iter().zip(&r.verdicts)
                    .map(|(w, v)| json!({"point": w.format(t), "approximate": w.approximate, "verdict": v.as_str()}))
                    .collect::<Vec<_>>(),
                "all_product": r.all_product,
                "collapsed": r.collapsed,
                "notes": r.analysis.notes,
            })
        })
        .collect();
    let payload = json!({
        "density": render_density(family),
        "max_degree": max_degree,
        "order": report.order,
        "summary": report.summary(),
        "degrees": degrees,
    });
    Ok(Output {
        text: report.to_string(),
        payload,
    })
}

/// `name=value,...` covering every declared parameter.
pub fn parse_point(family: &DensityFamily, at: &str) -> Result<Point, Error> {
    let t = family.table();
    let mut point: Point = vec![None; t.len()];
    for item in at.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (name, value) = item
            .split_once('=')
            .ok_or_else(|| Error::Usage(format!("--at: expected name=value, got `{item}`")))?;
        let (name, value) = (name.trim(), value.trim());
        let idx = t
            .lookup(name)
            .filter(|&i| i != t.pi_index())
            .ok_or_else(|| Error::Usage(format!("--at: `{name}` is not a declared parameter")))?;
        let v =
            parse_rational(value).ok_or_else(|| Error::Usage(format!("--at: `{value}` is not a rational number")))?;
        if point[idx].replace(v).is_some() {
            return Err(Error::Usage(format!("--at: `{name}` given twice")));
        }
    }
    let missing: Vec<&str> = t
        .parameters()
        .filter(|(i, _)| point[*i].is_none())
        .map(|(_, s)| s.name.as_str())
        .collect();
    if !missing.is_empty() {
        return Err(Error::Usage(format!("--at: no value for {}", missing.join(", "))));
    }
    for (i, s) in t.parameters() {
        let v = point[i].as_ref().expect("assigned");
        if !s.assumption.admits(v) {
            return Err(Error::ConstraintViolated(format!(
                "assumption {} on {} (value {})",
                s.assumption.as_str(),
                s.name,
                format_rational(v)
            )));
        }
    }
    for c in family.constraints() {
        if !c.holds_at(&point)? {
            return Err(Error::ConstraintViolated(format!("constraint `{c}`")));
        }
    }
    Ok(point)
}

fn numeric_factorization(nd: &NumericDensity, d: u32) -> Result<FactorizationTable, NumericError> {
    let mut memo = BTreeMap::new();
    let mut m = |p: u32, q: u32| -> Result<f64, NumericError> {
        if let Some(v) = memo.get(&(p, q)) {
            return Ok(*v);
        }
        let v = numeric_moment(nd, p, q, NUMERIC_TOL)?;
        memo.insert((p, q), v);
        Ok(v)
    };
    let m00 = m(0, 0)?;
    let mut entries = Vec::new();
    for p in 0..=d {
        for q in 0..=d {
            let r = m(p, q)? / m00 - (m(p, 0)? / m00) * (m(0, q)? / m00);
            entries.push(((p, q), Residual::Approx(r.abs())));
        }
    }
    Ok(FactorizationTable { degree: d, entries })
}

pub fn check(family: &DensityFamily, at: &str, degree: u32) -> Result<Output, Error> {
    check_degree(degree)?;
    let point = parse_point(family, at)?;
    let t = family.table();
    let shown: Vec<String> = t
        .parameters()
        .map(|(i, s)| format!("{}={}", s.name, format_rational(point[i].as_ref().unwrap())))
        .collect();
    let shown = if shown.is_empty() {
        "(no parameters)".to_string()
    } else {
        shown.join(", ")
    };
    let verdict = check_product_form(family, &point)?;
    let factorization = match moment_factorization_check(family, &point, degree) {
        Ok(tab) => tab,
        Err(CollapseError::Moment(MomentError::Unsupported(_))) => {
            numeric_factorization(&NumericDensity::from_family(family, &point)?, degree)?
        }
        Err(e) => return Err(e.into()),
    };
    let numeric = NumericDensity::from_family(family, &point)?;
    let zii = numeric_zii_residuals(&numeric, degree.max(1), NUMERIC_TOL);

    let mut text = String::new();
    let _ = writeln!(text, "point: {shown}");
    let _ = writeln!(text, "product form: {verdict}");
    let _ = writeln!(
        text,
        "moment factorization |E[x^p y^q] - E[x^p] E[y^q]|, p, q <= {degree}:"
    );
    let cells: Vec<String> = factorization.entries.iter().map(|(_, r)| r.to_string()).collect();
    let width = cells.iter().map(String::len).max().unwrap_or(1).max(3);
    let _ = write!(text, "{:>5}", "");
    for q in 0..=degree {
        let _ = write!(text, " {:>width$}", format!("q={q}"));
    }
    text.push('\n');
    for p in 0..=degree {
        let _ = write!(text, "{:>5}", format!("p={p}"));
        for q in 0..=degree {
            let _ = write!(text, " {:>width$}", factorization.get(p, q).unwrap().to_string());
        }
        text.push('\n');
    }
    let _ = writeln!(
        text,
        "factorization residuals: {}",
        if factorization.all_zero() {
            "all zero"
        } else {
            "not all zero"
        }
    );
    let zii_json = match &zii {
        Ok(res) => {
            let _ = writeln!(
                text,
                "numeric ZII residuals at degree {} (condition estimate {:.3e}):",
                degree.max(1),
                res.condition
            );
            let mut items = Vec::new();
            for (&pair, v) in res.mask.pairs().iter().zip(&res.entries) {
                let label = res.mask.pair_label(pair);
                let _ = writeln!(text, "  {label}: {:.3e}", v.abs());
                items.push(json!({"pair": label, "residual": format!("{:.3e}", v.abs())}));
            }
            let _ = writeln!(text, "max numeric ZII residual: {:.3e}", res.max_abs());
            json!({"condition": format!("{:.3e}", res.condition), "residuals": items})
        }
        Err(e) => {
            let _ = writeln!(text, "numeric ZII residuals: unavailable ({e})");
            json!({"error": e.to_string()})
        }
    };
    let payload = json!({
        "density": render_density(family),
        "point": shown,
        "verdict": verdict.as_str(),
        "degree": degree,
        "factorization": factorization.entries.iter()
            .map(|((p, q), r)| json!({"p": p, "q": q, "residual": r.to_string()})).collect::<Vec<_>>(),
        "factorization_all_zero": factorization.all_zero(),
        "numeric_zii": zii_json,
    });
    Ok(Output { text, payload })
}

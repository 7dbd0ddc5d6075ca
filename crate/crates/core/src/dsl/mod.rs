//! Density specification files.
//!
//! A spec is a TOML document:
//!
//! ```toml
//! domain = "unit-disk"          # orthant-gamma | unit-box | unit-disk | named:<family>
//! density = "v + a*x^2 + b*x*y + c*x*y + d*y^2"
//! params = ["a:none:-4..4", "b:-4..4", "c:-4..4", "d:-4..4", "v:positive:1..1"]
//! constraints = ["a*d - b*c = 1", "v = 1"]
//! ```
//!
//! `shapes = ["k1", "5/2"]` gives the gamma shapes on `orthant-gamma`
//! (default `["1", "1"]`). Named families take `args` instead of `density`:
//! `domain = "named:sum-power-exp"`, `args = ["ell"]`, or
//! `domain = "named:kibble-gamma"`, `args = ["s1", "s2", "rho"]`.

mod expr;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

pub use expr::{parse_expr, parse_param_poly, XyPoly, MAX_NESTING, MAX_PARAM_EXPONENT, MAX_TERMS};

use crate::matrix::monomial_label;
use crate::moments::{BaseMeasure, DensityFamily, FamilyKind, MomentError, NamedFamily, ParamConstraint, Relation};
use crate::poly::{format_rational, Poly};
use crate::symbols::{Assumption, Symbol, SymbolError, SymbolTable};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum DslError {
    #[error("syntax error at offset {pos}: expected {}, found {found}", expected.join(" or "))]
    Syntax {
        pos: usize,
        expected: Vec<String>,
        found: String,
    },
    #[error("undeclared symbol `{name}` at offset {pos}")]
    UndeclaredSymbol { pos: usize, name: String },
    #[error("not polynomial in x, y at offset {pos}: {detail}")]
    NonPolynomialInXY { pos: usize, detail: String },
    #[error("division by a parameter at offset {pos}; declare pre-divided coefficients instead")]
    DivisionBySymbol { pos: usize },
    #[error("division by zero at offset {pos}")]
    DivisionByZero { pos: usize },
    #[error("exponent {exponent} at offset {pos} exceeds the bound {bound}")]
    ExponentBoundExceeded { pos: usize, exponent: u32, bound: u32 },
    #[error("expression too large at offset {pos}: {detail}")]
    TooLarge { pos: usize, detail: String },
    #[error("in {field}: {source}")]
    InField {
        field: String,
        #[source]
        source: Box<DslError>,
    },
    #[error("invalid spec: {0}")]
    Spec(String),
    #[error("invalid spec file: {0}")]
    Toml(String),
    #[error(transparent)]
    Symbol(#[from] SymbolError),
    #[error(transparent)]
    Moment(#[from] MomentError),
}

impl DslError {
    fn in_field(self, field: impl Into<String>) -> Self {
        DslError::InField {
            field: field.into(),
            source: Box::new(self),
        }
    }
}

/// Surface form of a spec file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensitySpec {
    pub domain: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub args: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub params: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub constraints: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub shapes: Vec<String>,
}

impl DensitySpec {
    pub fn from_toml(text: &str) -> Result<Self, DslError> {
        toml::from_str(text).map_err(|e| DslError::Toml(e.message().to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("spec serializes")
    }

    /// Builds the family described by this spec.
    pub fn build(&self) -> Result<DensityFamily, DslError> {
        let symbols = self
            .params
            .iter()
            .map(|p| parse_param_decl(p))
            .collect::<Result<Vec<_>, _>>()?;
        let table = SymbolTable::new(symbols)?;
        let constraints = self
            .constraints
            .iter()
            .map(|c| parse_constraint(c, &table).map_err(|e| e.in_field(format!("constraint `{c}`"))))
            .collect::<Result<Vec<_>, _>>()?;
        let field_poly = |field: &str, text: &str| {
            parse_param_poly(text, &table).map_err(|e| e.in_field(format!("{field} `{text}`")))
        };
        if let Some(name) = self.domain.strip_prefix("named:") {
            if self.density.is_some() || !self.shapes.is_empty() {
                return Err(DslError::Spec(
                    "named families take `args`, not `density` or `shapes`".into(),
                ));
            }
            let args = self
                .args
                .iter()
                .map(|a| field_poly("argument", a))
                .collect::<Result<Vec<_>, _>>()?;
            let family = match (name, args.as_slice()) {
                ("sum-power-exp", [ell]) => NamedFamily::SumPowerExp { ell: ell.clone() },
                ("kibble-gamma", [s1, s2, rho]) => NamedFamily::KibbleGamma {
                    sigma1: s1.clone(),
                    sigma2: s2.clone(),
                    rho: rho.clone(),
                },
                ("sum-power-exp", _) => return Err(DslError::Spec("sum-power-exp takes one argument (ell)".into())),
                ("kibble-gamma", _) => {
                    return Err(DslError::Spec(
                        "kibble-gamma takes three arguments (sigma1, sigma2, rho)".into(),
                    ))
                }
                _ => return Err(DslError::Spec(format!("unknown named family `{name}`"))),
            };
            return Ok(DensityFamily::named(&table, family, constraints)?);
        }
        if !self.args.is_empty() {
            return Err(DslError::Spec("`args` is only valid for named families".into()));
        }
        let base = match self.domain.as_str() {
            "orthant-gamma" => {
                let (k1, k2) = match self.shapes.as_slice() {
                    [] => (Poly::one(&table), Poly::one(&table)),
                    [k1, k2] => (field_poly("shape", k1)?, field_poly("shape", k2)?),
                    _ => return Err(DslError::Spec("`shapes` needs exactly two entries".into())),
                };
                BaseMeasure::OrthantGamma { k1, k2 }
            }
            "unit-box" | "unit-disk" if !self.shapes.is_empty() => {
                return Err(DslError::Spec("`shapes` is only valid for orthant-gamma".into()))
            }
            "unit-box" => BaseMeasure::UnitBox,
            "unit-disk" => BaseMeasure::UnitDisk,
            other => return Err(DslError::Spec(format!("unknown domain `{other}`"))),
        };
        let text = self
            .density
            .as_deref()
            .ok_or_else(|| DslError::Spec("missing `density`".into()))?;
        let coeffs = parse_expr(text, &table).map_err(|e| e.in_field("density"))?;
        Ok(DensityFamily::polynomial(&table, base, coeffs, constraints)?)
    }

    /// Canonical surface form of `family`.
    pub fn from_family(family: &DensityFamily) -> Self {
        let table = family.table();
        let params = table.parameters().map(|(_, s)| render_param_decl(s)).collect();
        let constraints = family.constraints().iter().map(ToString::to_string).collect();
        match family.kind() {
            FamilyKind::Named(named) => DensitySpec {
                domain: format!("named:{}", named.tag()),
                density: None,
                args: named.args().iter().map(|p| p.to_string()).collect(),
                params,
                constraints,
                shapes: vec![],
            },
            FamilyKind::Polynomial { base, coeffs } => DensitySpec {
                domain: base.tag().to_string(),
                density: Some(render_xy(coeffs)),
                args: vec![],
                params,
                constraints,
                shapes: match base {
                    BaseMeasure::OrthantGamma { k1, k2 } => vec![k1.to_string(), k2.to_string()],
                    _ => vec![],
                },
            },
        }
    }
}

/// Parses a spec file into a family.
pub fn parse_density_spec(text: &str) -> Result<DensityFamily, DslError> {
    DensitySpec::from_toml(text)?.build()
}

/// Canonical spec text; `parse_density_spec(&render_spec(f)) == f` for unscaled families.
pub fn render_spec(family: &DensityFamily) -> String {
    DensitySpec::from_family(family).to_toml()
}

/// Density text, or `named:<family>(args)` for named families.
pub fn render_density(family: &DensityFamily) -> String {
    match family.kind() {
        FamilyKind::Polynomial { coeffs, .. } => render_xy(coeffs),
        FamilyKind::Named(named) => {
            let args: Vec<String> = named.args().iter().map(|p| p.to_string()).collect();
            format!("named:{}({})", named.tag(), args.join(", "))
        }
    }
}

/// Terms by descending total degree, then descending power of `x`.
pub fn render_xy(coeffs: &XyPoly) -> String {
    let mut keys: Vec<(u32, u32)> = coeffs.iter().filter(|(_, c)| !c.is_zero()).map(|(k, _)| *k).collect();
    if keys.is_empty() {
        return "0".to_string();
    }
    keys.sort_by(|a, b| (b.0 + b.1, b.0).cmp(&(a.0 + a.1, a.0)));
    let mut out = String::new();
    for (n, k) in keys.iter().enumerate() {
        let c = &coeffs[k];
        let mono = if *k == (0, 0) { None } else { Some(monomial_label(*k)) };
        let (neg, body) = match (c.num_terms(), &mono) {
            (1, _) => {
                let s = c.to_string();
                let (neg, abs) = match s.strip_prefix('-') {
                    Some(rest) => (true, rest.to_string()),
                    None => (false, s),
                };
                let body = match &mono {
                    None => abs,
                    Some(m) if abs == "1" => m.clone(),
                    Some(m) => format!("{abs}*{m}"),
                };
                (neg, body)
            }
            (_, None) => {
                if n == 0 {
                    (false, c.to_string())
                } else {
                    (false, format!("({c})"))
                }
            }
            (_, Some(m)) => (false, format!("({c})*{m}")),
        };
        match (n, neg) {
            (0, true) => out.push('-'),
            (0, false) => {}
            (_, true) => out.push_str(" - "),
            (_, false) => out.push_str(" + "),
        }
        out.push_str(&body);
    }
    out
}

/// `name[:assumption][:lo..hi]`.
pub fn parse_param_decl(text: &str) -> Result<Symbol, DslError> {
    let bad = |why: &str| DslError::Spec(format!("parameter `{text}`: {why}"));
    let mut parts = text.split(':').map(str::trim);
    let name = parts.next().unwrap_or_default();
    let mut assumption = Assumption::None;
    let mut bounds = None;
    for (k, part) in parts.enumerate() {
        if let Some((lo, hi)) = part.split_once("..") {
            if bounds.is_some() {
                return Err(bad("bounds given twice"));
            }
            let lo = parse_rational(lo.trim()).ok_or_else(|| bad("invalid lower bound"))?;
            let hi = parse_rational(hi.trim()).ok_or_else(|| bad("invalid upper bound"))?;
            bounds = Some((lo, hi));
        } else if k == 0 {
            assumption =
                Assumption::parse(part).ok_or_else(|| bad("assumption must be none, positive or nonneg-int"))?;
        } else {
            return Err(bad("expected `name[:assumption][:lo..hi]`"));
        }
    }
    let mut sym = Symbol::new(name, assumption);
    if let Some((lo, hi)) = bounds {
        sym = sym.with_bounds(lo, hi);
    }
    Ok(sym)
}

fn render_param_decl(s: &Symbol) -> String {
    let mut out = format!("{}:{}", s.name, s.assumption.as_str());
    if let Some((lo, hi)) = &s.bounds {
        let _ = write!(out, ":{}..{}", format_rational(lo), format_rational(hi));
    }
    out
}

/// Signed rational literal `[-]p[/q]`.
pub fn parse_rational(text: &str) -> Option<BigRational> {
    let (neg, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    let value = match body.split_once('/') {
        Some((p, q)) if digits(p) && digits(q) => {
            let q: num_bigint::BigInt = q.parse().ok()?;
            if q == num_bigint::BigInt::from(0) {
                return None;
            }
            BigRational::new(p.parse().ok()?, q)
        }
        None if digits(body) => BigRational::from_integer(body.parse().ok()?),
        _ => return None,
    };
    Some(if neg { -value } else { value })
}

/// `lhs REL rhs` with REL one of `=`, `>`, `>=`, `<`, `<=`.
pub fn parse_constraint(text: &str, table: &Arc<SymbolTable>) -> Result<ParamConstraint, DslError> {
    let ops = [(">=", 2), ("<=", 2), ("=", 1), (">", 1), ("<", 1)];
    let (at, op) = ops
        .iter()
        .filter_map(|&(op, len)| text.find(op).map(|at| (at, &text[at..at + len])))
        .min_by_key(|&(at, op)| (at, std::cmp::Reverse(op.len())))
        .ok_or_else(|| DslError::Spec(format!("constraint `{text}` has no relation (=, >, >=, <, <=)")))?;
    let lhs_text = &text[..at];
    let rhs_text = &text[at + op.len()..];
    if ["=", "<", ">"].iter().any(|o| rhs_text.contains(o)) {
        return Err(DslError::Spec(format!(
            "constraint `{text}` has more than one relation"
        )));
    }
    let lhs = parse_param_poly(lhs_text, table)?;
    let rhs = parse_param_poly(rhs_text, table).map_err(|e| shift(e, at + op.len()))?;
    Ok(match op {
        "=" => ParamConstraint::new(lhs - rhs, Relation::Eq),
        ">" => ParamConstraint::new(lhs - rhs, Relation::Gt),
        ">=" => ParamConstraint::new(lhs - rhs, Relation::Ge),
        "<" => ParamConstraint::new(rhs - lhs, Relation::Gt),
        _ => ParamConstraint::new(rhs - lhs, Relation::Ge),
    })
}

fn shift(e: DslError, by: usize) -> DslError {
    match e {
        DslError::Syntax { pos, expected, found } => DslError::Syntax {
            pos: pos + by,
            expected,
            found,
        },
        DslError::UndeclaredSymbol { pos, name } => DslError::UndeclaredSymbol { pos: pos + by, name },
        DslError::NonPolynomialInXY { pos, detail } => DslError::NonPolynomialInXY { pos: pos + by, detail },
        DslError::DivisionBySymbol { pos } => DslError::DivisionBySymbol { pos: pos + by },
        DslError::DivisionByZero { pos } => DslError::DivisionByZero { pos: pos + by },
        DslError::ExponentBoundExceeded { pos, exponent, bound } => DslError::ExponentBoundExceeded {
            pos: pos + by,
            exponent,
            bound,
        },
        DslError::TooLarge { pos, detail } => DslError::TooLarge { pos: pos + by, detail },
        other => other,
    }
}

/// Shipped specs, keyed by file stem.
pub fn builtin_families() -> BTreeMap<&'static str, DensityFamily> {
    BTreeMap::from([
        ("product-exponential", DensityFamily::product_exponential()),
        ("sum-power-exp", DensityFamily::sum_power_exp()),
        ("bilinear-box", DensityFamily::bilinear_box()),
        ("disk-quadratic", DensityFamily::disk_quadratic()),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::rat;

    #[test]
    fn bilinear_spec_matches_builtin() {
        let spec = r#"
            domain = "unit-box"
            density = "a11*x*y + a10*x + a01*y + a00"
            params = ["a00:positive:0..2", "a01:positive:0..2", "a10:positive:0..2", "a11:positive:0..2"]
        "#;
        assert_eq!(parse_density_spec(spec).unwrap(), DensityFamily::bilinear_box());
        assert_eq!(
            render_density(&DensityFamily::bilinear_box()),
            "a11*x*y + a10*x + a01*y + a00"
        );
    }

    #[test]
    fn disk_spec_matches_builtin() {
        let spec = r#"
            domain = "unit-disk"
            density = "v + a*x^2 + c*x*y + b*x*y + d*y^2"
            params = ["a:-4..4", "b:-4..4", "c:-4..4", "d:-4..4", "v:positive:1..1"]
            constraints = ["a*d - b*c = 1", "v = 1"]
        "#;
        assert_eq!(parse_density_spec(spec).unwrap(), DensityFamily::disk_quadratic());
        assert_eq!(
            render_density(&DensityFamily::disk_quadratic()),
            "a*x^2 + (b + c)*x*y + d*y^2 + v"
        );
    }

    #[test]
    fn named_family_specs() {
        let spec = "domain = \"named:sum-power-exp\"\nargs = [\"ell\"]\nparams = [\"ell:nonneg-int:0..10\"]\n";
        let f = parse_density_spec(spec).unwrap();
        assert_eq!(f, DensityFamily::sum_power_exp());
        assert_eq!(render_density(&f), "named:sum-power-exp(ell)");
        let k = parse_density_spec(
            "domain = \"named:kibble-gamma\"\nargs = [\"1\", \"1\", \"rho\"]\nparams = [\"rho:positive:0..1\"]\nconstraints = [\"rho < 1\"]\n",
        )
        .unwrap();
        assert_eq!(render_density(&k), "named:kibble-gamma(1, 1, rho)");
        assert_eq!(k.constraints()[0].to_string(), "-rho + 1 > 0");
    }

    #[test]
    fn round_trips_builtins() {
        for f in builtin_families().values() {
            let text = render_spec(f);
            assert_eq!(&parse_density_spec(&text).unwrap(), f, "{text}");
        }
        let g = DensityFamily::gamma_product(rat(5, 2), rat(3, 1));
        assert_eq!(parse_density_spec(&render_spec(&g)).unwrap(), g);
    }

    #[test]
    fn render_edge_cases() {
        let t = SymbolTable::new([Symbol::new("a", Assumption::None)]).unwrap();
        assert_eq!(render_xy(&XyPoly::new()), "0");
        let p = parse_expr("-x*y + (a - 1) - 1/2*a*x^2 + y", &t).unwrap();
        let s = render_xy(&p);
        assert_eq!(s, "-1/2*a*x^2 - x*y + y + (a - 1)");
        assert_eq!(parse_expr(&s, &t).unwrap(), p);
    }

    #[test]
    fn spec_errors() {
        let e = parse_density_spec("domain = \"unit-box\"\ndensity = \"x^(-1)\"\n").unwrap_err();
        assert!(
            matches!(e, DslError::InField { ref source, .. } if matches!(**source, DslError::NonPolynomialInXY { .. }))
        );
        let e = parse_density_spec("domain = \"unit-box\"\ndensity = \"0*x\"\n").unwrap_err();
        assert_eq!(e, DslError::Moment(MomentError::ZeroDensity));
        assert!(matches!(
            parse_density_spec("domain = \"torus\"\ndensity = \"1\"\n"),
            Err(DslError::Spec(_))
        ));
        assert!(matches!(parse_density_spec("domain = 3"), Err(DslError::Toml(_))));
        assert!(matches!(
            parse_density_spec("domain = \"unit-box\"\ndensity = \"1\"\nfoo = 1\n"),
            Err(DslError::Toml(_))
        ));
        assert!(parse_param_decl("a:sometimes").is_err());
        assert!(parse_param_decl("a:positive:2..1").is_ok());
        assert!(matches!(
            parse_density_spec("domain = \"unit-box\"\ndensity = \"a\"\nparams = [\"a:positive:2..1\"]\n"),
            Err(DslError::Symbol(SymbolError::EmptyBounds(_)))
        ));
    }

    #[test]
    fn constraints() {
        let t = SymbolTable::new(["a", "b"].iter().map(|n| Symbol::new(*n, Assumption::None))).unwrap();
        assert_eq!(parse_constraint("a*b = 1", &t).unwrap().to_string(), "a*b - 1 = 0");
        assert_eq!(parse_constraint("a >= b", &t).unwrap().to_string(), "a - b >= 0");
        assert_eq!(parse_constraint("a <= 2", &t).unwrap().to_string(), "-a + 2 >= 0");
        assert!(parse_constraint("a = b = 1", &t).is_err());
        assert!(matches!(
            parse_constraint("a = q", &t),
            Err(DslError::UndeclaredSymbol { pos: 4, .. })
        ));
    }

    #[test]
    fn rationals() {
        assert_eq!(parse_rational("-3/4"), Some(rat(-3, 4)));
        assert_eq!(parse_rational("10"), Some(rat(10, 1)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("1.5"), None);
    }
}

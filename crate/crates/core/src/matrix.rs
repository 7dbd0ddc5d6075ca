//! Graded monomial basis and the truncated moment matrix.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::moments::{DensityFamily, MomentError};
use crate::poly::Poly;
use crate::symbols::SymbolTable;

/// Monomials `x^i y^j` with `i + j <= d`, ordered 1, x, y, x^2, x*y, y^2, x^3, ...
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonomialBasis {
    degree: u32,
    exponents: Vec<(u32, u32)>,
}

impl MonomialBasis {
    pub fn new(degree: u32) -> Self {
        let mut exponents = Vec::with_capacity(basis_size(degree));
        for i in 0..=degree {
            for j in 0..=i {
                exponents.push((i - j, j));
            }
        }
        MonomialBasis { degree, exponents }
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    pub fn exponents(&self) -> &[(u32, u32)] {
        &self.exponents
    }

    pub fn get(&self, idx: usize) -> (u32, u32) {
        self.exponents[idx]
    }

    pub fn label(&self, idx: usize) -> String {
        monomial_label(self.exponents[idx])
    }

    pub fn labels(&self) -> Vec<String> {
        (0..self.len()).map(|i| self.label(i)).collect()
    }
}

pub fn basis_size(d: u32) -> usize {
    let d = d as usize;
    (d + 1) * (d + 2) / 2
}

/// `1`, `x`, `y^2`, `x^2*y`, ...
pub fn monomial_label((i, j): (u32, u32)) -> String {
    let part = |v: &str, e: u32| match e {
        0 => None,
        1 => Some(v.to_string()),
        e => Some(format!("{v}^{e}")),
    };
    let factors: Vec<String> = [part("x", i), part("y", j)].into_iter().flatten().collect();
    if factors.is_empty() {
        "1".to_string()
    } else {
        factors.join("*")
    }
}

/// Symmetric matrix of exact moments over a [`MonomialBasis`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MomentMatrix {
    basis: MonomialBasis,
    table: Arc<SymbolTable>,
    entries: Vec<Vec<Poly>>,
}

impl MomentMatrix {
    /// Builds `M_d`. Distinct exponent sums are computed once, in parallel.
    pub fn build(family: &DensityFamily, degree: u32) -> Result<Self, MomentError> {
        let basis = MonomialBasis::new(degree);
        let mut sums: Vec<(u32, u32)> = Vec::new();
        for p in 0..=2 * degree {
            for q in 0..=2 * degree - p {
                sums.push((p, q));
            }
        }
        let moments: BTreeMap<(u32, u32), Poly> = sums
            .par_iter()
            .map(|&(p, q)| family.moment(p, q).map(|m| ((p, q), m)))
            .collect::<Result<_, _>>()?;
        let n = basis.len();
        let entries = (0..n)
            .map(|r| {
                let (a1, a2) = basis.get(r);
                (0..n)
                    .map(|c| {
                        let (b1, b2) = basis.get(c);
                        moments[&(a1 + b1, a2 + b2)].clone()
                    })
                    .collect()
            })
            .collect();
        Ok(MomentMatrix {
            basis,
            table: family.table().clone(),
            entries,
        })
    }

    /// Wraps explicit entries; `entries` must be square with side `basis.len()`.
    pub fn from_entries(basis: MonomialBasis, table: &Arc<SymbolTable>, entries: Vec<Vec<Poly>>) -> Self {
        assert_eq!(entries.len(), basis.len());
        assert!(entries.iter().all(|row| row.len() == basis.len()));
        MomentMatrix {
            basis,
            table: table.clone(),
            entries,
        }
    }

    pub fn basis(&self) -> &MonomialBasis {
        &self.basis
    }

    pub fn table(&self) -> &Arc<SymbolTable> {
        &self.table
    }

    pub fn size(&self) -> usize {
        self.basis.len()
    }

    pub fn entry(&self, r: usize, c: usize) -> &Poly {
        &self.entries[r][c]
    }

    pub fn entries(&self) -> &[Vec<Poly>] {
        &self.entries
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.size();
        (0..n).all(|r| (r + 1..n).all(|c| self.entries[r][c] == self.entries[c][r]))
    }

    /// Leading `k x k` block.
    pub fn leading_block(&self, k: usize) -> Vec<Vec<Poly>> {
        self.entries[..k].iter().map(|row| row[..k].to_vec()).collect()
    }

    /// Applies `f` to every entry.
    pub fn map_entries(&self, f: impl Fn(&Poly) -> Poly) -> Self {
        MomentMatrix {
            basis: self.basis.clone(),
            table: self.table.clone(),
            entries: self.entries.iter().map(|row| row.iter().map(&f).collect()).collect(),
        }
    }
}

impl fmt::Display for MomentMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_labeled_matrix(f, &self.basis, &self.entries)
    }
}

/// One line per row: `label: [e1, e2, ...]`.
pub(crate) fn write_labeled_matrix(
    f: &mut fmt::Formatter<'_>,
    basis: &MonomialBasis,
    entries: &[Vec<Poly>],
) -> fmt::Result {
    writeln!(f, "basis: [{}]", basis.labels().join(", "))?;
    for (r, row) in entries.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|p| p.to_string()).collect();
        writeln!(f, "{}: [{}]", basis.label(r), cells.join(", "))?;
    }
    Ok(())
}

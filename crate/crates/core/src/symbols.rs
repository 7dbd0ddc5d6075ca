//! Parameter symbols and their assumptions.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num_rational::BigRational;

/// Name of the transcendental unit carried by disk moments.
pub const PI: &str = "PI";

/// What is known about the sign and type of a parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Assumption {
    None,
    Positive,
    NonnegInteger,
}

impl Assumption {
    pub fn parse(text: &str) -> Option<Self> {
        match text {
            "" | "none" => Some(Assumption::None),
            "positive" => Some(Assumption::Positive),
            "nonneg-int" => Some(Assumption::NonnegInteger),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Assumption::None => "none",
            Assumption::Positive => "positive",
            Assumption::NonnegInteger => "nonneg-int",
        }
    }

    /// True when `value` is admissible for a symbol carrying this assumption.
    pub fn admits(self, value: &BigRational) -> bool {
        use num_traits::Signed;
        match self {
            Assumption::None => true,
            Assumption::Positive => value.is_positive(),
            Assumption::NonnegInteger => value.is_integer() && !value.is_negative(),
        }
    }
}

/// A declared parameter.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Symbol {
    pub name: String,
    pub assumption: Assumption,
    /// Closed search interval used by grid sampling, when declared.
    pub bounds: Option<(BigRational, BigRational)>,
}

impl Symbol {
    pub fn new(name: impl Into<String>, assumption: Assumption) -> Self {
        Symbol {
            name: name.into(),
            assumption,
            bounds: None,
        }
    }

    pub fn with_bounds(mut self, lo: BigRational, hi: BigRational) -> Self {
        self.bounds = Some((lo, hi));
        self
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum SymbolError {
    #[error("duplicate symbol `{0}`")]
    Duplicate(String),
    #[error("symbol name `{0}` is reserved")]
    Reserved(String),
    #[error("invalid symbol name `{0}`")]
    InvalidName(String),
    #[error("empty bounds for `{0}`: lower bound exceeds upper bound")]
    EmptyBounds(String),
}

/// Ordered set of parameter symbols.
///
/// Symbols are kept sorted by name so that monomial ordering, and therefore
/// every printed equation, does not depend on declaration order. `PI` is
/// always present and always positive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolTable {
    symbols: Vec<Symbol>,
    index: HashMap<String, usize>,
}

impl SymbolTable {
    pub fn new(declared: impl IntoIterator<Item = Symbol>) -> Result<Arc<Self>, SymbolError> {
        let mut symbols = vec![Symbol::new(PI, Assumption::Positive)];
        for sym in declared {
            if sym.name == PI || sym.name == "x" || sym.name == "y" {
                return Err(SymbolError::Reserved(sym.name));
            }
            if !is_identifier(&sym.name) {
                return Err(SymbolError::InvalidName(sym.name));
            }
            if let Some((lo, hi)) = &sym.bounds {
                if lo > hi {
                    return Err(SymbolError::EmptyBounds(sym.name));
                }
            }
            if symbols.iter().any(|s| s.name == sym.name) {
                return Err(SymbolError::Duplicate(sym.name));
            }
            symbols.push(sym);
        }
        symbols.sort_by(|a, b| a.name.cmp(&b.name));
        let index = symbols.iter().enumerate().map(|(i, s)| (s.name.clone(), i)).collect();
        Ok(Arc::new(SymbolTable { symbols, index }))
    }

    /// Table with only `PI`; used for purely numeric families.
    pub fn empty() -> Arc<Self> {
        Self::new([]).expect("empty table is valid")
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn get(&self, idx: usize) -> &Symbol {
        &self.symbols[idx]
    }

    pub fn name(&self, idx: usize) -> &str {
        &self.symbols[idx].name
    }

    pub fn lookup(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn pi_index(&self) -> usize {
        self.index[PI]
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &Symbol)> {
        self.symbols.iter().enumerate()
    }

    /// Declared parameters, i.e. everything except `PI`.
    pub fn parameters(&self) -> impl Iterator<Item = (usize, &Symbol)> {
        self.iter().filter(|(_, s)| s.name != PI)
    }

    pub fn is_positive(&self, idx: usize) -> bool {
        self.symbols[idx].assumption == Assumption::Positive
    }
}

impl fmt::Display for SymbolTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.symbols.iter().map(|s| s.name.as_str()).collect();
        write!(f, "[{}]", names.join(", "))
    }
}

pub(crate) fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

//! Exact truncated moment matrices for bivariate densities, the
//! zeros-in-the-inverse (ZII) equations they induce on density parameters,
//! and a search for the degree at which those equations force independence.

pub mod collapse;
pub mod dsl;
pub mod inverse;
pub mod matrix;
pub mod moments;
pub mod numeric;
mod packed;
pub mod poly;
pub mod symbols;
pub mod univariate;

pub use collapse::{collapse_order, AnalysisOptions, CollapseReport, ProductVerdict};
pub use dsl::{parse_density_spec, render_spec, DensitySpec};
pub use inverse::{invert_exact, zii_equations, EquationSystem, ExactInverse, ZiiMask};
pub use matrix::{MomentMatrix, MonomialBasis};
pub use moments::DensityFamily;
pub use poly::Poly;
pub use symbols::SymbolTable;

/// Failure classes of the whole pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Dsl(#[from] dsl::DslError),
    #[error(transparent)]
    Moment(#[from] moments::MomentError),
    #[error(transparent)]
    Inverse(#[from] inverse::InverseError),
    #[error(transparent)]
    Collapse(#[from] collapse::CollapseError),
    #[error(transparent)]
    Numeric(#[from] numeric::NumericError),
    #[error(transparent)]
    Poly(#[from] poly::PolyError),
    #[error("point violates {0}")]
    ConstraintViolated(String),
    #[error("{0}")]
    Usage(String),
}

/// Coarse class of an [`Error`], stable across versions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Malformed spec, expression or argument.
    Parse,
    /// Determinant identically zero.
    Singular,
    /// Family or request outside what the engine handles.
    Unsupported,
    /// Numeric point outside the declared constraints.
    Constraint,
    /// A self-check failed.
    Internal,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        use collapse::CollapseError as C;
        use inverse::InverseError as I;
        use moments::MomentError as M;
        let moment = |m: &M| match m {
            M::Poly(_) => ErrorClass::Internal,
            M::ZeroDensity | M::InvalidShape(_) | M::ExponentBound(_) => ErrorClass::Parse,
            _ => ErrorClass::Unsupported,
        };
        let inverse = |i: &I| match i {
            I::Singular => ErrorClass::Singular,
            I::Moment(m) => moment(m),
            _ => ErrorClass::Internal,
        };
        match self {
            Error::Dsl(dsl::DslError::Moment(m)) => moment(m),
            Error::Dsl(_) | Error::Usage(_) => ErrorClass::Parse,
            Error::Moment(m) => moment(m),
            Error::Inverse(i) => inverse(i),
            Error::Collapse(C::Inverse(i)) => inverse(i),
            Error::Collapse(C::Moment(m)) => moment(m),
            Error::Collapse(C::DegreeTooLarge(_)) => ErrorClass::Unsupported,
            Error::Collapse(_) => ErrorClass::Internal,
            Error::Numeric(numeric::NumericError::Poly(_)) => ErrorClass::Parse,
            Error::Numeric(numeric::NumericError::Invalid(_)) => ErrorClass::Constraint,
            Error::Numeric(_) => ErrorClass::Unsupported,
            Error::Poly(_) => ErrorClass::Internal,
            Error::ConstraintViolated(_) => ErrorClass::Constraint,
        }
    }
}

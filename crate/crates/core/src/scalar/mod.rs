//! Exact scalar arithmetic: multivariate polynomials and rational functions
//! over the rationals.
//!
//! Polynomial gcds use content extraction plus a primitive pseudo-remainder
//! sequence on one main variable, recursing into the coefficients. That is
//! plenty for the handful of low-degree symbols (`a`, `b`, `r`, `s`) that the
//! metric and cloak computations produce.

mod poly;
mod ratfun;

use std::collections::BTreeMap;

pub use poly::{Monomial, Polynomial};
pub use ratfun::RationalFunction;



/// Exact rational numbers.
pub type Rational = num::BigRational;

/// Symbol assignment used for numeric evaluation.
pub type Bindings = BTreeMap<String, Rational>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScalarError {
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("unbound symbol `{0}`")]
    UnboundSymbol(String),
    #[error("pole: denominator vanishes at the evaluation point")]
    Pole,
}

/// Convenience constructor for integer-valued rationals.
pub fn rat(n: i64) -> Rational {
    Rational::from_integer(n.into())
}

/// Convenience constructor for `n / d`.
pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

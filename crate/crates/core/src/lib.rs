//! Score-based explanations for query answers over relational databases and
//! for binary classifier outcomes.
//!
//! Scores are generic over [`num::Scalar`]; the crate-root aliases pin the
//! exact rational instantiation used by the reports and the CLI.

pub mod num;
pub mod query;
pub mod relational;
pub mod repair;
pub mod causality;
pub mod score;
pub mod classifier;
pub mod asp;

pub use num::Scalar;

/// Exact arbitrary-precision rational; the type every report uses.
pub type Rational = num_rational::BigRational;

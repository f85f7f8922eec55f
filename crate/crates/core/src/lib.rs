//! Output-size bounds for full conjunctive queries from ℓp-norms of degree
//! sequences.
//!
//! Bounds are linear programs over the polymatroid, normal or modular cone,
//! solved exactly over rationals so that certificates and equalities between
//! bounds can be checked without tolerances. Set functions are generic over
//! [`Scalar`]; the aliases below fix the two instantiations used in practice.

pub mod bounds;
pub mod entropy_cone;
pub mod evaluator;
pub mod lp;
pub mod query;
pub mod relalg;
pub mod scalar;
pub mod seqnorm;
pub mod varset;
pub mod worstcase;

pub use bounds::{log_bound, BoundReport, Cone};
pub use entropy_cone::{LinearTerm, SetFunction};
pub use query::{ConcreteStatistic, Norm, Query, StatisticSpec};
pub use relalg::{Database, DegreeSequence, Relation};
pub use scalar::{Rational, Scalar};
pub use varset::VarSet;

/// Set function with exact rational values (LP optima, certificates).
pub type ExactSetFunction = SetFunction<Rational>;
/// Set function with `f64` values (empirical entropies).
pub type FloatSetFunction = SetFunction<f64>;
/// Single-precision set function.
pub type F32SetFunction = SetFunction<f32>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("missing relation {0}")]
    MissingRelation(String),
    #[error("unguarded statistic: {0}")]
    Unguarded(String),
    #[error("{n} variables exceed the cap of {cap}")]
    TooManyVariables { n: usize, cap: usize },
    #[error("{0}")]
    Domain(String),
    #[error("statistics violated: {0}")]
    Violated(String),
    #[error("invalid certificate: {0}")]
    InvalidCertificate(String),
    #[error("memory budget exceeded: {0}")]
    Budget(String),
    #[error("linear program failed: {0}")]
    Lp(String),
}

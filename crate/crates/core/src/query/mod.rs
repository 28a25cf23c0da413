//! Conjunctive queries, their unions, denial constraints and inclusion
//! dependencies: syntax, printing and structural analyses.

mod analysis;
mod ast;
mod parser;

pub use analysis::{
    dc_as_query, has_self_join, instantiate, is_hierarchical, negate_to_dc, negate_ucq, path_queries,
    Hierarchy,
};
pub use ast::{
    Atom, Cq, DenialConstraint, HardConstraint, InclusionDependency, Span, Statement, Term, Ucq,
};
pub use parser::{parse, parse_denials, parse_hard_constraints, parse_queries, parse_query};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum QueryError {
    #[error("query-lang: syntax error at {line}:{column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("query-lang: head variable `{variable}` of `{query}` (line {line}) does not occur in the body")]
    UnboundHeadVariable { query: String, variable: String, line: usize },
    #[error("query-lang: `{0}` is not a Boolean query")]
    NotBoolean(String),
    #[error("query-lang: dichotomy precondition violated: `{0}` has a self-join")]
    SelfJoin(String),
    #[error("query-lang: {0}")]
    Malformed(String),
}

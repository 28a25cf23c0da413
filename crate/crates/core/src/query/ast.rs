use std::collections::BTreeSet;
use std::fmt;

/// Source position of a parsed item. Compares equal to every other span so
/// that structural equality of ASTs ignores where they came from.
#[derive(Clone, Copy, Debug, Default, Eq)]
pub struct Span {
    pub line: usize,
    pub column: usize,
}

impl PartialEq for Span {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl std::hash::Hash for Span {
    fn hash<H: std::hash::Hasher>(&self, _: &mut H) {}
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    Const(String),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Self {
        Term::Var(name.into())
    }

    pub fn constant(name: impl Into<String>) -> Self {
        Term::Const(name.into())
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Atom {
    pub relation: String,
    pub terms: Vec<Term>,
    pub span: Span,
}

impl Atom {
    pub fn new(relation: impl Into<String>, terms: Vec<Term>) -> Self {
        Atom { relation: relation.into(), terms, span: Span::default() }
    }

    pub fn arity(&self) -> usize {
        self.terms.len()
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().filter_map(Term::as_var)
    }
}

/// A conjunctive query `name(head) :- body.`
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Cq {
    pub name: String,
    pub head: Vec<String>,
    pub body: Vec<Atom>,
    pub span: Span,
}

impl Cq {
    pub fn boolean(name: impl Into<String>, body: Vec<Atom>) -> Self {
        Cq { name: name.into(), head: Vec::new(), body, span: Span::default() }
    }

    pub fn is_boolean(&self) -> bool {
        self.head.is_empty()
    }

    /// Variables of the body that are not in the head, in order of first occurrence.
    pub fn existential_vars(&self) -> Vec<String> {
        let mut seen = Vec::new();
        for v in self.body.iter().flat_map(Atom::vars) {
            if !self.head.iter().any(|h| h == v) && !seen.iter().any(|s: &String| s == v) {
                seen.push(v.to_string());
            }
        }
        seen
    }

    pub fn relations(&self) -> BTreeSet<&str> {
        self.body.iter().map(|a| a.relation.as_str()).collect()
    }
}

/// A union of conjunctive queries sharing one head signature.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Ucq {
    pub disjuncts: Vec<Cq>,
}

impl Ucq {
    pub fn name(&self) -> &str {
        &self.disjuncts[0].name
    }

    pub fn arity(&self) -> usize {
        self.disjuncts[0].head.len()
    }

    pub fn is_boolean(&self) -> bool {
        self.arity() == 0
    }

    /// The single conjunctive query, if the union has exactly one disjunct.
    pub fn as_cq(&self) -> Option<&Cq> {
        match self.disjuncts.as_slice() {
            [cq] => Some(cq),
            _ => None,
        }
    }
}

impl From<Cq> for Ucq {
    fn from(cq: Cq) -> Self {
        Ucq { disjuncts: vec![cq] }
    }
}

/// `:- body.`: the body must never hold.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DenialConstraint {
    pub body: Vec<Atom>,
    pub span: Span,
}

impl DenialConstraint {
    pub fn new(body: Vec<Atom>) -> Self {
        DenialConstraint { body, span: Span::default() }
    }
}

/// `Source(..) -> exists U..: Target(..).`
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct InclusionDependency {
    pub source: Atom,
    pub target: Atom,
    pub existentials: Vec<String>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Statement {
    Query(Cq),
    Denial(DenialConstraint),
    Inclusion(InclusionDependency),
}

/// A constraint that interventions must preserve.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum HardConstraint {
    Denial(DenialConstraint),
    Inclusion(InclusionDependency),
}

/// Whether a constant can be printed bare or must be quoted.
pub(crate) fn is_bare_constant(text: &str) -> bool {
    let mut chars = text.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() || c.is_ascii_digit() => {
            chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        }
        _ => false,
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => f.write_str(v),
            Term::Const(c) if is_bare_constant(c) => f.write_str(c),
            Term::Const(c) => write!(f, "'{}'", c.replace('\'', "''")),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.relation)?;
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{t}")?;
        }
        f.write_str(")")
    }
}

fn write_body(f: &mut fmt::Formatter<'_>, body: &[Atom]) -> fmt::Result {
    for (i, a) in body.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{a}")?;
    }
    Ok(())
}

impl fmt::Display for Cq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({}) :- ", self.name, self.head.join(", "))?;
        write_body(f, &self.body)?;
        f.write_str(".")
    }
}

impl fmt::Display for Ucq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, cq) in self.disjuncts.iter().enumerate() {
            if i > 0 {
                f.write_str("\n")?;
            }
            write!(f, "{cq}")?;
        }
        Ok(())
    }
}

impl fmt::Display for DenialConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(":- ")?;
        write_body(f, &self.body)?;
        f.write_str(".")
    }
}

impl fmt::Display for InclusionDependency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> ", self.source)?;
        if !self.existentials.is_empty() {
            write!(f, "exists {}: ", self.existentials.join(", "))?;
        }
        write!(f, "{}.", self.target)
    }
}

impl fmt::Display for Statement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Statement::Query(q) => q.fmt(f),
            Statement::Denial(d) => d.fmt(f),
            Statement::Inclusion(i) => i.fmt(f),
        }
    }
}

impl fmt::Display for HardConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HardConstraint::Denial(d) => d.fmt(f),
            HardConstraint::Inclusion(i) => i.fmt(f),
        }
    }
}

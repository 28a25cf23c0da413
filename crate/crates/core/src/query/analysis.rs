use std::collections::BTreeSet;

use super::ast::*;
use super::QueryError;

/// The denial constraint `¬q` of a Boolean query: same body, verbatim.
pub fn negate_to_dc(q: &Cq) -> Result<DenialConstraint, QueryError> {
    if !q.is_boolean() {
        return Err(QueryError::NotBoolean(q.to_string()));
    }
    Ok(DenialConstraint { body: q.body.clone(), span: q.span })
}

/// One denial constraint per disjunct of a Boolean union.
pub fn negate_ucq(q: &Ucq) -> Result<Vec<DenialConstraint>, QueryError> {
    q.disjuncts.iter().map(negate_to_dc).collect()
}

/// Reads a denial constraint's body back as a Boolean query named `q`.
pub fn dc_as_query(dc: &DenialConstraint) -> Cq {
    Cq { name: "q".into(), head: Vec::new(), body: dc.body.clone(), span: dc.span }
}

pub fn has_self_join(q: &Cq) -> bool {
    let mut seen = BTreeSet::new();
    q.body.iter().any(|a| !seen.insert(a.relation.as_str()))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Hierarchy {
    Hierarchical,
    /// Two existential variables whose atom sets overlap without nesting.
    NotHierarchical(String, String),
}

impl Hierarchy {
    pub fn is_hierarchical(&self) -> bool {
        matches!(self, Hierarchy::Hierarchical)
    }
}

/// Hierarchy test for self-join-free Boolean conjunctive queries: for every
/// two variables, their atom sets are nested or disjoint.
pub fn is_hierarchical(q: &Cq) -> Result<Hierarchy, QueryError> {
    if !q.is_boolean() {
        return Err(QueryError::NotBoolean(q.to_string()));
    }
    if has_self_join(q) {
        return Err(QueryError::SelfJoin(q.to_string()));
    }
    let vars = q.existential_vars();
    let atoms_of: Vec<BTreeSet<usize>> = vars
        .iter()
        .map(|v| {
            q.body
                .iter()
                .enumerate()
                .filter(|(_, a)| a.vars().any(|x| x == v))
                .map(|(i, _)| i)
                .collect()
        })
        .collect();
    for i in 0..vars.len() {
        for j in i + 1..vars.len() {
            let (a, b) = (&atoms_of[i], &atoms_of[j]);
            if !(a.is_subset(b) || b.is_subset(a) || a.is_disjoint(b)) {
                return Ok(Hierarchy::NotHierarchical(vars[i].clone(), vars[j].clone()));
            }
        }
    }
    Ok(Hierarchy::Hierarchical)
}

/// Substitutes an answer tuple for the head variables, yielding a Boolean query.
pub fn instantiate(q: &Cq, answer: &[String]) -> Result<Cq, QueryError> {
    if answer.len() != q.head.len() {
        return Err(QueryError::Malformed(format!(
            "`{}` has {} head variables but the answer has {} values",
            q.name,
            q.head.len(),
            answer.len()
        )));
    }
    let subst = |t: &Term| match t {
        Term::Var(v) => match q.head.iter().position(|h| h == v) {
            Some(i) => Term::Const(answer[i].clone()),
            None => t.clone(),
        },
        Term::Const(_) => t.clone(),
    };
    let body = q
        .body
        .iter()
        .map(|a| Atom { relation: a.relation.clone(), terms: a.terms.iter().map(subst).collect(), span: a.span })
        .collect();
    Ok(Cq { name: q.name.clone(), head: Vec::new(), body, span: q.span })
}

/// The union of path queries of lengths `1..=max_len` from `from` to `to`
/// over the binary relation `relation`; a bounded stand-in for reachability.
pub fn path_queries(name: &str, relation: &str, from: &str, to: &str, max_len: usize) -> Ucq {
    let disjuncts = (1..=max_len)
        .map(|len| {
            let node = |i: usize| {
                if i == 0 {
                    Term::constant(from)
                } else if i == len {
                    Term::constant(to)
                } else if len == 2 {
                    Term::var("Z")
                } else {
                    Term::var(format!("Z{i}"))
                }
            };
            let body = (0..len).map(|i| Atom::new(relation, vec![node(i), node(i + 1)])).collect();
            Cq::boolean(name, body)
        })
        .collect();
    Ucq { disjuncts }
}

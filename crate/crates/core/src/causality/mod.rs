//! Actual causes, contingency sets and responsibility for Boolean query
//! answers: tuple level, attribute level, and under hard integrity constraints.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::num::{inverse_succ, serialize_ratio, Scalar};
use crate::query::{negate_ucq, Atom, HardConstraint, InclusionDependency, Term, Ucq};
use crate::relational::{holds, satisfies, witnesses, Cell, CompiledBody, Database, RelationalError, TupleId};
use crate::repair::hitting::{self, for_each_k_subset};
use crate::repair::{violation_cells, RepairError};
use crate::Rational;

/// Largest contingency pool the direct search under constraints accepts.
pub const MAX_POOL: usize = 24;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum CausalityError {
    #[error(transparent)]
    Relational(#[from] RelationalError),
    #[error(transparent)]
    Repair(#[from] RepairError),
    #[error("causality-engine: nothing to explain: the query is false in the instance")]
    NothingToExplain,
    #[error("causality-engine: `{0}` is not a Boolean query; instantiate it with an answer first")]
    NotBoolean(String),
    #[error("causality-engine: unknown tuple id {0}")]
    UnknownTid(TupleId),
    #[error("causality-engine: the instance violates the hard constraint `{0}`")]
    HardViolated(String),
    #[error(
        "causality-engine: contingency pool of {size} tuples exceeds the cap of {cap}; \
         without hard constraints use the repair-based search"
    )]
    PoolTooLarge { size: usize, cap: usize },
}

impl From<hitting::TooLarge> for CausalityError {
    fn from(e: hitting::TooLarge) -> Self {
        CausalityError::Repair(e.into())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CauseKind {
    Counterfactual,
    Actual,
    None,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CauseReport<C> {
    pub cause: C,
    pub kind: CauseKind,
    pub min_contingencies: Vec<BTreeSet<C>>,
    #[serde(serialize_with = "serialize_ratio")]
    pub responsibility: Rational,
}

impl<C> CauseReport<C> {
    fn none(cause: C) -> Self {
        CauseReport { cause, kind: CauseKind::None, min_contingencies: Vec::new(), responsibility: Rational::from_ratio(0, 1) }
    }

    fn from_contingencies(cause: C, min_contingencies: Vec<BTreeSet<C>>) -> Self {
        let Some(size) = min_contingencies.first().map(BTreeSet::len) else {
            return Self::none(cause);
        };
        let kind = if size == 0 { CauseKind::Counterfactual } else { CauseKind::Actual };
        CauseReport { cause, kind, min_contingencies, responsibility: inverse_succ(size) }
    }
}

/// For every element of some minimal hitting set, the minimum-size
/// contingencies `H \ {x}` over the smallest minimal hitting sets `H` holding it.
fn reports_from_hitting_sets<C: Ord + Clone>(sets: Vec<BTreeSet<C>>) -> Vec<CauseReport<C>> {
    let mut best: BTreeMap<C, Vec<BTreeSet<C>>> = BTreeMap::new();
    // sets arrive by increasing size, so the first size seen per element is its minimum
    for h in &sets {
        for x in h {
            let entry = best.entry(x.clone()).or_default();
            if entry.first().is_none_or(|g| g.len() + 1 == h.len()) {
                let mut g = h.clone();
                g.remove(x);
                entry.push(g);
            }
        }
    }
    best.into_iter().map(|(c, gs)| CauseReport::from_contingencies(c, gs)).collect()
}

fn require_true(db: &Database, q: &Ucq) -> Result<(), CausalityError> {
    if !q.is_boolean() {
        return Err(CausalityError::NotBoolean(q.name().to_string()));
    }
    if !holds(db, q)? {
        return Err(CausalityError::NothingToExplain);
    }
    Ok(())
}

fn tuple_hitting_sets(db: &Database, q: &Ucq) -> Result<Vec<BTreeSet<TupleId>>, CausalityError> {
    require_true(db, q)?;
    let edges: Vec<_> = witnesses(db, q)?.into_iter().map(|w| w.tids).collect();
    Ok(hitting::minimal_hitting_sets(&edges)?)
}

/// All actual causes of a true Boolean (U)CQ, in tid order, each with every
/// minimum-size contingency set.
///
/// Uses the repair duality: the minimal deletion sets that falsify the query
/// are the minimal hitting sets of its witnesses, and `Γ` is a minimum
/// contingency set for `τ` exactly when `Γ ∪ {τ}` is a smallest such set
/// containing `τ`.
pub fn actual_causes(db: &Database, q: &Ucq) -> Result<Vec<CauseReport<TupleId>>, CausalityError> {
    Ok(reports_from_hitting_sets(tuple_hitting_sets(db, q)?))
}

/// The report for one tuple; kind `None` when it is not a cause.
pub fn cause_report(db: &Database, q: &Ucq, tid: TupleId) -> Result<CauseReport<TupleId>, CausalityError> {
    if !db.contains(tid) {
        return Err(CausalityError::UnknownTid(tid));
    }
    Ok(actual_causes(db, q)?.into_iter().find(|r| r.cause == tid).unwrap_or_else(|| CauseReport::none(tid)))
}

/// `1/(1 + |Γ|)` for a minimum contingency set `Γ`, or 0 for a non-cause.
pub fn responsibility<S: Scalar>(db: &Database, q: &Ucq, tid: TupleId) -> Result<S, CausalityError> {
    let report = cause_report(db, q, tid)?;
    Ok(match report.min_contingencies.first() {
        Some(g) => inverse_succ(g.len()),
        None => S::zero(),
    })
}

/// Attribute-level causes: cells occurring in some minimal null-based repair
/// for the query's denial constraints.
pub fn attr_causes(db: &Database, q: &Ucq) -> Result<Vec<CauseReport<Cell>>, CausalityError> {
    require_true(db, q)?;
    let dcs = negate_ucq(q).map_err(|_| CausalityError::NotBoolean(q.name().to_string()))?;
    let edges = violation_cells(db, &dcs)?;
    Ok(reports_from_hitting_sets(hitting::minimal_hitting_sets(&edges)?))
}

fn ind_holds(db: &Database, ind: &InclusionDependency) -> Result<bool, RelationalError> {
    let target_vars: BTreeSet<&str> = ind.target.vars().collect();
    let shared: Vec<String> = {
        let mut v: Vec<String> = Vec::new();
        for x in ind.source.vars() {
            if target_vars.contains(x) && !v.iter().any(|y| y == x) {
                v.push(x.to_string());
            }
        }
        v
    };
    let source = CompiledBody::new(db, std::slice::from_ref(&ind.source), &shared)?;
    // arity and relation checks on the target, independent of bindings
    CompiledBody::new(db, std::slice::from_ref(&ind.target), &[])?;
    let mut ok = true;
    let mut failure: Option<RelationalError> = None;
    source.for_each(db, |_, env| {
        let bound: BTreeMap<&str, &str> = source
            .variables()
            .iter()
            .zip(env)
            .filter(|(v, _)| shared.contains(v))
            .filter_map(|(v, val)| val.as_ref().and_then(|x| x.as_const()).map(|c| (v.as_str(), c)))
            .collect();
        let terms = ind
            .target
            .terms
            .iter()
            .map(|t| match t {
                Term::Var(v) => bound.get(v.as_str()).map_or_else(|| t.clone(), |c| Term::constant(*c)),
                Term::Const(_) => t.clone(),
            })
            .collect();
        let atom = Atom::new(ind.target.relation.clone(), terms);
        match CompiledBody::new(db, &[atom], &[]) {
            Ok(body) => {
                let mut found = false;
                body.for_each(db, |_, _| {
                    found = true;
                    false
                });
                ok = found;
            }
            Err(e) => {
                failure = Some(e);
                ok = false;
            }
        }
        ok
    });
    match failure {
        Some(e) => Err(e),
        None => Ok(ok),
    }
}

pub fn satisfies_constraint(db: &Database, c: &HardConstraint) -> Result<bool, RelationalError> {
    match c {
        HardConstraint::Denial(dc) => satisfies(db, dc),
        HardConstraint::Inclusion(ind) => ind_holds(db, ind),
    }
}

fn satisfies_all(db: &Database, hard: &[HardConstraint]) -> Result<bool, RelationalError> {
    for c in hard {
        if !satisfies_constraint(db, c)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Actual causes when every intervention must preserve `hard`.
///
/// For each tuple `τ` supporting the query, contingency sets `Γ ⊆ D \ {τ}` are
/// searched by increasing size; `Γ` qualifies when `D \ Γ` satisfies `hard`
/// and the query, and `D \ (Γ ∪ {τ})` satisfies `hard` but not the query.
pub fn causes_under_ics(
    db: &Database,
    q: &Ucq,
    hard: &[HardConstraint],
) -> Result<Vec<CauseReport<TupleId>>, CausalityError> {
    require_true(db, q)?;
    for c in hard {
        if !satisfies_constraint(db, c)? {
            return Err(CausalityError::HardViolated(c.to_string()));
        }
    }
    let all: Vec<TupleId> = db.tids().collect();
    if all.len().saturating_sub(1) > MAX_POOL {
        return Err(CausalityError::PoolTooLarge { size: all.len() - 1, cap: MAX_POOL });
    }
    let support: BTreeSet<TupleId> = witnesses(db, q)?.into_iter().flat_map(|w| w.tids).collect();
    let mut reports = Vec::new();
    for &tau in &support {
        let pool: Vec<TupleId> = all.iter().copied().filter(|&t| t != tau).collect();
        let mut found: Vec<BTreeSet<TupleId>> = Vec::new();
        let mut failure: Option<RelationalError> = None;
        for k in 0..=pool.len() {
            for_each_k_subset(pool.len(), k, |mask| {
                if failure.is_some() {
                    return;
                }
                let gamma: BTreeSet<TupleId> =
                    (0..pool.len()).filter(|i| mask >> i & 1 == 1).map(|i| pool[i]).collect();
                match qualifies(db, q, hard, &gamma, tau) {
                    Ok(true) => found.push(gamma),
                    Ok(false) => {}
                    Err(e) => failure = Some(e),
                }
            });
            if let Some(e) = failure {
                return Err(e.into());
            }
            if !found.is_empty() {
                break;
            }
        }
        if !found.is_empty() {
            reports.push(CauseReport::from_contingencies(tau, found));
        }
    }
    Ok(reports)
}

fn qualifies(
    db: &Database,
    q: &Ucq,
    hard: &[HardConstraint],
    gamma: &BTreeSet<TupleId>,
    tau: TupleId,
) -> Result<bool, RelationalError> {
    let before = db.without(gamma);
    if !holds(&before, q)? || !satisfies_all(&before, hard)? {
        return Ok(false);
    }
    let mut more = gamma.clone();
    more.insert(tau);
    let after = db.without(&more);
    Ok(!holds(&after, q)? && satisfies_all(&after, hard)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query::{instantiate, parse_hard_constraints, parse_query};
    use proptest::prelude::*;

    fn q(text: &str) -> Ucq {
        parse_query(text, None).unwrap()
    }

    fn r(n: u64, d: u64) -> Rational {
        Rational::from_ratio(n as u128, d as u128)
    }

    fn example1() -> Database {
        let mut db = Database::new();
        for (rel, v) in [("R", &["a", "b"][..]), ("R", &["c", "d"]), ("R", &["b", "b"]), ("S", &["a"]), ("S", &["c"]), ("S", &["b"])] {
            db.push_consts(rel, v).unwrap();
        }
        db
    }

    #[test]
    fn example1_causes() {
        let db = example1();
        let query = q("q() :- S(X), R(X,Y), S(Y).");
        let causes = actual_causes(&db, &query).unwrap();
        let summary: Vec<(u32, CauseKind, Rational)> =
            causes.iter().map(|c| (c.cause.0, c.kind, c.responsibility.clone())).collect();
        assert_eq!(
            summary,
            vec![
                (1, CauseKind::Actual, r(1, 2)),
                (3, CauseKind::Actual, r(1, 2)),
                (4, CauseKind::Actual, r(1, 2)),
                (6, CauseKind::Counterfactual, r(1, 1)),
            ]
        );
        assert_eq!(causes[0].min_contingencies, vec![[TupleId(3)].into()]);
        assert_eq!(causes[3].min_contingencies, vec![BTreeSet::new()]);
        assert_eq!(responsibility::<Rational>(&db, &query, TupleId(2)).unwrap(), r(0, 1));
        assert_eq!(cause_report(&db, &query, TupleId(2)).unwrap().kind, CauseKind::None);
        assert_eq!(responsibility::<f64>(&db, &query, TupleId(1)).unwrap(), 0.5);
        assert_eq!(responsibility::<f64>(&db, &query, TupleId(9)), Err(CausalityError::UnknownTid(TupleId(9))));
    }

    #[test]
    fn false_query_is_an_error() {
        let db = example1();
        assert_eq!(actual_causes(&db, &q("q() :- S(d).")), Err(CausalityError::NothingToExplain));
        assert!(matches!(actual_causes(&db, &q("q(X) :- S(X).")), Err(CausalityError::NotBoolean(_))));
    }

    #[test]
    fn example9_attribute_causes() {
        let mut db = Database::new();
        db.push_consts("S", &["a"]).unwrap();
        db.push_consts("S", &["b"]).unwrap();
        for z in ["c", "d", "e"] {
            db.push_consts("R", &["b", z]).unwrap();
        }
        let causes = attr_causes(&db, &q("q() :- S(X), R(X,Z).")).unwrap();
        let summary: Vec<(String, Rational)> = causes.iter().map(|c| (c.cause.to_string(), c.responsibility.clone())).collect();
        assert_eq!(
            summary,
            vec![("t2[1]".into(), r(1, 1)), ("t3[1]".into(), r(1, 3)), ("t4[1]".into(), r(1, 3)), ("t5[1]".into(), r(1, 3))]
        );
    }

    fn dep_course() -> Database {
        let mut db = Database::new();
        db.add_relation("Dep", ["DName", "TStaff"]).unwrap();
        db.add_relation("Course", ["CName", "TStaff", "DName"]).unwrap();
        for (d, s) in [("computing", "john"), ("philosophy", "patrick"), ("math", "kevin")] {
            db.push_consts("Dep", &[d, s]).unwrap();
        }
        for (c, s, d) in [
            ("com08", "john", "computing"),
            ("math01", "kevin", "math"),
            ("hist02", "patrick", "philosophy"),
            ("math08", "eli", "math"),
            ("com01", "john", "computing"),
        ] {
            db.push_consts("Course", &[c, s, d]).unwrap();
        }
        db
    }

    #[test]
    fn causes_with_an_inclusion_dependency() {
        let db = dep_course();
        let psi = parse_hard_constraints("Dep(X,Y) -> exists U: Course(U,Y,X).").unwrap();
        let q2 = q("q2(X) :- Course(Z,X,Y).").disjuncts.remove(0);
        let q2_john: Ucq = instantiate(&q2, &["john".into()]).unwrap().into();
        let plain = causes_under_ics(&db, &q2_john, &[]).unwrap();
        assert_eq!(plain, actual_causes(&db, &q2_john).unwrap());
        let t4 = plain.iter().find(|c| c.cause == TupleId(4)).unwrap();
        assert_eq!((t4.responsibility.clone(), t4.min_contingencies.clone()), (r(1, 2), vec![[TupleId(8)].into()]));
        let with = causes_under_ics(&db, &q2_john, &psi).unwrap();
        let t4 = with.iter().find(|c| c.cause == TupleId(4)).unwrap();
        assert_eq!(
            (t4.responsibility.clone(), t4.min_contingencies.clone()),
            (r(1, 3), vec![[TupleId(1), TupleId(8)].into()])
        );

        let qa = q("q(X) :- Dep(Y,X), Course(Z,X,Y).").disjuncts.remove(0);
        let qa_john: Ucq = instantiate(&qa, &["john".into()]).unwrap().into();
        let with = causes_under_ics(&db, &qa_john, &psi).unwrap();
        assert_eq!(with.len(), 1);
        assert_eq!((with[0].cause, with[0].kind), (TupleId(1), CauseKind::Counterfactual));
    }

    #[test]
    fn hard_constraints_must_hold_initially() {
        let db = dep_course();
        let bad = parse_hard_constraints("Course(C,S,D) -> exists U: Dep(D,U).\n:- Course(C,eli,D).").unwrap();
        let res = causes_under_ics(&db, &q("q() :- Dep(X,Y)."), &bad);
        assert!(matches!(res, Err(CausalityError::HardViolated(_))));
    }

    fn small_instance() -> impl Strategy<Value = Database> {
        prop::collection::vec((any::<bool>(), 0u8..3, 0u8..3), 0..7).prop_map(|rows| {
            let mut db = Database::new();
            db.add_relation_with_arity("R", 2).unwrap();
            db.add_relation_with_arity("S", 1).unwrap();
            let c = |x: u8| ["a", "b", "c"][x as usize];
            for (is_r, x, y) in rows {
                if is_r {
                    db.push_consts("R", &[c(x), c(y)]).unwrap();
                } else {
                    db.push_consts("S", &[c(x)]).unwrap();
                }
            }
            // keeps the query true
            db.push_consts("S", &["a"]).unwrap();
            db.push_consts("R", &["a", "b"]).unwrap();
            db.push_consts("S", &["b"]).unwrap();
            db
        })
    }

    /// Direct definition: minimum Γ ⊆ D \ {τ} with D\Γ ⊨ q and D\(Γ∪{τ}) ⊭ q.
    fn brute_causes(db: &Database, query: &Ucq) -> Vec<(TupleId, Vec<BTreeSet<TupleId>>)> {
        let tids: Vec<TupleId> = db.tids().collect();
        let mut out = Vec::new();
        for &tau in &tids {
            let others: Vec<TupleId> = tids.iter().copied().filter(|&t| t != tau).collect();
            let mut subsets: Vec<BTreeSet<TupleId>> = (0u32..1 << others.len())
                .map(|m| (0..others.len()).filter(|i| m >> i & 1 == 1).map(|i| others[i]).collect())
                .collect();
            subsets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
            let good: Vec<BTreeSet<TupleId>> = subsets
                .into_iter()
                .filter(|g| {
                    let mut with_tau = g.clone();
                    with_tau.insert(tau);
                    holds(&db.without(g), query).unwrap() && !holds(&db.without(&with_tau), query).unwrap()
                })
                .collect();
            if let Some(first) = good.first() {
                let size = first.len();
                out.push((tau, good.into_iter().filter(|g| g.len() == size).collect()));
            }
        }
        out
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn duality_matches_direct_search(db in small_instance()) {
            let query = q("q() :- S(X), R(X,Y), S(Y).");
            let fast: Vec<(TupleId, Vec<BTreeSet<TupleId>>)> = actual_causes(&db, &query)
                .unwrap()
                .into_iter()
                .map(|c| (c.cause, c.min_contingencies))
                .collect();
            prop_assert_eq!(&fast, &brute_causes(&db, &query));
            let ics: Vec<_> = causes_under_ics(&db, &query, &[]).unwrap().into_iter().map(|c| (c.cause, c.min_contingencies)).collect();
            prop_assert_eq!(&fast, &ics);
            let dcs = negate_ucq(&query).unwrap();
            let in_c_repairs: BTreeSet<TupleId> =
                crate::repair::c_repairs(&db, &dcs).unwrap().into_iter().flat_map(|r| r.deleted).collect();
            let all = actual_causes(&db, &query).unwrap();
            let top = all.iter().map(|c| c.responsibility.clone()).max().unwrap();
            let most: BTreeSet<TupleId> = all.iter().filter(|c| c.responsibility == top).map(|c| c.cause).collect();
            prop_assert_eq!(most, in_c_repairs);
            for c in all {
                let k = c.min_contingencies[0].len();
                prop_assert_eq!(c.responsibility, r(1, k as u64 + 1));
                prop_assert_eq!(c.kind == CauseKind::Counterfactual, k == 0);
            }
        }
    }
}

//! Subset, cardinality and null-based repairs of instances violating denial
//! constraints, and the repair-based inconsistency degree.

pub mod hitting;

use std::collections::BTreeSet;

use serde::Serialize;

use crate::num::Scalar;
use crate::query::{dc_as_query, DenialConstraint};
use crate::relational::{witnesses, Cell, CompiledBody, Database, RelationalError, TupleId};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum RepairError {
    #[error(transparent)]
    Relational(#[from] RelationalError),
    #[error("repair-engine: {vertices} conflicting items exceed the exhaustive-search cap of {cap}")]
    TooLarge { vertices: usize, cap: usize },
}

impl From<hitting::TooLarge> for RepairError {
    fn from(e: hitting::TooLarge) -> Self {
        RepairError::TooLarge { vertices: e.vertices, cap: hitting::MAX_VERTICES }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConflictHypergraph {
    pub nodes: BTreeSet<TupleId>,
    pub edges: Vec<BTreeSet<TupleId>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Repair {
    pub kept: BTreeSet<TupleId>,
    pub deleted: BTreeSet<TupleId>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RepairSemantics {
    Subset,
    Cardinality,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct AttrIntervention {
    pub changes: BTreeSet<Cell>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IncDegree<S> {
    pub subset: S,
    pub cardinality: S,
}

/// Nodes are all tuples of `db`; edges are the inclusion-minimal tuple sets
/// jointly matching some constraint body.
pub fn conflict_hypergraph(db: &Database, dcs: &[DenialConstraint]) -> Result<ConflictHypergraph, RepairError> {
    let mut all = Vec::new();
    for dc in dcs {
        for w in witnesses(db, &dc_as_query(dc).into())? {
            all.push(w.tids);
        }
    }
    Ok(ConflictHypergraph { nodes: db.tids().collect(), edges: hitting::minimize_edges(all) })
}

fn to_repair(db: &Database, deleted: BTreeSet<TupleId>) -> Repair {
    Repair { kept: db.tids().filter(|t| !deleted.contains(t)).collect(), deleted }
}

/// Maximal consistent subinstances, ordered by deletion size then by tids.
pub fn s_repairs(db: &Database, dcs: &[DenialConstraint]) -> Result<Vec<Repair>, RepairError> {
    let chg = conflict_hypergraph(db, dcs)?;
    Ok(hitting::minimal_hitting_sets(&chg.edges)?.into_iter().map(|d| to_repair(db, d)).collect())
}

/// Maximum-cardinality consistent subinstances.
pub fn c_repairs(db: &Database, dcs: &[DenialConstraint]) -> Result<Vec<Repair>, RepairError> {
    let chg = conflict_hypergraph(db, dcs)?;
    Ok(hitting::minimum_hitting_sets(&chg.edges)?.into_iter().map(|d| to_repair(db, d)).collect())
}

/// `(|D| - largest repair size) / |D|` over S-repairs and over C-repairs.
/// An empty instance scores 0.
pub fn inc_degree<S: Scalar>(db: &Database, dcs: &[DenialConstraint]) -> Result<IncDegree<S>, RepairError> {
    let n = db.size();
    if n == 0 {
        return Ok(IncDegree { subset: S::zero(), cardinality: S::zero() });
    }
    let degree = |repairs: &[Repair]| {
        let best = repairs.iter().map(|r| r.kept.len()).max().unwrap_or(0);
        S::from_ratio((n - best) as u128, n as u128)
    };
    Ok(IncDegree { subset: degree(&s_repairs(db, dcs)?), cardinality: degree(&c_repairs(db, dcs)?) })
}

/// For each match of each constraint body, the cells a NULL could break:
/// join and constant positions of the matched tuples.
pub fn violation_cells(db: &Database, dcs: &[DenialConstraint]) -> Result<Vec<BTreeSet<Cell>>, RepairError> {
    let mut out = Vec::new();
    for dc in dcs {
        let body = CompiledBody::for_dc(db, dc)?;
        let positions = body.breakable_positions();
        body.for_each(db, |tids, _| {
            let cells = positions
                .iter()
                .enumerate()
                .flat_map(|(i, ps)| ps.iter().map(move |&p| Cell { tid: tids[i], position: p }))
                .collect();
            out.push(cells);
            true
        });
    }
    Ok(hitting::minimize_edges(out))
}

/// Minimal sets of cells whose replacement by NULL restores consistency.
pub fn attr_repairs(
    db: &Database,
    dcs: &[DenialConstraint],
    semantics: RepairSemantics,
) -> Result<Vec<AttrIntervention>, RepairError> {
    let edges = violation_cells(db, dcs)?;
    let sets = match semantics {
        RepairSemantics::Subset => hitting::minimal_hitting_sets(&edges)?,
        RepairSemantics::Cardinality => hitting::minimum_hitting_sets(&edges)?,
    };
    Ok(sets.into_iter().map(|changes| AttrIntervention { changes }).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query::parse_denials;
    use crate::relational::satisfies;
    use num_rational::BigRational;
    use proptest::prelude::*;

    fn tids(xs: &[u32]) -> BTreeSet<TupleId> {
        xs.iter().map(|&x| TupleId(x)).collect()
    }

    fn example4() -> (Database, Vec<DenialConstraint>) {
        let mut db = Database::new();
        db.push_consts("P", &["a"]).unwrap();
        db.push_consts("P", &["e"]).unwrap();
        db.push_consts("Q", &["a", "b"]).unwrap();
        db.push_consts("R", &["a", "c"]).unwrap();
        (db, parse_denials(":- P(X), Q(X,Y).\n:- P(X), R(X,Y).").unwrap())
    }

    #[test]
    fn example4_repairs() {
        let (db, dcs) = example4();
        let s: Vec<_> = s_repairs(&db, &dcs).unwrap().into_iter().map(|r| r.kept).collect();
        assert_eq!(s, vec![tids(&[2, 3, 4]), tids(&[1, 2])]);
        let c: Vec<_> = c_repairs(&db, &dcs).unwrap().into_iter().map(|r| r.kept).collect();
        assert_eq!(c, vec![tids(&[2, 3, 4])]);
        let d = inc_degree::<BigRational>(&db, &dcs).unwrap();
        assert_eq!(d.cardinality, BigRational::from_ratio(1, 4));
        assert_eq!(d.subset, d.cardinality);
    }

    #[test]
    fn consistent_and_empty() {
        let (db, _) = example4();
        let none: Vec<DenialConstraint> = Vec::new();
        assert_eq!(s_repairs(&db, &none).unwrap(), vec![Repair { kept: db.tids().collect(), deleted: BTreeSet::new() }]);
        assert_eq!(inc_degree::<f64>(&db, &none).unwrap().cardinality, 0.0);
        assert_eq!(inc_degree::<f64>(&Database::new(), &none).unwrap().subset, 0.0);
        assert_eq!(
            attr_repairs(&db, &none, RepairSemantics::Subset).unwrap(),
            vec![AttrIntervention { changes: BTreeSet::new() }]
        );
    }

    fn example8() -> (Database, Vec<DenialConstraint>) {
        let mut db = Database::new();
        for (r, v) in [("R", &["a", "b"][..]), ("R", &["c", "d"]), ("R", &["b", "b"]), ("S", &["a"]), ("S", &["c"]), ("S", &["b"])] {
            db.push_consts(r, v).unwrap();
        }
        (db, parse_denials(":- S(X), R(X,Y), S(Y).").unwrap())
    }

    fn cell(t: u32, p: usize) -> Cell {
        Cell { tid: TupleId(t), position: p }
    }

    #[test]
    fn example8_attribute_repairs() {
        let (db, dcs) = example8();
        let card = attr_repairs(&db, &dcs, RepairSemantics::Cardinality).unwrap();
        assert_eq!(card, vec![AttrIntervention { changes: [cell(6, 1)].into() }]);
        let sub = attr_repairs(&db, &dcs, RepairSemantics::Subset).unwrap();
        assert!(sub.contains(&AttrIntervention { changes: [cell(1, 2), cell(3, 2)].into() }));
        assert_eq!(sub.len(), 7);
        for i in &sub {
            let fixed = db.with_nulls(&i.changes).unwrap();
            assert!(dcs.iter().all(|dc| satisfies(&fixed, dc).unwrap()));
        }
    }

    fn random_instance() -> impl Strategy<Value = Database> {
        let row = (0usize..3, 0u8..3, 0u8..3);
        prop::collection::vec(row, 0..10).prop_map(|rows| {
            let mut db = Database::new();
            db.add_relation_with_arity("P", 1).unwrap();
            db.add_relation_with_arity("Q", 2).unwrap();
            db.add_relation_with_arity("S", 1).unwrap();
            let c = |x: u8| ["a", "b", "c"][x as usize];
            for (r, x, y) in rows {
                match r {
                    0 => db.push_consts("P", &[c(x)]),
                    1 => db.push_consts("Q", &[c(x), c(y)]),
                    _ => db.push_consts("S", &[c(x)]),
                }
                .unwrap();
            }
            db
        })
    }

    fn consistent(db: &Database, dcs: &[DenialConstraint]) -> bool {
        dcs.iter().all(|dc| satisfies(db, dc).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn repairs_are_maximal_consistent(db in random_instance()) {
            let dcs = parse_denials(":- P(X), Q(X,Y), S(Y).\n:- P(X), S(X).").unwrap();
            let s = s_repairs(&db, &dcs).unwrap();
            for r in &s {
                let kept = db.restricted_to(&r.kept);
                prop_assert!(consistent(&kept, &dcs));
                for t in &r.deleted {
                    let mut more = r.kept.clone();
                    more.insert(*t);
                    prop_assert!(!consistent(&db.restricted_to(&more), &dcs));
                }
            }
            let c = c_repairs(&db, &dcs).unwrap();
            prop_assert!(c.iter().all(|r| s.contains(r)));
            let d = inc_degree::<BigRational>(&db, &dcs).unwrap();
            prop_assert_eq!(&d.subset, &d.cardinality);
            prop_assert_eq!(d.subset == BigRational::from_ratio(0, 1), consistent(&db, &dcs));
        }

        #[test]
        fn attr_repairs_fix_and_are_incomparable(db in random_instance()) {
            let dcs = parse_denials(":- P(X), Q(X,Y), S(Y).").unwrap();
            let sub = attr_repairs(&db, &dcs, RepairSemantics::Subset).unwrap();
            for (i, a) in sub.iter().enumerate() {
                prop_assert!(consistent(&db.with_nulls(&a.changes).unwrap(), &dcs));
                for b in &sub[i + 1..] {
                    prop_assert!(!a.changes.is_subset(&b.changes) && !b.changes.is_subset(&a.changes));
                }
            }
            let card = attr_repairs(&db, &dcs, RepairSemantics::Cardinality).unwrap();
            prop_assert!(card.iter().all(|a| sub.contains(a)));
        }
    }
}

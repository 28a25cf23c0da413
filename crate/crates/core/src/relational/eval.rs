use std::collections::{BTreeMap, BTreeSet};

use super::{Database, RelationalError, TupleId, Value};
use crate::query::{Atom, Cq, DenialConstraint, Term, Ucq};

#[derive(Clone, Debug)]
enum Slot {
    /// First occurrence of a join variable: binds it.
    Bind(usize),
    /// Later occurrence of a join variable: must join with the bound value.
    Check(usize),
    /// Variable occurring once in the body and not in the head: matches
    /// anything, NULL included.
    Free(usize),
    Const(String),
}

#[derive(Clone, Debug)]
struct CompiledAtom {
    relation: String,
    slots: Vec<Slot>,
}

/// A rule body resolved against a schema and ready for nested-loop evaluation.
#[derive(Clone, Debug)]
pub struct CompiledBody {
    atoms: Vec<CompiledAtom>,
    vars: Vec<String>,
    head: Vec<usize>,
}

/// One satisfying assignment of a body: the matched tuple per atom plus the
/// variable binding.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Valuation {
    pub tids: Vec<TupleId>,
    pub binding: BTreeMap<String, Value>,
}

/// An inclusion-minimal set of tuples supporting a Boolean query.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub tids: BTreeSet<TupleId>,
    pub binding: BTreeMap<String, Value>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Answers {
    Boolean(bool),
    Tuples(BTreeSet<Vec<Value>>),
}

impl Answers {
    pub fn is_true(&self) -> bool {
        match self {
            Answers::Boolean(b) => *b,
            Answers::Tuples(t) => !t.is_empty(),
        }
    }
}

impl CompiledBody {
    pub fn new(db: &Database, body: &[Atom], head: &[String]) -> Result<Self, RelationalError> {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for v in body.iter().flat_map(Atom::vars) {
            *counts.entry(v).or_default() += 1;
        }
        let mut vars: Vec<String> = Vec::new();
        let index_of = |v: &str, vars: &mut Vec<String>| match vars.iter().position(|x| x == v) {
            Some(i) => (i, false),
            None => {
                vars.push(v.to_string());
                (vars.len() - 1, true)
            }
        };
        let mut atoms = Vec::with_capacity(body.len());
        for atom in body {
            let rel = db
                .relation(&atom.relation)
                .ok_or_else(|| RelationalError::UnknownRelation(atom.relation.clone()))?;
            if rel.arity() != atom.arity() {
                return Err(RelationalError::ArityMismatch {
                    relation: atom.relation.clone(),
                    expected: rel.arity(),
                    found: atom.arity(),
                });
            }
            let slots = atom
                .terms
                .iter()
                .map(|t| match t {
                    Term::Const(c) => Slot::Const(c.clone()),
                    Term::Var(v) => {
                        let single = counts[v.as_str()] == 1 && !head.contains(v);
                        let (i, fresh) = index_of(v, &mut vars);
                        match (single, fresh) {
                            (true, _) => Slot::Free(i),
                            (false, true) => Slot::Bind(i),
                            (false, false) => Slot::Check(i),
                        }
                    }
                })
                .collect();
            atoms.push(CompiledAtom { relation: atom.relation.clone(), slots });
        }
        let head = head
            .iter()
            .map(|h| vars.iter().position(|v| v == h).ok_or_else(|| RelationalError::UnknownVariable(h.clone())))
            .collect::<Result<_, _>>()?;
        Ok(CompiledBody { atoms, vars, head })
    }

    pub fn for_cq(db: &Database, q: &Cq) -> Result<Self, RelationalError> {
        Self::new(db, &q.body, &q.head)
    }

    pub fn for_dc(db: &Database, dc: &DenialConstraint) -> Result<Self, RelationalError> {
        Self::new(db, &dc.body, &[])
    }

    pub fn variables(&self) -> &[String] {
        &self.vars
    }

    /// Per atom, the 1-based positions holding a join variable or a constant.
    /// A NULL at any of them prevents the match.
    pub fn breakable_positions(&self) -> Vec<Vec<usize>> {
        self.atoms
            .iter()
            .map(|a| {
                a.slots
                    .iter()
                    .enumerate()
                    .filter(|(_, s)| !matches!(s, Slot::Free(_)))
                    .map(|(i, _)| i + 1)
                    .collect()
            })
            .collect()
    }

    /// Visits every satisfying valuation; stops early when `visit` returns false.
    pub fn for_each(&self, db: &Database, mut visit: impl FnMut(&[TupleId], &[Option<Value>]) -> bool) {
        let mut tids = Vec::with_capacity(self.atoms.len());
        let mut env: Vec<Option<Value>> = vec![None; self.vars.len()];
        self.search(db, 0, &mut tids, &mut env, &mut visit);
    }

    fn search(
        &self,
        db: &Database,
        depth: usize,
        tids: &mut Vec<TupleId>,
        env: &mut Vec<Option<Value>>,
        visit: &mut impl FnMut(&[TupleId], &[Option<Value>]) -> bool,
    ) -> bool {
        let Some(atom) = self.atoms.get(depth) else {
            return visit(tids, env);
        };
        let rel = db.relation(&atom.relation).expect("compiled against this schema");
        for tuple in rel.tuples() {
            let saved = env.clone();
            let ok = atom.slots.iter().zip(&tuple.values).all(|(slot, v)| match slot {
                Slot::Const(c) => v.as_const() == Some(c.as_str()),
                Slot::Free(i) => {
                    env[*i] = Some(v.clone());
                    true
                }
                Slot::Bind(i) => match env[*i] {
                    // a variable repeated inside one atom binds on first sight
                    None if !v.is_null() => {
                        env[*i] = Some(v.clone());
                        true
                    }
                    None => false,
                    Some(ref b) => b.joins(v),
                },
                Slot::Check(i) => env[*i].as_ref().is_some_and(|b| b.joins(v)),
            });
            if ok {
                tids.push(tuple.tid);
                let go_on = self.search(db, depth + 1, tids, env, visit);
                tids.pop();
                if !go_on {
                    *env = saved;
                    return false;
                }
            }
            *env = saved;
        }
        true
    }

    fn valuation(&self, tids: &[TupleId], env: &[Option<Value>]) -> Valuation {
        let binding = self
            .vars
            .iter()
            .zip(env)
            .filter_map(|(v, val)| val.as_ref().map(|x| (v.clone(), x.clone())))
            .collect();
        Valuation { tids: tids.to_vec(), binding }
    }
}

/// Calls `visit` on every satisfying valuation of every disjunct.
pub fn for_each_valuation(
    db: &Database,
    q: &Ucq,
    mut visit: impl FnMut(&Valuation),
) -> Result<(), RelationalError> {
    for cq in &q.disjuncts {
        let body = CompiledBody::for_cq(db, cq)?;
        body.for_each(db, |tids, env| {
            visit(&body.valuation(tids, env));
            true
        });
    }
    Ok(())
}

pub fn eval_query(db: &Database, q: &Ucq) -> Result<Answers, RelationalError> {
    if q.is_boolean() {
        return holds(db, q).map(Answers::Boolean);
    }
    let mut out = BTreeSet::new();
    for cq in &q.disjuncts {
        let body = CompiledBody::for_cq(db, cq)?;
        body.for_each(db, |_, env| {
            out.insert(body.head.iter().map(|&i| env[i].clone().unwrap_or(Value::Null)).collect());
            true
        });
    }
    Ok(Answers::Tuples(out))
}

/// Whether some disjunct has a satisfying valuation; free variables are
/// treated existentially.
pub fn holds(db: &Database, q: &Ucq) -> Result<bool, RelationalError> {
    for cq in &q.disjuncts {
        let body = CompiledBody::new(db, &cq.body, &[])?;
        let mut found = false;
        body.for_each(db, |_, _| {
            found = true;
            false
        });
        if found {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Whether `db` satisfies the denial constraint, i.e. its body has no match.
pub fn satisfies(db: &Database, dc: &DenialConstraint) -> Result<bool, RelationalError> {
    let body = CompiledBody::for_dc(db, dc)?;
    let mut violated = false;
    body.for_each(db, |_, _| {
        violated = true;
        false
    });
    Ok(!violated)
}

/// Inclusion-minimal supporting tid-sets of a Boolean (U)CQ, sorted by their
/// ascending tid sequences. Each carries the binding of the first valuation
/// that produced it.
pub fn witnesses(db: &Database, q: &Ucq) -> Result<Vec<Witness>, RelationalError> {
    if !q.is_boolean() {
        return Err(RelationalError::NotBoolean(q.name().to_string()));
    }
    let mut all: BTreeMap<BTreeSet<TupleId>, BTreeMap<String, Value>> = BTreeMap::new();
    for_each_valuation(db, q, |v| {
        all.entry(v.tids.iter().copied().collect()).or_insert_with(|| v.binding.clone());
    })?;
    Ok(minimal_sets(all.into_iter().collect())
        .into_iter()
        .map(|(tids, binding)| Witness { tids, binding })
        .collect())
}

fn minimal_sets<T>(mut sets: Vec<(BTreeSet<TupleId>, T)>) -> Vec<(BTreeSet<TupleId>, T)> {
    sets.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.0.cmp(&b.0)));
    let mut kept: Vec<(BTreeSet<TupleId>, T)> = Vec::new();
    for (s, t) in sets {
        if !kept.iter().any(|(k, _)| k.is_subset(&s)) {
            kept.push((s, t));
        }
    }
    kept.sort_by(|a, b| a.0.cmp(&b.0));
    kept
}

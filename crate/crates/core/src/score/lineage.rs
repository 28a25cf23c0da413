use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::num::Scalar;
use crate::relational::{witnesses, Database, TupleId};
use crate::query::Ucq;
use crate::repair::hitting::minimize_edges;

use super::ScoreError;

/// Largest number of free variables `prob_true` expands exactly.
pub const MAX_FREE_VARIABLES: usize = 24;

/// A positive DNF over tuple variables, kept in absorbed form: no conjunction
/// contains another. No conjunctions is constant false; the single empty
/// conjunction is constant true.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lineage {
    disjuncts: Vec<BTreeSet<TupleId>>,
    pinned: BTreeMap<TupleId, bool>,
}

impl Lineage {
    pub fn new(disjuncts: impl IntoIterator<Item = BTreeSet<TupleId>>) -> Self {
        Lineage { disjuncts: minimize_edges(disjuncts), pinned: BTreeMap::new() }
    }

    pub fn disjuncts(&self) -> &[BTreeSet<TupleId>] {
        &self.disjuncts
    }

    /// Interventions applied so far.
    pub fn pinned(&self) -> &BTreeMap<TupleId, bool> {
        &self.pinned
    }

    pub fn is_false(&self) -> bool {
        self.disjuncts.is_empty()
    }

    pub fn is_true(&self) -> bool {
        self.disjuncts.first().is_some_and(BTreeSet::is_empty)
    }

    pub fn variables(&self) -> BTreeSet<TupleId> {
        self.disjuncts.iter().flatten().copied().collect()
    }

    /// `do(X_tid = value)`, simplified.
    pub fn intervene(&self, tid: TupleId, value: bool) -> Lineage {
        let disjuncts = self.disjuncts.iter().filter(|c| value || !c.contains(&tid)).map(|c| {
            let mut c = c.clone();
            c.remove(&tid);
            c
        });
        let mut out = Lineage::new(disjuncts);
        out.pinned = self.pinned.clone();
        out.pinned.insert(tid, value);
        out
    }

    /// Truth value when exactly the tuples in `present` exist.
    pub fn eval(&self, present: &BTreeSet<TupleId>) -> bool {
        self.disjuncts.iter().any(|c| c.is_subset(present))
    }
}

impl fmt::Display for Lineage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_false() {
            return f.write_str("false");
        }
        if self.is_true() {
            return f.write_str("true");
        }
        for (i, c) in self.disjuncts.iter().enumerate() {
            if i > 0 {
                f.write_str(" | ")?;
            }
            let vars: Vec<String> = c.iter().map(|t| format!("X{t}")).collect();
            if vars.len() == 1 || self.disjuncts.len() == 1 {
                f.write_str(&vars.join(" & "))?;
            } else {
                write!(f, "({})", vars.join(" & "))?;
            }
        }
        Ok(())
    }
}

/// The lineage of a Boolean (U)CQ: one conjunction per minimal witness.
pub fn lineage(db: &Database, q: &Ucq) -> Result<Lineage, ScoreError> {
    if !q.is_boolean() {
        return Err(ScoreError::NotBoolean(q.name().to_string()));
    }
    Ok(Lineage::new(witnesses(db, q)?.into_iter().map(|w| w.tids)))
}

/// Independent tuple probabilities: a default plus per-tuple overrides.
#[derive(Clone, Debug, PartialEq)]
pub struct TupleProbability<S> {
    pub default: S,
    pub overrides: BTreeMap<TupleId, S>,
}

impl<S: Scalar> TupleProbability<S> {
    pub fn uniform(p: S) -> Result<Self, ScoreError> {
        Self::check(&p)?;
        Ok(TupleProbability { default: p, overrides: BTreeMap::new() })
    }

    /// Every tuple present with probability 1/2.
    pub fn half() -> Self {
        TupleProbability { default: S::from_ratio(1, 2), overrides: BTreeMap::new() }
    }

    pub fn with(mut self, tid: TupleId, p: S) -> Result<Self, ScoreError> {
        Self::check(&p)?;
        self.overrides.insert(tid, p);
        Ok(self)
    }

    pub fn get(&self, tid: TupleId) -> &S {
        self.overrides.get(&tid).unwrap_or(&self.default)
    }

    fn check(p: &S) -> Result<(), ScoreError> {
        if *p < S::zero() || *p > S::one() {
            return Err(ScoreError::BadProbability(format!("{p:?}")));
        }
        Ok(())
    }
}

/// Probability that the lineage is true, by Shannon expansion on its
/// smallest free variable.
pub fn prob_true<S: Scalar>(f: &Lineage, p: &TupleProbability<S>) -> Result<S, ScoreError> {
    let free = f.variables().len();
    if free > MAX_FREE_VARIABLES {
        return Err(ScoreError::TooManyVariables { count: free, cap: MAX_FREE_VARIABLES });
    }
    Ok(expand(f, p))
}

fn expand<S: Scalar>(f: &Lineage, p: &TupleProbability<S>) -> S {
    if f.is_false() {
        return S::zero();
    }
    if f.is_true() {
        return S::one();
    }
    let x = *f.disjuncts.iter().flatten().min().expect("nonconstant formula has a variable");
    let px = p.get(x).clone();
    let on = expand(&f.intervene(x, true), p);
    let off = expand(&f.intervene(x, false), p);
    px.clone() * on + (S::one() - px) * off
}

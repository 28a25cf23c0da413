//! Lineage, interventions, tuple-independent probability, causal effect and
//! Shapley/Banzhaf scores of tuples for Boolean query answers.

mod game;
mod lineage;

use serde::Serialize;

pub use game::{hoeffding_samples, Players, QueryGame, Sampled, MAX_PLAYERS};
pub use lineage::{lineage, prob_true, Lineage, TupleProbability, MAX_FREE_VARIABLES};

use crate::num::{serialize_ratio, Scalar};
use crate::query::{is_hierarchical, Ucq};
use crate::relational::{Database, RelationalError, TupleId};
use crate::Rational;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ScoreError {
    #[error(transparent)]
    Relational(#[from] RelationalError),
    #[error("score-engine: `{0}` is not a Boolean query; instantiate it with an answer first")]
    NotBoolean(String),
    #[error("score-engine: unknown tuple id {0}")]
    UnknownTid(TupleId),
    #[error("score-engine: lineage has {count} free variables, above the exact cap of {cap}; use sampling")]
    TooManyVariables { count: usize, cap: usize },
    #[error("score-engine: {count} players exceed the exact cap of {cap}; use shapley_sampled")]
    TooManyPlayers { count: usize, cap: usize },
    #[error("score-engine: probability {0} is outside [0, 1]")]
    BadProbability(String),
    #[error("score-engine: {0}")]
    BadAccuracy(String),
}

/// `P(Q | do(X_tid = 1)) - P(Q | do(X_tid = 0))` over the tuple-independent
/// instance with probabilities `p`.
pub fn causal_effect<S: Scalar>(
    db: &Database,
    q: &Ucq,
    tid: TupleId,
    p: &TupleProbability<S>,
) -> Result<S, ScoreError> {
    if !db.contains(tid) {
        return Err(ScoreError::UnknownTid(tid));
    }
    let f = lineage(db, q)?;
    Ok(prob_true(&f.intervene(tid, true), p)? - prob_true(&f.intervene(tid, false), p)?)
}

/// Exact Shapley value with every tuple of `db` as a player.
pub fn shapley<S: Scalar>(db: &Database, q: &Ucq, tid: TupleId) -> Result<S, ScoreError> {
    QueryGame::new(db, q, Players::All)?.shapley(db, tid)
}

/// Exact Banzhaf index with every tuple of `db` as a player.
pub fn banzhaf<S: Scalar>(db: &Database, q: &Ucq, tid: TupleId) -> Result<S, ScoreError> {
    QueryGame::new(db, q, Players::All)?.banzhaf(db, tid)
}

/// Permutation-sampling Shapley estimate with `ceil(ln(2/delta)/(2 eps^2))`
/// samples: within `eps` of the exact value with probability at least
/// `1 - delta` (an additive bound).
pub fn shapley_sampled<S: Scalar>(
    db: &Database,
    q: &Ucq,
    tid: TupleId,
    eps: f64,
    delta: f64,
    seed: u64,
) -> Result<Sampled<S>, ScoreError> {
    let m = hoeffding_samples(eps, delta)?;
    QueryGame::new(db, q, Players::All)?.shapley_sampled(db, tid, m, seed)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exact,
    Sampled,
}

fn serialize_opt_ratio<S: serde::Serializer>(r: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
    match r {
        Some(r) => serialize_ratio(r, s),
        None => s.serialize_none(),
    }
}

/// One tuple's scores as reported to users.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScoreReport {
    pub tid: TupleId,
    #[serde(skip_serializing_if = "Option::is_none", serialize_with = "serialize_opt_ratio")]
    pub shapley: Option<Rational>,
    #[serde(skip_serializing_if = "Option::is_none", serialize_with = "serialize_opt_ratio")]
    pub banzhaf: Option<Rational>,
    #[serde(skip_serializing_if = "Option::is_none", serialize_with = "serialize_opt_ratio")]
    pub causal_effect: Option<Rational>,
    /// `None` when the test does not apply: unions, self-joins.
    pub hierarchical: Option<bool>,
    pub method: Method,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub guarantee: Option<String>,
}

impl ScoreReport {
    pub fn new(tid: TupleId, q: &Ucq, method: Method) -> Self {
        ScoreReport {
            tid,
            shapley: None,
            banzhaf: None,
            causal_effect: None,
            hierarchical: hierarchical_flag(q),
            method,
            samples: None,
            guarantee: None,
        }
    }
}

/// Hierarchy of a single self-join-free Boolean CQ; `None` outside that class.
pub fn hierarchical_flag(q: &Ucq) -> Option<bool> {
    let cq = q.as_cq()?;
    is_hierarchical(cq).ok().map(|h| h.is_hierarchical())
}

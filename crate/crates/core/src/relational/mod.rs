//! In-memory relational instances with global tuple identifiers, CSV
//! ingestion, and (U)CQ evaluation with witness extraction.

mod eval;
mod load;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

pub use eval::{eval_query, for_each_valuation, holds, satisfies, witnesses, Answers, CompiledBody, Valuation, Witness};
pub use load::load_database;

/// Global tuple identifier, unique across an instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct TupleId(pub u32);

impl fmt::Display for TupleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A cell: a constant symbol or NULL.
///
/// The derived `PartialEq` is structural and used for storage only. Join and
/// selection semantics go through [`Value::joins`], under which NULL matches
/// nothing, not even another NULL.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Const(String),
    Null,
}

impl Value {
    pub fn constant(s: impl Into<String>) -> Self {
        Value::Const(s.into())
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    pub fn as_const(&self) -> Option<&str> {
        match self {
            Value::Const(s) => Some(s),
            Value::Null => None,
        }
    }

    /// Equality as seen by a join or a selection.
    pub fn joins(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Const(a), Value::Const(b)) => a == b,
            _ => false,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Const(s) => f.write_str(s),
            Value::Null => f.write_str("NULL"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tuple {
    pub tid: TupleId,
    pub values: Vec<Value>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relation {
    name: String,
    columns: Vec<String>,
    tuples: Vec<Tuple>,
}

impl Relation {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn tuples(&self) -> &[Tuple] {
        &self.tuples
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum RelationalError {
    #[error("relational-core: duplicate tuple id {0}")]
    DuplicateTid(TupleId),
    #[error("relational-core: {file}:{line}: expected {expected} fields, found {found}")]
    RaggedRow { file: String, line: u64, expected: usize, found: usize },
    #[error("relational-core: {file}:{line}: invalid tid `{text}` (must be a positive integer)")]
    BadTid { file: String, line: u64, text: String },
    #[error("relational-core: unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("relational-core: relation `{relation}` has arity {expected}, used with {found} arguments")]
    ArityMismatch { relation: String, expected: usize, found: usize },
    #[error("relational-core: relation `{0}` declared twice")]
    DuplicateRelation(String),
    #[error("relational-core: relation `{0}` must have arity at least 1")]
    ZeroArity(String),
    #[error("relational-core: unknown tuple id {0}")]
    UnknownTid(TupleId),
    #[error("relational-core: tuple {tid} has no position {position}")]
    BadPosition { tid: TupleId, position: usize },
    #[error("relational-core: schema.txt line {line}: {message}")]
    Manifest { line: usize, message: String },
    #[error("relational-core: `{0}` is not a Boolean query")]
    NotBoolean(String),
    #[error("relational-core: head variable `{0}` is not bound by the body")]
    UnknownVariable(String),
    #[error("relational-core: {file}:{line}: {message}")]
    Csv { file: String, line: u64, message: String },
    #[error("relational-core: {path}: {message}")]
    Io { path: String, message: String },
}

/// An attribute position `tid[position]`, 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Cell {
    pub tid: TupleId,
    pub position: usize,
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t{}[{}]", self.tid, self.position)
    }
}

/// A finite set of named relations whose tuples carry unique ids.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Database {
    relations: BTreeMap<String, Relation>,
    index: BTreeMap<TupleId, (String, usize)>,
}

impl Database {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_relation<S: Into<String>>(
        &mut self,
        name: impl Into<String>,
        columns: impl IntoIterator<Item = S>,
    ) -> Result<(), RelationalError> {
        let name = name.into();
        let columns: Vec<String> = columns.into_iter().map(Into::into).collect();
        if self.relations.contains_key(&name) {
            return Err(RelationalError::DuplicateRelation(name));
        }
        if columns.is_empty() {
            return Err(RelationalError::ZeroArity(name));
        }
        self.relations.insert(name.clone(), Relation { name, columns, tuples: Vec::new() });
        Ok(())
    }

    /// Adds a relation with generic column names `A1..An`.
    pub fn add_relation_with_arity(&mut self, name: impl Into<String>, arity: usize) -> Result<(), RelationalError> {
        self.add_relation(name, (1..=arity).map(|i| format!("A{i}")))
    }

    pub fn insert(&mut self, relation: &str, tid: TupleId, values: Vec<Value>) -> Result<(), RelationalError> {
        if tid.0 == 0 {
            return Err(RelationalError::UnknownTid(tid));
        }
        if self.index.contains_key(&tid) {
            return Err(RelationalError::DuplicateTid(tid));
        }
        let rel = self
            .relations
            .get_mut(relation)
            .ok_or_else(|| RelationalError::UnknownRelation(relation.to_string()))?;
        if values.len() != rel.arity() {
            return Err(RelationalError::ArityMismatch {
                relation: relation.to_string(),
                expected: rel.arity(),
                found: values.len(),
            });
        }
        let pos = rel.tuples.len();
        rel.tuples.push(Tuple { tid, values });
        self.index.insert(tid, (relation.to_string(), pos));
        Ok(())
    }

    /// Inserts with the next free tid (one past the current maximum).
    pub fn push(&mut self, relation: &str, values: Vec<Value>) -> Result<TupleId, RelationalError> {
        let tid = TupleId(self.index.keys().next_back().map_or(1, |t| t.0 + 1));
        self.insert(relation, tid, values)?;
        Ok(tid)
    }

    /// Convenience for tests and fixtures: `push_consts("R", &["a", "b"])`.
    pub fn push_consts(&mut self, relation: &str, values: &[&str]) -> Result<TupleId, RelationalError> {
        if !self.relations.contains_key(relation) {
            self.add_relation_with_arity(relation, values.len())?;
        }
        self.push(relation, values.iter().map(|v| Value::constant(*v)).collect())
    }

    pub fn size(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn relation(&self, name: &str) -> Option<&Relation> {
        self.relations.get(name)
    }

    pub fn relations(&self) -> impl Iterator<Item = &Relation> {
        self.relations.values()
    }

    /// All tids in increasing order.
    pub fn tids(&self) -> impl Iterator<Item = TupleId> + '_ {
        self.index.keys().copied()
    }

    pub fn contains(&self, tid: TupleId) -> bool {
        self.index.contains_key(&tid)
    }

    pub fn tuple(&self, tid: TupleId) -> Option<(&Relation, &Tuple)> {
        let (rel, pos) = self.index.get(&tid)?;
        let rel = &self.relations[rel];
        Some((rel, &rel.tuples[*pos]))
    }

    /// `R(a,b)` rendering of a tuple.
    pub fn describe(&self, tid: TupleId) -> String {
        match self.tuple(tid) {
            Some((rel, t)) => {
                let vals: Vec<String> = t.values.iter().map(ToString::to_string).collect();
                format!("{}({})", rel.name, vals.join(","))
            }
            None => format!("?{tid}"),
        }
    }

    /// The sub-instance of tuples satisfying `keep`; schema is preserved.
    pub fn retain(&self, keep: impl Fn(TupleId) -> bool) -> Database {
        let mut out = Database::new();
        for rel in self.relations.values() {
            out.relations.insert(
                rel.name.clone(),
                Relation { name: rel.name.clone(), columns: rel.columns.clone(), tuples: Vec::new() },
            );
            for t in rel.tuples.iter().filter(|t| keep(t.tid)) {
                let r = out.relations.get_mut(&rel.name).expect("just inserted");
                out.index.insert(t.tid, (rel.name.clone(), r.tuples.len()));
                r.tuples.push(t.clone());
            }
        }
        out
    }

    pub fn without(&self, removed: &BTreeSet<TupleId>) -> Database {
        self.retain(|t| !removed.contains(&t))
    }

    pub fn restricted_to(&self, kept: &BTreeSet<TupleId>) -> Database {
        self.retain(|t| kept.contains(&t))
    }

    /// Copy of the instance with the given cells replaced by NULL.
    pub fn with_nulls<'a>(&self, cells: impl IntoIterator<Item = &'a Cell>) -> Result<Database, RelationalError> {
        let mut out = self.clone();
        for cell in cells {
            let (rel, pos) = out.index.get(&cell.tid).cloned().ok_or(RelationalError::UnknownTid(cell.tid))?;
            let tuple = &mut out.relations.get_mut(&rel).expect("indexed").tuples[pos];
            if cell.position == 0 || cell.position > tuple.values.len() {
                return Err(RelationalError::BadPosition { tid: cell.tid, position: cell.position });
            }
            tuple.values[cell.position - 1] = Value::Null;
        }
        Ok(out)
    }

    pub fn value(&self, cell: Cell) -> Option<&Value> {
        let (_, t) = self.tuple(cell.tid)?;
        cell.position.checked_sub(1).and_then(|p| t.values.get(p))
    }

    pub fn has_nulls(&self) -> bool {
        self.relations.values().flat_map(|r| &r.tuples).any(|t| t.values.iter().any(Value::is_null))
    }
}

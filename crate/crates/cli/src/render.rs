use std::collections::BTreeSet;

use dbxplain::num::{decimal_string, ratio_string};
use dbxplain::relational::{Database, TupleId};
use dbxplain::Rational;
use serde_json::{json, Value};

/// Digits kept before trailing zeros are trimmed in decimal mode.
const DECIMAL_DIGITS: usize = 12;

#[derive(Clone, Copy, Debug)]
pub struct Format {
    pub decimal: bool,
}

impl Format {
    pub fn ratio(&self, r: &Rational) -> Value {
        if !self.decimal {
            return Value::String(ratio_string(r));
        }
        let s = decimal_string(r, DECIMAL_DIGITS);
        let s = s.trim_end_matches('0').trim_end_matches('.');
        Value::String(if s.is_empty() || s == "-" { "0".into() } else { s.to_string() })
    }
}

pub fn tids(set: &BTreeSet<TupleId>) -> Value {
    json!(set.iter().map(|t| t.0).collect::<Vec<_>>())
}

pub fn tuple(db: &Database, tid: TupleId) -> Value {
    json!({ "tid": tid.0, "tuple": db.describe(tid) })
}

/// One-line JSON with a trailing newline.
pub fn finish(v: &Value) -> String {
    let mut s = serde_json::to_string(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

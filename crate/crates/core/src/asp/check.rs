//! A brute-force stable-model checker for the repair programs we emit. It
//! reads back the text, grounds it against the candidate atoms, and tests
//! each candidate deletion set with the reduct definition.

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use super::{emit_repair_program, RepairOptions};
use crate::query::parse_denials;
use crate::relational::{Database, TupleId};
use crate::repair::{c_repairs, s_repairs};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum T {
    Var(String),
    Const(String),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Atom {
    pred: String,
    args: Vec<T>,
}

type Ground = (String, Vec<String>);

#[derive(Debug, Default)]
struct Rule {
    head: Vec<Atom>,
    pos: Vec<Atom>,
    neg: Vec<Atom>,
    neq: Vec<(T, T)>,
    weak: bool,
}

/// Splits at `sep` outside parentheses.
fn split_top(s: &str, sep: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    let mut rest = s;
    while !rest.is_empty() {
        if depth == 0 && rest.starts_with(sep) {
            out.push(std::mem::take(&mut cur));
            rest = &rest[sep.len()..];
            continue;
        }
        let c = rest.chars().next().unwrap();
        depth += match c {
            '(' | '{' => 1,
            ')' | '}' => -1,
            _ => 0,
        };
        cur.push(c);
        rest = &rest[c.len_utf8()..];
    }
    out.push(cur);
    out.into_iter().map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect()
}

fn term(s: &str) -> T {
    if s.starts_with(|c: char| c.is_ascii_uppercase()) {
        T::Var(s.to_string())
    } else {
        T::Const(s.to_string())
    }
}

fn atom(s: &str) -> Atom {
    let (pred, rest) = s.split_once('(').expect("atom");
    let args = rest.trim_end_matches(')').split(',').map(|a| term(a.trim())).collect();
    Atom { pred: pred.trim().to_string(), args }
}

fn body(text: &str, r: &mut Rule) {
    for lit in split_top(text, ",") {
        if let Some((a, b)) = lit.split_once("!=") {
            r.neq.push((term(a.trim()), term(b.trim())));
        } else if let Some(a) = lit.strip_prefix("not ") {
            r.neg.push(atom(a));
        } else {
            r.pos.push(atom(&lit));
        }
    }
}

/// Parses the aggregate-free part of a program.
fn parse(text: &str) -> Vec<Rule> {
    let mut rules = Vec::new();
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('%')) {
        for stmt in split_top(line, ". ").into_iter().map(|s| s.trim_end_matches('.').to_string()) {
            if stmt.contains('#') {
                continue;
            }
            let mut r = Rule::default();
            if let Some(b) = stmt.strip_prefix(":~") {
                r.weak = true;
                body(b, &mut r);
            } else if let Some(b) = stmt.strip_prefix(":-") {
                body(b, &mut r);
            } else if let Some((h, b)) = stmt.split_once(":-") {
                r.head = split_top(h, " v ").iter().map(|a| atom(a)).collect();
                body(b, &mut r);
            } else {
                r.head.push(atom(&stmt));
            }
            rules.push(r);
        }
    }
    rules
}

fn subst(a: &Atom, env: &BTreeMap<String, String>) -> Option<Ground> {
    let args = a
        .args
        .iter()
        .map(|t| match t {
            T::Const(c) => Some(c.clone()),
            T::Var(v) => env.get(v).cloned(),
        })
        .collect::<Option<Vec<_>>>()?;
    Some((a.pred.clone(), args))
}

struct GroundRule {
    head: Vec<Ground>,
    pos: Vec<Ground>,
    neg: Vec<Ground>,
    weak: bool,
}

/// All instances whose positive body lies inside `universe`.
fn ground(rules: &[Rule], universe: &BTreeSet<Ground>) -> Vec<GroundRule> {
    fn go(r: &Rule, i: usize, env: &mut BTreeMap<String, String>, u: &BTreeSet<Ground>, out: &mut Vec<GroundRule>) {
        if i == r.pos.len() {
            let val = |t: &T| match t {
                T::Const(c) => c.clone(),
                T::Var(v) => env[v].clone(),
            };
            if r.neq.iter().any(|(a, b)| val(a) == val(b)) {
                return;
            }
            let all = |xs: &[Atom]| xs.iter().map(|a| subst(a, env).expect("safe rule")).collect();
            out.push(GroundRule { head: all(&r.head), pos: all(&r.pos), neg: all(&r.neg), weak: r.weak });
            return;
        }
        let a = &r.pos[i];
        for (pred, args) in u {
            if *pred != a.pred || args.len() != a.args.len() {
                continue;
            }
            let mut bound = Vec::new();
            let mut ok = true;
            for (t, v) in a.args.iter().zip(args) {
                match t {
                    T::Const(c) => ok &= c == v,
                    T::Var(x) => match env.get(x) {
                        Some(w) => ok &= w == v,
                        None => {
                            env.insert(x.clone(), v.clone());
                            bound.push(x.clone());
                        }
                    },
                }
                if !ok {
                    break;
                }
            }
            if ok {
                go(r, i + 1, env, u, out);
            }
            for x in bound {
                env.remove(&x);
            }
        }
    }
    let mut out = Vec::new();
    for r in rules {
        go(r, 0, &mut BTreeMap::new(), universe, &mut out);
    }
    out
}

fn is_model(rules: &[GroundRule], m: &BTreeSet<Ground>, reduct_of: &BTreeSet<Ground>) -> bool {
    rules.iter().filter(|r| !r.weak).all(|r| {
        let blocked = r.neg.iter().any(|a| reduct_of.contains(a));
        blocked || !r.pos.iter().all(|a| m.contains(a)) || r.head.iter().any(|a| m.contains(a))
    })
}

fn is_stable(rules: &[GroundRule], m: &BTreeSet<Ground>, fixed: &BTreeSet<Ground>) -> bool {
    if !is_model(rules, m, m) {
        return false;
    }
    let free: Vec<&Ground> = m.difference(fixed).collect();
    (0u32..(1 << free.len()) - 1).all(|mask| {
        let mut smaller = fixed.clone();
        smaller.extend((0..free.len()).filter(|i| mask >> i & 1 == 1).map(|i| free[i].clone()));
        !is_model(rules, &smaller, m)
    })
}

fn cost(rules: &[GroundRule], m: &BTreeSet<Ground>) -> usize {
    rules.iter().filter(|r| r.weak && r.pos.iter().all(|a| m.contains(a)) && !r.neg.iter().any(|a| m.contains(a))).count()
}

/// Deletion sets whose candidate interpretation is a stable model, with the
/// weak-constraint cost of each. Every answer set of a repair program marks
/// each constrained tuple `d` or `s`, so enumerating deletion sets over
/// those tuples reaches all of them.
fn answer_sets(db: &Database, text: &str) -> Vec<(BTreeSet<TupleId>, usize)> {
    let rules = parse(text);
    let facts: BTreeSet<Ground> = rules.iter().filter(|r| r.pos.is_empty() && r.head.len() == 1 && r.neg.is_empty())
        .filter_map(|r| subst(&r.head[0], &BTreeMap::new()))
        .collect();
    let constrained: BTreeSet<String> =
        rules.iter().flat_map(|r| r.head.iter()).filter_map(|a| a.pred.strip_suffix("_a").map(String::from)).collect();
    let mut tuples: Vec<(TupleId, Ground)> = Vec::new();
    for rel in db.relations().filter(|r| constrained.contains(r.name())) {
        for t in rel.tuples() {
            let mut args = vec![t.tid.to_string()];
            args.extend(t.values.iter().map(super::value));
            tuples.push((t.tid, (format!("{}_a", rel.name()), args)));
        }
    }
    let annotated = |(p, a): &Ground, ann: &str| {
        let mut a = a.clone();
        a.push(ann.to_string());
        (p.clone(), a)
    };
    let mut universe = facts.clone();
    for (_, g) in &tuples {
        universe.insert(annotated(g, "d"));
        universe.insert(annotated(g, "s"));
    }
    let grounded = ground(&rules, &universe);
    let mut out = Vec::new();
    for mask in 0u32..1 << tuples.len() {
        let mut m = facts.clone();
        let mut deleted = BTreeSet::new();
        for (i, (tid, g)) in tuples.iter().enumerate() {
            if mask >> i & 1 == 1 {
                m.insert(annotated(g, "d"));
                deleted.insert(*tid);
            } else {
                m.insert(annotated(g, "s"));
            }
        }
        if is_stable(&grounded, &m, &facts) {
            out.push((deleted, cost(&grounded, &m)));
        }
    }
    out
}

fn cross_check(db: &Database, dcs_text: &str) -> Result<(), TestCaseError> {
    let dcs = parse_denials(dcs_text).unwrap();
    let text = emit_repair_program(db, &dcs, RepairOptions { weak: true, causes: false, responsibility: false }).to_string();
    let models = answer_sets(db, &text);
    let got: BTreeSet<BTreeSet<TupleId>> = models.iter().map(|(d, _)| d.clone()).collect();
    let want: BTreeSet<BTreeSet<TupleId>> = s_repairs(db, &dcs).unwrap().into_iter().map(|r| r.deleted).collect();
    prop_assert_eq!(&got, &want, "program:\n{}", text);
    let best = models.iter().map(|(_, c)| *c).min().unwrap_or(0);
    let optimal: BTreeSet<BTreeSet<TupleId>> =
        models.iter().filter(|(_, c)| *c == best).map(|(d, _)| d.clone()).collect();
    let want_c: BTreeSet<BTreeSet<TupleId>> = c_repairs(db, &dcs).unwrap().into_iter().map(|r| r.deleted).collect();
    prop_assert_eq!(optimal, want_c);
    Ok(())
}

#[test]
fn example_one_models() {
    let (db, _) = super::tests::ex1();
    cross_check(&db, ":- S(X), R(X,Y), S(Y).").unwrap();
    let text = emit_repair_program(&db, &parse_denials(":- S(X), R(X,Y), S(Y).").unwrap(), RepairOptions::default());
    let models = answer_sets(&db, &text.to_string());
    assert_eq!(models.len(), 3);
}

#[test]
fn parser_reads_listing_shapes() {
    let rules = parse("R(1,a,b). S(2,a).\nS_a(T1,X,d) v R_a(T2,X,Y,d) :- S(T1,X), R(T2,X,Y), T1 != T2, not Q(X).\n:~ S_a(T,X,d).");
    assert_eq!(rules.len(), 4);
    assert_eq!(rules[2].head.len(), 2);
    assert_eq!((rules[2].pos.len(), rules[2].neg.len(), rules[2].neq.len()), (2, 1, 1));
    assert!(rules[3].weak);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn repair_program_models_are_repairs(
        rows in prop::collection::vec((0u8..3, 0u8..3, 0u8..3), 1..7),
        pick in 0usize..3,
    ) {
        let c = |i: u8| ["a", "b", "c"][i as usize];
        let mut db = Database::new();
        for (r, n) in [("P", 1), ("Q", 2), ("S", 1)] {
            db.add_relation_with_arity(r, n).unwrap();
        }
        for (rel, x, y) in rows {
            match rel {
                0 => db.push_consts("P", &[c(x)]),
                1 => db.push_consts("Q", &[c(x), c(y)]),
                _ => db.push_consts("S", &[c(x)]),
            }
            .unwrap();
        }
        let dcs = [
            ":- P(X), Q(X,Y), S(Y).",
            ":- P(X), Q(X,Y).\n:- P(X), S(X).",
            ":- Q(X,Y), Q(Y,X).",
        ][pick];
        cross_check(&db, dcs)?;
    }
}

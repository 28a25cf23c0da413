//! Answer-set programs in the DLV / DLV-Complex dialect: repair programs for
//! denial constraints, their cause and responsibility extensions, null-based
//! attribute repairs, the inconsistency-measure program, and counterfactual
//! intervention programs for decision trees. We only emit text.

mod cip;
#[cfg(test)]
mod check;

use std::collections::BTreeSet;
use std::fmt;

use crate::query::{DenialConstraint, Term};
use crate::relational::{Database, Value};
use crate::repair::{c_repairs, RepairError};

pub use cip::{emit_cip, parse_forbid, CipOptions};

/// A program split by statement kind. Rendering order is comments, facts,
/// directives, rules, hard constraints, weak constraints.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AspProgram {
    pub comments: Vec<String>,
    pub facts: Vec<String>,
    pub directives: Vec<String>,
    pub rules: Vec<String>,
    pub hard_constraints: Vec<String>,
    pub weak_constraints: Vec<String>,
}

impl fmt::Display for AspProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        let mut block = |f: &mut fmt::Formatter<'_>, lines: &[String], prefix: &str, per_line: bool| {
            if lines.is_empty() {
                return Ok(());
            }
            if !first {
                f.write_str("\n")?;
            }
            first = false;
            if per_line {
                for l in lines {
                    writeln!(f, "{prefix}{l}")?;
                }
                Ok(())
            } else {
                writeln!(f, "{}", lines.join(" "))
            }
        };
        block(f, &self.comments, "% ", true)?;
        block(f, &self.facts, "", false)?;
        block(f, &self.directives, "", true)?;
        block(f, &self.rules, "", true)?;
        block(f, &self.hard_constraints, "", true)?;
        block(f, &self.weak_constraints, "", true)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RepairOptions {
    /// Weak constraints keeping only cardinality repairs.
    pub weak: bool,
    /// `cause` and `cauCont` rules.
    pub causes: bool,
    /// Contingency-set and `preRho` rules; implies `causes`.
    pub responsibility: bool,
}

impl RepairOptions {
    pub fn all() -> Self {
        RepairOptions { weak: true, causes: true, responsibility: true }
    }
}

/// A constant as DLV reads it: lowercase identifiers and integers stay bare,
/// anything else is double-quoted. NULL becomes the constant `null`.
pub fn constant(text: &str) -> String {
    let bare = text.chars().next().is_some_and(|c| c.is_ascii_lowercase())
        && text.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    let number = !text.is_empty() && text.chars().all(|c| c.is_ascii_digit());
    if bare || number {
        text.to_string()
    } else {
        format!("\"{}\"", text.replace('"', "\\\""))
    }
}

fn value(v: &Value) -> String {
    match v {
        Value::Const(c) => constant(c),
        Value::Null => "null".to_string(),
    }
}

/// Variable names for an atom of arity `n`: X, Y, Z up to three, else
/// X1..Xn. The `alt` set (U, V, W or U1..Un) names a second atom.
fn var_names(n: usize, alt: bool) -> Vec<String> {
    let base: [&str; 3] = if alt { ["U", "V", "W"] } else { ["X", "Y", "Z"] };
    if n <= 3 {
        base[..n].iter().map(|s| s.to_string()).collect()
    } else {
        (1..=n).map(|i| format!("{}{i}", base[0])).collect()
    }
}

fn term(t: &Term) -> String {
    match t {
        Term::Var(v) if v.starts_with(|c: char| c.is_ascii_uppercase()) => v.clone(),
        Term::Var(v) => format!("V_{v}"),
        Term::Const(c) => constant(c),
    }
}

fn atom(pred: &str, tid: &str, args: &[String], annotation: Option<&str>) -> String {
    let mut parts = vec![tid.to_string()];
    parts.extend(args.iter().cloned());
    if let Some(a) = annotation {
        parts.push(a.to_string());
    }
    format!("{pred}({})", parts.join(","))
}

fn aux(rel: &str) -> String {
    format!("{rel}_a")
}

/// Relations in order of first appearance across the constraints, with
/// their arities.
fn constrained_relations(dcs: &[DenialConstraint]) -> Vec<(String, usize)> {
    let mut out: Vec<(String, usize)> = Vec::new();
    for dc in dcs {
        for a in &dc.body {
            if !out.iter().any(|(r, _)| *r == a.relation) {
                out.push((a.relation.clone(), a.arity()));
            }
        }
    }
    out
}

/// Tid variable names `T1..Tk` that avoid the constraint's own variables.
fn tid_vars(dc: &DenialConstraint, prefix: &str) -> Vec<String> {
    let used: BTreeSet<String> = dc.body.iter().flat_map(|a| a.terms.iter().map(term)).collect();
    let mut p = prefix.to_string();
    while (1..=dc.body.len()).any(|i| used.contains(&format!("{p}{i}"))) {
        p.push('_');
    }
    (1..=dc.body.len()).map(|i| format!("{p}{i}")).collect()
}

fn facts(db: &Database) -> Vec<String> {
    let mut out: Vec<(u32, String)> = Vec::new();
    for rel in db.relations() {
        for t in rel.tuples() {
            let args: Vec<String> = t.values.iter().map(value).collect();
            out.push((t.tid.0, format!("{}.", atom(rel.name(), &t.tid.to_string(), &args, None))));
        }
    }
    out.sort();
    out.into_iter().map(|(_, f)| f).collect()
}

/// `#maxint`: twice the largest tid, rounded up to a multiple of 100.
fn maxint(db: &Database) -> u64 {
    let top = db.tids().last().map_or(0, |t| u64::from(t.0)) * 2;
    top.div_ceil(100).max(1) * 100
}

/// The disjunctive repair rule of one constraint.
fn repair_rule(dc: &DenialConstraint) -> String {
    let tids = tid_vars(dc, "T");
    let args = |a: &crate::query::Atom| a.terms.iter().map(term).collect::<Vec<_>>();
    let head: Vec<String> =
        dc.body.iter().zip(&tids).map(|(a, t)| atom(&aux(&a.relation), t, &args(a), Some("d"))).collect();
    let body: Vec<String> = dc.body.iter().zip(&tids).map(|(a, t)| atom(&a.relation, t, &args(a), None)).collect();
    format!("{} :- {}.", head.join(" v "), body.join(", "))
}

fn repair_core(db: &Database, dcs: &[DenialConstraint], opts: RepairOptions) -> AspProgram {
    let mut p = AspProgram { facts: facts(db), ..AspProgram::default() };
    if dcs.is_empty() {
        return p;
    }
    let rels = constrained_relations(dcs);
    for dc in dcs {
        p.rules.push(repair_rule(dc));
    }
    for (r, n) in &rels {
        let xs = var_names(*n, false);
        p.rules.push(format!("{} :- {}, not {}.", atom(&aux(r), "T", &xs, Some("s")), atom(r, "T", &xs, None), atom(&aux(r), "T", &xs, Some("d"))));
    }
    if opts.causes || opts.responsibility {
        for (r, n) in &rels {
            p.rules.push(format!("cause(T) :- {}.", atom(&aux(r), "T", &var_names(*n, false), Some("d"))));
        }
        let pair = |(r1, n1): &(String, usize), (r2, n2): &(String, usize)| {
            let ne = if r1 == r2 { ", T != TC" } else { "" };
            format!(
                "cauCont(T,TC) :- {}, {}{ne}.",
                atom(&aux(r1), "T", &var_names(*n1, false), Some("d")),
                atom(&aux(r2), "TC", &var_names(*n2, true), Some("d"))
            )
        };
        for r in &rels {
            p.rules.push(pair(r, r));
        }
        for i in 0..rels.len() {
            for j in i + 1..rels.len() {
                p.rules.push(pair(&rels[i], &rels[j]));
                p.rules.push(pair(&rels[j], &rels[i]));
            }
        }
    }
    if opts.responsibility {
        p.rules.extend(
            [
                "preCont(T,{TC}) :- cauCont(T,TC).",
                "preCont(T,#union(C,{TC})) :- cauCont(T,TC), preCont(T,C), not #member(TC,C).",
                "cont(T,C) :- preCont(T,C), not HoleIn(T,C).",
                "HoleIn(T,C) :- preCont(T,C), cauCont(T,TC), not #member(TC,C).",
                "tmpCont(T) :- cont(T,C), not #card(C,0).",
                "cont(T,{}) :- cause(T), not tmpCont(T).",
                "preRho(T,N + 1) :- cause(T), #int(N), #count{TC: cauCont(T,TC)} = N.",
            ]
            .map(String::from),
        );
        p.directives.push(format!("#maxint = {}.", maxint(db)));
    }
    if opts.weak {
        for (r, n) in &rels {
            p.weak_constraints.push(format!(":~ {}.", atom(&aux(r), "T", &var_names(*n, false), Some("d"))));
        }
    }
    p
}

/// Repair program for `dcs`: facts with tids, one disjunctive deletion rule
/// per constraint and `s` collection rules, extended as `opts` asks. The
/// responsibility rules stop at `preRho`, the inverse responsibility, since
/// the integer arithmetic cannot express `1/n`.
pub fn emit_repair_program(db: &Database, dcs: &[DenialConstraint], opts: RepairOptions) -> AspProgram {
    repair_core(db, dcs, opts)
}

/// The cardinality-repair program extended with `Del`/`NumDel`; its intended
/// answer, the size of a cardinality repair's deletion set, is recorded as
/// a comment.
pub fn emit_inc_measure_program(db: &Database, dcs: &[DenialConstraint]) -> Result<AspProgram, RepairError> {
    let mut p = repair_core(db, dcs, RepairOptions { weak: true, causes: false, responsibility: false });
    for (r, n) in constrained_relations(dcs) {
        p.rules.push(format!("Del(T) :- {}.", atom(&aux(&r), "T", &var_names(n, false), Some("d"))));
    }
    p.rules.push("NumDel(N) :- #count{T: Del(T)} = N.".to_string());
    let deleted = c_repairs(db, dcs)?.first().map_or(0, |r| r.deleted.len());
    p.comments.push(format!("intended answer: NumDel({deleted})"));
    Ok(p)
}

/// Positions (0-based) of an atom that a NULL can break: join variables
/// (occurring more than once in the body) and constants.
fn breakable(dc: &DenialConstraint) -> Vec<(usize, usize)> {
    let count = |v: &str| dc.body.iter().flat_map(|a| a.vars()).filter(|w| *w == v).count();
    let mut out = Vec::new();
    for (i, a) in dc.body.iter().enumerate() {
        for (p, t) in a.terms.iter().enumerate() {
            let keep = match t {
                Term::Var(v) => count(v) > 1,
                Term::Const(_) => true,
            };
            if keep {
                out.push((i, p));
            }
        }
    }
    out
}

/// Null-based attribute repair program: transition, update, final-update
/// and stay rule groups, plus `cause(T,pos,val)` rules. Each constraint's
/// disjunctive update is written as the equivalent normal rules, one per
/// breakable position. When `db` already holds NULLs the cause rules get an
/// `X != null` guard.
pub fn emit_attr_repair_program(db: &Database, dcs: &[DenialConstraint]) -> AspProgram {
    let mut p = AspProgram { facts: facts(db), ..AspProgram::default() };
    if dcs.is_empty() {
        return p;
    }
    let rels = constrained_relations(dcs);
    for (r, n) in &rels {
        let xs = var_names(*n, false);
        p.rules.push(format!("{} :- {}.", atom(&aux(r), "T", &xs, Some("tr")), atom(r, "T", &xs, None)));
        p.rules.push(format!("{} :- {}.", atom(&aux(r), "T", &xs, Some("tr")), atom(&aux(r), "T", &xs, Some("u"))));
    }
    for dc in dcs {
        let spots = breakable(dc);
        let mut joins: Vec<String> = Vec::new();
        for (i, p2) in &spots {
            if let Term::Var(v) = &dc.body[*i].terms[*p2] {
                let v = term(&Term::Var(v.clone()));
                if !joins.contains(&v) {
                    joins.push(v);
                }
            }
        }
        for &(i, pos) in &spots {
            // the updated atom first, under T; the rest in order under T2, T3, ...
            let mut order = vec![i];
            order.extend((0..dc.body.len()).filter(|&j| j != i));
            let mut tid = vec![String::new(); dc.body.len()];
            for (k, &j) in order.iter().enumerate() {
                tid[j] = if k == 0 { "T".into() } else { format!("T{}", k + 1) };
            }
            let args = |j: usize| dc.body[j].terms.iter().map(term).collect::<Vec<_>>();
            let nulled = |j: usize, q: usize| {
                let mut a = args(j);
                a[q] = "null".into();
                atom(&aux(&dc.body[j].relation), &tid[j], &a, Some("u"))
            };
            let mut body: Vec<String> =
                order.iter().map(|&j| atom(&aux(&dc.body[j].relation), &tid[j], &args(j), Some("tr"))).collect();
            body.extend(joins.iter().map(|v| format!("{v} != null")));
            body.extend(spots.iter().filter(|s| **s != (i, pos)).map(|&(j, q)| format!("not {}", nulled(j, q))));
            p.rules.push(format!("{} :- {}.", nulled(i, pos), body.join(", ")));
        }
    }
    for (r, n) in &rels {
        let xs = var_names(*n, false);
        let auxes: Vec<String> = (1..=*n).map(|k| atom(&format!("aux{r}{k}"), "T", &xs, None)).collect();
        let nots: Vec<String> = auxes.iter().map(|a| format!("not {a}")).collect();
        p.rules.push(format!("{} :- {}, {}.", atom(&aux(r), "T", &xs, Some("fu")), atom(&aux(r), "T", &xs, Some("u")), nots.join(", ")));
        for (k, a) in auxes.iter().enumerate() {
            let mut nulled = xs.clone();
            nulled[k] = "null".into();
            p.rules.push(format!(
                "{a} :- {}, {}, {} != null.",
                atom(r, "T", &xs, None),
                atom(&aux(r), "T", &nulled, Some("u")),
                xs[k]
            ));
        }
    }
    for (r, n) in &rels {
        let xs = var_names(*n, false);
        p.rules.push(format!("{} :- {}.", atom(&aux(r), "T", &xs, Some("s")), atom(&aux(r), "T", &xs, Some("fu"))));
        p.rules.push(format!("{} :- {}, not aux{r}(T).", atom(&aux(r), "T", &xs, Some("s")), atom(r, "T", &xs, None)));
        p.rules.push(format!("aux{r}(T) :- {}.", atom(&aux(r), "T", &xs, Some("u"))));
    }
    let guard = db.has_nulls();
    for (r, n) in &rels {
        let xs = var_names(*n, false);
        for k in 0..*n {
            let mut nulled = vec!["_".to_string(); *n];
            nulled[k] = "null".into();
            let g = if guard { format!(", {} != null", xs[k]) } else { String::new() };
            p.rules.push(format!(
                "cause(T,{},{}) :- {}, {}{g}.",
                k + 1,
                xs[k],
                atom(r, "T", &xs, None),
                atom(&aux(r), "T", &nulled, Some("s"))
            ));
        }
    }
    p
}

/// Whitespace-free rendering for comparing programs with listings.
pub fn normalize(text: &str) -> String {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('%'))
        .flat_map(|l| l.chars())
        .filter(|c| !c.is_whitespace())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query::parse_denials;
    use crate::relational::TupleId;

    pub(crate) fn ex1() -> (Database, Vec<DenialConstraint>) {
        let mut db = Database::new();
        for (r, v) in [("R", &["a", "b"][..]), ("R", &["c", "d"]), ("R", &["b", "b"]), ("S", &["a"]), ("S", &["c"]), ("S", &["b"])] {
            db.push_consts(r, v).unwrap();
        }
        (db, parse_denials(":- S(X), R(X,Y), S(Y).").unwrap())
    }

    #[test]
    fn repair_program_listing() {
        let (db, dcs) = ex1();
        let text = emit_repair_program(&db, &dcs, RepairOptions::all()).to_string();
        assert!(text.starts_with("R(1,a,b). R(2,c,d). R(3,b,b). S(4,a). S(5,c). S(6,b).\n"));
        for line in [
            "S_a(T1,X,d) v R_a(T2,X,Y,d) v S_a(T3,Y,d) :- S(T1,X), R(T2,X,Y), S(T3,Y).",
            "S_a(T,X,s) :- S(T,X), not S_a(T,X,d).",
            "R_a(T,X,Y,s) :- R(T,X,Y), not R_a(T,X,Y,d).",
            "cauCont(T,TC) :- S_a(T,X,d), S_a(TC,U,d), T != TC.",
            "cauCont(T,TC) :- R_a(T,X,Y,d), S_a(TC,U,d).",
            "#maxint = 100.",
            ":~ S_a(T,X,d).",
            ":~ R_a(T,X,Y,d).",
        ] {
            assert!(text.contains(line), "missing {line}\n{text}");
        }
        let again = emit_repair_program(&db, &dcs, RepairOptions::all()).to_string();
        assert_eq!(text, again);
    }

    #[test]
    fn option_subsets() {
        let (db, dcs) = ex1();
        let facts_only = emit_repair_program(&db, &[], RepairOptions::all());
        assert!(facts_only.rules.is_empty() && facts_only.weak_constraints.is_empty());
        let weak = emit_repair_program(&db, &dcs, RepairOptions { weak: true, ..Default::default() });
        assert_eq!(weak.weak_constraints.len(), 2);
        assert!(!weak.to_string().contains("cause"));
        let rho = emit_repair_program(&db, &dcs, RepairOptions { responsibility: true, ..Default::default() });
        assert!(rho.rules.iter().any(|r| r.starts_with("cause(T)")));
    }

    #[test]
    fn maxint_rounding() {
        let mut db = Database::new();
        db.add_relation_with_arity("R", 1).unwrap();
        db.insert("R", TupleId(51), vec![Value::constant("a")]).unwrap();
        assert_eq!(maxint(&db), 200);
        assert_eq!(maxint(&Database::new()), 100);
    }

    #[test]
    fn inc_measure_intended_answers() {
        let (db, dcs) = ex1();
        let p = emit_inc_measure_program(&db, &dcs).unwrap();
        assert_eq!(p.comments, vec!["intended answer: NumDel(1)"]);
        assert!(p.rules.contains(&"NumDel(N) :- #count{T: Del(T)} = N.".to_string()));
        assert!(p.rules.contains(&"Del(T) :- R_a(T,X,Y,d).".to_string()));
        let none = emit_inc_measure_program(&db, &[]).unwrap();
        assert_eq!(none.comments, vec!["intended answer: NumDel(0)"]);
    }

    fn ex10() -> (Database, Vec<DenialConstraint>) {
        let mut db = Database::new();
        for (r, v) in [("S", &["a"][..]), ("S", &["b"]), ("R", &["b", "c"]), ("R", &["b", "d"]), ("R", &["b", "e"])] {
            db.push_consts(r, v).unwrap();
        }
        (db, parse_denials(":- S(X), R(X,Y).").unwrap())
    }

    #[test]
    fn attr_program_listing() {
        let (db, dcs) = ex10();
        let p = emit_attr_repair_program(&db, &dcs);
        let text = p.to_string();
        assert!(text.starts_with("S(1,a). S(2,b). R(3,b,c). R(4,b,d). R(5,b,e).\n"));
        for line in [
            "S_a(T,X,tr) :- S(T,X).",
            "R_a(T,X,Y,tr) :- R_a(T,X,Y,u).",
            "S_a(T,null,u) :- S_a(T,X,tr), R_a(T2,X,Y,tr), X != null, not R_a(T2,null,Y,u).",
            "R_a(T,null,Y,u) :- R_a(T,X,Y,tr), S_a(T2,X,tr), X != null, not S_a(T2,null,u).",
            "S_a(T,X,fu) :- S_a(T,X,u), not auxS1(T,X).",
            "auxS1(T,X) :- S(T,X), S_a(T,null,u), X != null.",
            "R_a(T,X,Y,fu) :- R_a(T,X,Y,u), not auxR1(T,X,Y), not auxR2(T,X,Y).",
            "auxR2(T,X,Y) :- R(T,X,Y), R_a(T,X,null,u), Y != null.",
            "S_a(T,X,s) :- S(T,X), not auxS(T).",
            "auxR(T) :- R_a(T,X,Y,u).",
            "cause(T,1,X) :- S(T,X), S_a(T,null,s).",
            "cause(T,2,Y) :- R(T,X,Y), R_a(T,_,null,s).",
        ] {
            assert!(text.contains(line), "missing {line}\n{text}");
        }
        assert!(!text.contains("S_a(T,null,s), X != null"), "no guard without nulls");
        let empty = emit_attr_repair_program(&Database::new(), &dcs);
        assert!(empty.facts.is_empty() && !empty.rules.is_empty());
        let nulls = db.with_nulls(&[crate::relational::Cell { tid: TupleId(1), position: 1 }]).unwrap();
        let guarded = emit_attr_repair_program(&nulls, &dcs).to_string();
        assert!(guarded.contains("S(1,null)."));
        assert!(guarded.contains("cause(T,1,X) :- S(T,X), S_a(T,null,s), X != null."));
    }

    #[test]
    fn constants_and_variables() {
        assert_eq!(constant("abc_1"), "abc_1");
        assert_eq!(constant("42"), "42");
        assert_eq!(constant("John"), "\"John\"");
        assert_eq!(constant("a b"), "\"a b\"");
        assert_eq!(term(&Term::var("x")), "V_x");
        assert_eq!(var_names(4, true), vec!["U1", "U2", "U3", "U4"]);
    }
}

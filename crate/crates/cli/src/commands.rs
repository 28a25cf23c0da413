use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use dbxplain::asp::{
    emit_attr_repair_program, emit_cip, emit_inc_measure_program, emit_repair_program, parse_forbid, CipOptions,
    RepairOptions,
};
use dbxplain::causality::{actual_causes, attr_causes, cause_report, causes_under_ics, CauseReport};
use dbxplain::classifier::{
    counter_score, counterfactual_versions, load_sample, resp_score, shap_scores, x_resp, Classifier, DecisionTree,
    Distribution, Entity, Expectation, LabelTable,
};
use dbxplain::num::parse_ratio;
use dbxplain::query::{
    instantiate, is_hierarchical, negate_ucq, parse_denials, parse_hard_constraints, parse_query, DenialConstraint,
    Hierarchy, Ucq,
};
use dbxplain::relational::{eval_query, load_database, Answers, Cell, Database, TupleId};
use dbxplain::repair::{attr_repairs, c_repairs, conflict_hypergraph, inc_degree, s_repairs, RepairSemantics};
use dbxplain::score::{causal_effect, hoeffding_samples, lineage, Players, QueryGame, TupleProbability};
use dbxplain::Rational;
use serde_json::{json, Map, Value};

use crate::render::{self, Format};
use crate::{locate, read, Command, DataArgs, DistArgs, DistKind, EntityArgs, Failure, ProgramKind, QueryArgs, RepairKind};

pub fn run(cmd: &Command, fmt: Format) -> Result<String, Failure> {
    let report = match cmd {
        Command::IngestCheck(d) => ingest_check(d)?,
        Command::Query(q) => query(q)?,
        Command::Causes(q) => {
            let (db, ucq) = load_query(q)?;
            let causes = actual_causes(&db, &ucq)?;
            json!({ "query": ucq.name(), "causes": tuple_causes(&db, &causes, fmt) })
        }
        Command::Resp { q, tid } => {
            let (db, ucq) = load_query(q)?;
            let report = cause_report(&db, &ucq, TupleId(*tid))?;
            tuple_cause(&db, &report, fmt)
        }
        Command::AttrCauses(q) => attribute_causes(q, fmt)?,
        Command::CausesIcs { q, ics } => {
            let (db, ucq) = load_query(q)?;
            let hard = parse_hard_constraints(&read(&locate(ics, Some(&q.data.data)))?)?;
            let causes = causes_under_ics(&db, &ucq, &hard)?;
            json!({ "query": ucq.name(), "constraints": hard.len(), "causes": tuple_causes(&db, &causes, fmt) })
        }
        Command::CausalEffect { q, tid, prob, tuple_prob } => effect(q, *tid, prob, tuple_prob, fmt)?,
        Command::Shapley { q, tid, sample, eps, delta, seed } => {
            let (db, ucq) = load_query(q)?;
            let game = QueryGame::new(&db, &ucq, Players::All)?;
            let targets = targets(&db, *tid)?;
            let mut scores = Vec::new();
            let mut head = Map::new();
            if *sample {
                let seed = seed.ok_or_else(|| Failure::Usage("--sample needs --seed".into()))?;
                let m = hoeffding_samples(*eps, *delta)?;
                for t in targets {
                    let s = game.shapley_sampled::<Rational>(&db, t, m, seed)?;
                    scores.push(with(render::tuple(&db, t), "shapley", fmt.ratio(&s.estimate)));
                }
                head.insert("method".into(), json!("sampled"));
                head.insert("samples".into(), json!(m));
                head.insert("seed".into(), json!(seed));
                head.insert("eps".into(), json!(eps));
                head.insert("delta".into(), json!(delta));
                head.insert(
                    "guarantee".into(),
                    json!(format!("|estimate - exact| <= {eps} with probability >= 1 - {delta}")),
                );
            } else {
                for t in targets {
                    let s: Rational = game.shapley(&db, t)?;
                    scores.push(with(render::tuple(&db, t), "shapley", fmt.ratio(&s)));
                }
                head.insert("method".into(), json!("exact"));
            }
            head.insert("query".into(), json!(ucq.name()));
            head.insert("hierarchical".into(), hierarchy(&ucq));
            head.insert("scores".into(), Value::Array(scores));
            Value::Object(head)
        }
        Command::Banzhaf { q, tid } => {
            let (db, ucq) = load_query(q)?;
            let game = QueryGame::new(&db, &ucq, Players::All)?;
            let mut scores = Vec::new();
            for t in targets(&db, *tid)? {
                let b: Rational = game.banzhaf(&db, t)?;
                scores.push(with(render::tuple(&db, t), "banzhaf", fmt.ratio(&b)));
            }
            json!({ "query": ucq.name(), "scores": scores })
        }
        Command::IncDegree(d) => {
            let (db, dcs) = load_dcs(&d.data, &d.dcs)?;
            let deg = inc_degree::<Rational>(&db, &dcs)?;
            json!({ "inc_degree": fmt.ratio(&deg.cardinality) })
        }
        Command::Repairs { dc, semantics } => repairs(&dc.data, &dc.dcs, *semantics)?,
        Command::Xresp { e, versions } => {
            let (c, entity) = load_entity(e)?;
            let mut out = per_feature(&c, e, "x_resp", |f| Ok(fmt.ratio(&x_resp::<Rational>(&c, &entity, f)?)))?;
            if let Some(d) = versions {
                let space = c.space();
                let vs: Vec<Value> = counterfactual_versions(&c, &entity, *d)?
                    .iter()
                    .map(|v| {
                        json!({
                            "entity": space.names(&v.entity).join(","),
                            "changed": v.changed.iter().map(|&i| space.features()[i].name.clone()).collect::<Vec<_>>(),
                            "distance": v.distance(),
                        })
                    })
                    .collect();
                out.insert("versions".into(), Value::Array(vs));
            }
            Value::Object(out)
        }
        Command::Counter { e, dist } => {
            let (c, entity) = load_entity(e)?;
            let d = distribution(&c, e, dist)?;
            Value::Object(per_feature(&c, e, "counter", |f| Ok(fmt.ratio(&counter_score(&c, &entity, f, &d)?)))?)
        }
        Command::RespScore { e, dist, max_contingency, exclude_original } => {
            let (c, entity) = load_entity(e)?;
            let d = distribution(&c, e, dist)?;
            let mode = if *exclude_original { Expectation::ExcludeOriginal } else { Expectation::Full };
            let max = max_contingency.unwrap_or(c.space().len());
            let space = c.space();
            let one = |f: usize| -> Result<Value, Failure> {
                let r = resp_score(&c, &entity, f, &d, max, mode)?;
                let gamma: Map<String, Value> = r
                    .contingency
                    .iter()
                    .map(|&(g, v)| (space.features()[g].name.clone(), json!(space.features()[g].domain[v])))
                    .collect();
                Ok(json!({ "resp": fmt.ratio(&r.score), "contingency": gamma }))
            };
            match &e.feature {
                Some(name) => one(space.feature_index(name)?)?,
                None => {
                    let mut all = Map::new();
                    for (i, f) in space.features().iter().enumerate() {
                        all.insert(f.name.clone(), one(i)?);
                    }
                    json!({ "resp": all })
                }
            }
        }
        Command::Shap { e, dist } => {
            let (c, entity) = load_entity(e)?;
            let d = distribution(&c, e, dist)?;
            let scores = shap_scores(&c, &entity, &d)?;
            Value::Object(per_feature(&c, e, "shap", |f| Ok(fmt.ratio(&scores[f])))?)
        }
        Command::EmitAsp { kind, data, dcs, weak, causes, responsibility, tree, entity, forbid } => {
            return emit(*kind, data.as_deref(), dcs.as_deref(), (*weak, *causes, *responsibility), tree.as_deref(), entity.as_deref(), forbid);
        }
    };
    Ok(render::finish(&report))
}

fn with(mut v: Value, key: &str, x: Value) -> Value {
    v.as_object_mut().expect("object").insert(key.into(), x);
    v
}

fn load_query(q: &QueryArgs) -> Result<(Database, Ucq), Failure> {
    let db = load_database(&q.data.data)?;
    let text = read(&locate(&q.query, Some(&q.data.data)))?;
    let mut ucq = parse_query(&text, q.name.as_deref())?;
    if let Some(answer) = &q.answer {
        let values: Vec<String> = answer.split(',').map(|s| s.trim().to_string()).collect();
        ucq = Ucq { disjuncts: ucq.disjuncts.iter().map(|cq| instantiate(cq, &values)).collect::<Result<_, _>>()? };
    }
    Ok((db, ucq))
}

fn load_dcs(data: &DataArgs, dcs: &Path) -> Result<(Database, Vec<DenialConstraint>), Failure> {
    let db = load_database(&data.data)?;
    let dcs = parse_denials(&read(&locate(dcs, Some(&data.data)))?)?;
    Ok((db, dcs))
}

fn targets(db: &Database, tid: Option<u32>) -> Result<Vec<TupleId>, Failure> {
    match tid {
        Some(t) if !db.contains(TupleId(t)) => Err(Failure::Domain(format!("cli: unknown tuple id {t}"))),
        Some(t) => Ok(vec![TupleId(t)]),
        None => Ok(db.tids().collect()),
    }
}

fn hierarchy(q: &Ucq) -> Value {
    match q.as_cq().map(is_hierarchical) {
        Some(Ok(Hierarchy::Hierarchical)) => json!(true),
        Some(Ok(Hierarchy::NotHierarchical(..))) => json!(false),
        _ => Value::Null,
    }
}

fn ingest_check(d: &DataArgs) -> Result<Value, Failure> {
    let db = load_database(&d.data)?;
    let relations: Vec<Value> = db
        .relations()
        .map(|r| json!({ "name": r.name(), "arity": r.arity(), "columns": r.columns(), "tuples": r.len() }))
        .collect();
    Ok(json!({ "relations": relations, "tuples": db.size(), "has_nulls": db.has_nulls() }))
}

fn query(q: &QueryArgs) -> Result<Value, Failure> {
    let (db, ucq) = load_query(q)?;
    let answers = eval_query(&db, &ucq)?;
    let mut out = Map::new();
    out.insert("query".into(), json!(ucq.name()));
    out.insert("holds".into(), json!(answers.is_true()));
    if let Answers::Tuples(rows) = &answers {
        let rows: Vec<Vec<String>> = rows.iter().map(|r| r.iter().map(ToString::to_string).collect()).collect();
        out.insert("answers".into(), json!(rows));
    }
    if let Some(cq) = ucq.as_cq() {
        match is_hierarchical(cq) {
            Ok(Hierarchy::Hierarchical) => {
                out.insert("hierarchical".into(), json!(true));
            }
            Ok(Hierarchy::NotHierarchical(x, y)) => {
                out.insert("hierarchical".into(), json!(false));
                out.insert("non_nested".into(), json!([x, y]));
            }
            Err(e) => {
                out.insert("hierarchical".into(), Value::Null);
                out.insert("hierarchy_note".into(), json!(e.to_string()));
            }
        }
    } else {
        out.insert("hierarchical".into(), Value::Null);
    }
    Ok(Value::Object(out))
}

fn tuple_cause(db: &Database, c: &CauseReport<TupleId>, fmt: Format) -> Value {
    let mut v = render::tuple(db, c.cause);
    let o = v.as_object_mut().expect("object");
    o.insert("kind".into(), serde_json::to_value(c.kind).expect("kind"));
    o.insert("responsibility".into(), fmt.ratio(&c.responsibility));
    o.insert("min_contingencies".into(), Value::Array(c.min_contingencies.iter().map(render::tids).collect()));
    v
}

fn tuple_causes(db: &Database, causes: &[CauseReport<TupleId>], fmt: Format) -> Vec<Value> {
    causes.iter().map(|c| tuple_cause(db, c, fmt)).collect()
}

fn cells(set: &BTreeSet<Cell>) -> Value {
    json!(set.iter().map(ToString::to_string).collect::<Vec<_>>())
}

fn attribute_causes(q: &QueryArgs, fmt: Format) -> Result<Value, Failure> {
    let (db, ucq) = load_query(q)?;
    let causes = attr_causes(&db, &ucq)?;
    let dcs = negate_ucq(&ucq)?;
    let listed: Vec<Value> = causes
        .iter()
        .map(|c| {
            json!({
                "cell": c.cause.to_string(),
                "tuple": db.describe(c.cause.tid),
                "value": db.value(c.cause).map(ToString::to_string),
                "kind": c.kind,
                "responsibility": fmt.ratio(&c.responsibility),
                "min_contingencies": c.min_contingencies.iter().map(cells).collect::<Vec<_>>(),
            })
        })
        .collect();
    let subset = attr_repairs(&db, &dcs, RepairSemantics::Subset)?;
    let card = attr_repairs(&db, &dcs, RepairSemantics::Cardinality)?;
    Ok(json!({
        "query": ucq.name(),
        "causes": listed,
        "interventions": subset.iter().map(|i| cells(&i.changes)).collect::<Vec<_>>(),
        "minimum_interventions": card.iter().map(|i| cells(&i.changes)).collect::<Vec<_>>(),
    }))
}

fn probability(text: &str) -> Result<Rational, Failure> {
    parse_ratio(text).ok_or_else(|| Failure::Usage(format!("`{text}` is not a probability")))
}

fn effect(q: &QueryArgs, tid: Option<u32>, prob: &str, overrides: &[String], fmt: Format) -> Result<Value, Failure> {
    let (db, ucq) = load_query(q)?;
    let mut p = TupleProbability::uniform(probability(prob)?)?;
    for o in overrides {
        let (t, v) = o.split_once('=').ok_or_else(|| Failure::Usage(format!("expected TID=P, got `{o}`")))?;
        let t: u32 = t.trim().parse().map_err(|_| Failure::Usage(format!("bad tuple id in `{o}`")))?;
        p = p.with(TupleId(t), probability(v)?)?;
    }
    let f = lineage(&db, &ucq)?;
    let mut scores = Vec::new();
    for t in targets(&db, tid)? {
        let ce = causal_effect(&db, &ucq, t, &p)?;
        scores.push(with(render::tuple(&db, t), "causal_effect", fmt.ratio(&ce)));
    }
    Ok(json!({ "query": ucq.name(), "lineage": f.to_string(), "scores": scores }))
}

fn repairs(data: &DataArgs, dcs: &Path, semantics: RepairKind) -> Result<Value, Failure> {
    let (db, dcs) = load_dcs(data, dcs)?;
    let name = match semantics {
        RepairKind::Subset => "subset",
        RepairKind::Cardinality => "cardinality",
        RepairKind::AttrSubset => "attr-subset",
        RepairKind::AttrCardinality => "attr-cardinality",
    };
    let body = match semantics {
        RepairKind::Subset | RepairKind::Cardinality => {
            let chg = conflict_hypergraph(&db, &dcs)?;
            let rs = if semantics == RepairKind::Subset { s_repairs(&db, &dcs)? } else { c_repairs(&db, &dcs)? };
            let rs: Vec<Value> = rs
                .iter()
                .map(|r| {
                    let kept: Vec<String> = r.kept.iter().map(|&t| db.describe(t)).collect();
                    json!({ "kept": render::tids(&r.kept), "deleted": render::tids(&r.deleted), "instance": kept })
                })
                .collect();
            json!({ "conflicts": chg.edges.iter().map(render::tids).collect::<Vec<_>>(), "repairs": rs })
        }
        RepairKind::AttrSubset | RepairKind::AttrCardinality => {
            let sem = if semantics == RepairKind::AttrSubset { RepairSemantics::Subset } else { RepairSemantics::Cardinality };
            let is = attr_repairs(&db, &dcs, sem)?;
            json!({ "interventions": is.iter().map(|i| cells(&i.changes)).collect::<Vec<_>>() })
        }
    };
    Ok(with(body, "semantics", json!(name)))
}

fn model_dir(e: &EntityArgs) -> Option<&Path> {
    e.data.as_deref()
}

fn load_classifier(tree: Option<&PathBuf>, table: Option<&PathBuf>, dir: Option<&Path>) -> Result<Classifier, Failure> {
    match (tree, table) {
        (Some(t), _) => Ok(DecisionTree::load(&locate(t, dir))?.into()),
        (None, Some(t)) => Ok(LabelTable::load(&locate(t, dir))?.into()),
        (None, None) => Err(Failure::Usage("one of --tree or --table is required".into())),
    }
}

fn load_entity(e: &EntityArgs) -> Result<(Classifier, Entity), Failure> {
    let c = load_classifier(e.model.tree.as_ref(), e.model.table.as_ref(), model_dir(e))?;
    let entity = c.space().parse_entity(&e.entity)?;
    Ok((c, entity))
}

fn distribution(c: &Classifier, e: &EntityArgs, d: &DistArgs) -> Result<Distribution<Rational>, Failure> {
    let sample = || -> Result<Vec<Entity>, Failure> {
        let path = d.sample.as_ref().ok_or_else(|| Failure::Usage("--sample is required for this --dist".into()))?;
        Ok(load_sample(c.space(), &locate(path, model_dir(e)))?)
    };
    Ok(match d.dist {
        DistKind::Uniform => Distribution::Uniform,
        DistKind::Product => Distribution::product(c.space(), &sample()?)?,
        DistKind::Empirical => Distribution::empirical(c.space(), sample()?)?,
    })
}

/// `{key: score}` for `--feature`, `{key: {feature: score, ..}}` otherwise.
fn per_feature(
    c: &Classifier,
    e: &EntityArgs,
    key: &str,
    mut score: impl FnMut(usize) -> Result<Value, Failure>,
) -> Result<Map<String, Value>, Failure> {
    let space = c.space();
    let mut out = Map::new();
    match &e.feature {
        Some(name) => {
            out.insert(key.into(), score(space.feature_index(name)?)?);
        }
        None => {
            let mut all = Map::new();
            for (i, f) in space.features().iter().enumerate() {
                all.insert(f.name.clone(), score(i)?);
            }
            out.insert(key.into(), Value::Object(all));
        }
    }
    Ok(out)
}

fn need<'a, T: ?Sized>(x: Option<&'a T>, flag: &str, kind: &str) -> Result<&'a T, Failure> {
    x.ok_or_else(|| Failure::Usage(format!("--kind {kind} needs {flag}")))
}

fn emit(
    kind: ProgramKind,
    data: Option<&Path>,
    dcs: Option<&Path>,
    (weak, causes, responsibility): (bool, bool, bool),
    tree: Option<&Path>,
    entity: Option<&str>,
    forbid: &[String],
) -> Result<String, Failure> {
    let program = match kind {
        ProgramKind::Repair | ProgramKind::IncMeasure | ProgramKind::AttrRepair => {
            let name = match kind {
                ProgramKind::Repair => "repair",
                ProgramKind::IncMeasure => "inc-measure",
                _ => "attr-repair",
            };
            let dir = need(data, "--data", name)?;
            let db = load_database(dir)?;
            let dcs = parse_denials(&read(&locate(need(dcs, "--dcs", name)?, Some(dir)))?)?;
            match kind {
                ProgramKind::Repair => emit_repair_program(&db, &dcs, RepairOptions { weak, causes, responsibility }),
                ProgramKind::IncMeasure => emit_inc_measure_program(&db, &dcs)?,
                _ => emit_attr_repair_program(&db, &dcs),
            }
        }
        ProgramKind::Cip => {
            let tree = DecisionTree::load(&locate(need(tree, "--tree", "cip")?, data))?;
            let e = tree.space().parse_entity(need(entity, "--entity", "cip")?)?;
            let forbid = forbid.iter().map(|f| parse_forbid(tree.space(), f)).collect::<Result<_, _>>()?;
            emit_cip(&tree, &e, &CipOptions { weak, forbid })?
        }
    };
    Ok(program.to_string())
}

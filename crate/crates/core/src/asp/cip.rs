use crate::classifier::{ClassifierError, DecisionTree, Entity, FeatureSpace, Node};

use super::{constant, AspProgram};

/// Extras for a counterfactual intervention program.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CipOptions {
    /// Weak constraints that keep only versions with fewest changes.
    pub weak: bool,
    /// Partial entities that may never be reached, as (feature, value)
    /// pairs; each becomes a hard constraint on entities in transition.
    pub forbid: Vec<Vec<(usize, usize)>>,
}

/// Parses `outlook=rain,wind=strong` into a forbidden partial entity.
pub fn parse_forbid(space: &FeatureSpace, text: &str) -> Result<Vec<(usize, usize)>, ClassifierError> {
    text.split(',')
        .map(|pair| {
            let (f, v) = pair.split_once('=').ok_or_else(|| ClassifierError::UnknownFeature(pair.trim().to_string()))?;
            let f = space.feature_index(f.trim())?;
            Ok((f, space.value_index(f, v.trim())?))
        })
        .collect()
}

fn vars(n: usize) -> Vec<String> {
    if n <= 3 {
        ["X", "Y", "Z"][..n].iter().map(|s| s.to_string()).collect()
    } else {
        (1..=n).map(|i| format!("X{i}")).collect()
    }
}

fn ent(args: &[String], annotation: &str) -> String {
    format!("ent(E,{},{annotation})", args.join(","))
}

/// Expands value-set tests into every combination of single values.
fn expand(path: &[(usize, Vec<usize>)]) -> Vec<Vec<(usize, usize)>> {
    let mut out = vec![Vec::new()];
    for (f, vs) in path {
        out = out.into_iter().flat_map(|p: Vec<(usize, usize)>| {
            vs.iter().map(move |&v| {
                let mut q = p.clone();
                q.push((*f, v));
                q
            })
        }).collect();
    }
    out
}

/// Counterfactual intervention program for `tree` and entity `e`: domain
/// facts, the tree as `cls` rules (label 0 by default negation), transition
/// and intervention rules with one choice predicate per feature, the ban on
/// returning to `e`, stop, `expl` and `invResp` rules.
pub fn emit_cip(tree: &DecisionTree, e: &Entity, opts: &CipOptions) -> Result<AspProgram, ClassifierError> {
    let space = tree.space();
    space.check(e)?;
    let n = space.len();
    let xs = vars(n);
    let primed: Vec<String> = xs.iter().map(|x| format!("{x}p")).collect();
    let dom = |i: usize, v: &str| format!("dom{}({v})", i + 1);
    let label = tree.classify(e);
    let other = 1 - label;
    let mut p = AspProgram::default();

    for (i, f) in space.features().iter().enumerate() {
        p.facts.extend(f.domain.iter().map(|v| format!("{}.", dom(i, &constant(v)))));
    }
    let values: Vec<String> = space.names(e).iter().map(|v| constant(v)).collect();
    p.facts.push(format!("ent(e,{},o).", values.join(",")));

    // tree paths reaching the original label, leaf-side test first
    let mut paths: Vec<Vec<(usize, Vec<usize>)>> = Vec::new();
    collect(tree.root(), label, &mut Vec::new(), &mut paths);
    let cls = |l: u8| format!("cls({},{l})", xs.join(","));
    for path in paths.iter().flat_map(|p| expand(p)) {
        let mut body: Vec<String> =
            path.iter().map(|&(f, v)| format!("{} = {}", xs[f], constant(&space.features()[f].domain[v]))).collect();
        body.extend((0..n).filter(|i| !path.iter().any(|(f, _)| f == i)).map(|i| dom(i, &xs[i])));
        p.rules.push(format!("{} :- {}.", cls(label), body.join(", ")));
    }
    let all_doms: Vec<String> = (0..n).map(|i| dom(i, &xs[i])).collect();
    p.rules.push(format!("{} :- {}, not {}.", cls(other), all_doms.join(", "), cls(label)));

    p.rules.push(format!("{} :- {}.", ent(&xs, "tr"), ent(&xs, "o")));
    p.rules.push(format!("{} :- {}.", ent(&xs, "tr"), ent(&xs, "do")));

    let heads: Vec<String> = (0..n)
        .map(|i| {
            let mut a = xs.clone();
            a[i] = primed[i].clone();
            ent(&a, "do")
        })
        .collect();
    let mut body = vec![ent(&xs, "tr"), cls(label)];
    body.extend((0..n).map(|i| dom(i, &primed[i])));
    body.extend((0..n).map(|i| format!("{} != {}", xs[i], primed[i])));
    body.extend((0..n).map(|i| format!("chosen{}({},{})", i + 1, xs.join(","), primed[i])));
    p.rules.push(format!("{} :- {}.", heads.join(" v "), body.join(", ")));

    for i in 0..n {
        let k = i + 1;
        let args = xs.join(",");
        p.rules.push(format!(
            "chosen{k}({args},U) :- {}, {}, {}, U != {}, not diffchoice{k}({args},U).",
            ent(&xs, "tr"),
            cls(label),
            dom(i, "U"),
            xs[i]
        ));
        p.rules.push(format!("diffchoice{k}({args},U) :- chosen{k}({args},Up), U != Up, {}.", dom(i, "U")));
    }
    p.hard_constraints.push(format!(":- {}, {}.", ent(&xs, "do"), ent(&xs, "o")));

    p.rules.push(format!("{} :- {}, {}.", ent(&xs, "s"), ent(&xs, "do"), cls(other)));
    for (i, f) in space.features().iter().enumerate() {
        p.rules.push(format!(
            "expl(E,{},{}) :- {}, {}, {} != {}.",
            constant(&f.name),
            xs[i],
            ent(&xs, "o"),
            ent(&primed, "s"),
            xs[i],
            primed[i]
        ));
    }
    p.rules.push(format!("entAux(E) :- {}.", ent(&xs, "s")));
    p.hard_constraints.push(format!(":- {}, not entAux(E).", ent(&xs, "o")));
    p.rules.push("invResp(E,M) :- #count{I: expl(E,I,_)} = M, #int(M), E = e.".to_string());

    for forbidden in &opts.forbid {
        let mut free = xs.iter();
        let args: Vec<String> = (0..n)
            .map(|i| match forbidden.iter().find(|(f, _)| *f == i) {
                Some(&(f, v)) => constant(&space.features()[f].domain[v]),
                None => free.next().expect("fewer free positions than variables").clone(),
            })
            .collect();
        p.hard_constraints.push(format!(":- {}.", ent(&args, "tr")));
    }
    if opts.weak {
        for i in 0..n {
            p.weak_constraints.push(format!(":~ {}, {}, {} != {}.", ent(&xs, "o"), ent(&primed, "s"), xs[i], primed[i]));
        }
    }
    Ok(p)
}

fn collect(node: &Node, label: u8, path: &mut Vec<(usize, Vec<usize>)>, out: &mut Vec<Vec<(usize, Vec<usize>)>>) {
    match node {
        Node::Leaf(l) if *l == label => out.push(path.iter().rev().cloned().collect()),
        Node::Leaf(_) => {}
        Node::Test { feature, branches } => {
            for (vs, child) in branches {
                path.push((*feature, vs.clone()));
                collect(child, label, path, out);
                path.pop();
            }
        }
    }
}

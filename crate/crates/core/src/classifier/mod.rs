//! Binary classifiers over finite feature spaces and counterfactual scores
//! for their outcomes.
//!
//! Values are stored as indices into each feature's domain; names only show
//! up at the edges (files, reports, emitted programs).

mod distribution;
mod scores;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use distribution::Distribution;
pub use scores::{
    counter_score, counterfactual_versions, resp_score, shap_score, shap_scores, x_resp, CounterfactualVersion,
    Expectation, RespScore, MAX_SHAP_FEATURES,
};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ClassifierError {
    #[error("classifier-explain: unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("classifier-explain: `{value}` is not in the domain of feature `{feature}`")]
    UnknownValue { feature: String, value: String },
    #[error("classifier-explain: entity has {found} values but the feature space has {expected} features")]
    DomainMismatch { expected: usize, found: usize },
    #[error("classifier-explain: feature space: {0}")]
    BadSpace(String),
    #[error("classifier-explain: decision tree: {0}")]
    BadTree(String),
    #[error("classifier-explain: label table: {0}")]
    BadTable(String),
    #[error("classifier-explain: {kind} distribution needs a nonempty sample")]
    EmptySample { kind: &'static str },
    #[error("classifier-explain: conditioning event has probability zero under the empirical distribution")]
    ZeroProbability,
    #[error("classifier-explain: {count} features exceed the cap of {cap}")]
    TooManyFeatures { count: usize, cap: usize },
    #[error("classifier-explain: expectation ranges over {count} entities, above the cap of {cap}")]
    SpaceTooLarge { count: u128, cap: u128 },
    #[error("classifier-explain: {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Feature {
    pub name: String,
    pub domain: Vec<String>,
}

/// An ordered list of features, each with a finite nonempty domain.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct FeatureSpace {
    features: Vec<Feature>,
}

impl FeatureSpace {
    pub fn new(features: Vec<Feature>) -> Result<Self, ClassifierError> {
        let mut names = BTreeSet::new();
        for f in &features {
            if !names.insert(f.name.as_str()) {
                return Err(ClassifierError::BadSpace(format!("duplicate feature `{}`", f.name)));
            }
            if f.domain.is_empty() {
                return Err(ClassifierError::BadSpace(format!("feature `{}` has an empty domain", f.name)));
            }
            if f.domain.iter().collect::<BTreeSet<_>>().len() != f.domain.len() {
                return Err(ClassifierError::BadSpace(format!("feature `{}` repeats a domain value", f.name)));
            }
        }
        Ok(FeatureSpace { features })
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn feature_index(&self, name: &str) -> Result<usize, ClassifierError> {
        self.features
            .iter()
            .position(|f| f.name == name)
            .ok_or_else(|| ClassifierError::UnknownFeature(name.to_string()))
    }

    pub fn value_index(&self, feature: usize, value: &str) -> Result<usize, ClassifierError> {
        let f = &self.features[feature];
        f.domain.iter().position(|v| v == value).ok_or_else(|| ClassifierError::UnknownValue {
            feature: f.name.clone(),
            value: value.to_string(),
        })
    }

    /// Builds an entity from value names given in feature order.
    pub fn entity<S: AsRef<str>>(&self, values: &[S]) -> Result<Entity, ClassifierError> {
        if values.len() != self.len() {
            return Err(ClassifierError::DomainMismatch { expected: self.len(), found: values.len() });
        }
        let values = values.iter().enumerate().map(|(i, v)| self.value_index(i, v.as_ref())).collect::<Result<_, _>>()?;
        Ok(Entity { values })
    }

    /// Parses `sunny,normal,weak`.
    pub fn parse_entity(&self, text: &str) -> Result<Entity, ClassifierError> {
        let parts: Vec<&str> = text.split(',').map(str::trim).collect();
        self.entity(&parts)
    }

    pub fn check(&self, e: &Entity) -> Result<(), ClassifierError> {
        if e.values.len() != self.len() {
            return Err(ClassifierError::DomainMismatch { expected: self.len(), found: e.values.len() });
        }
        for (i, &v) in e.values.iter().enumerate() {
            if v >= self.features[i].domain.len() {
                return Err(ClassifierError::UnknownValue {
                    feature: self.features[i].name.clone(),
                    value: format!("#{v}"),
                });
            }
        }
        Ok(())
    }

    /// Value names of `e`, in feature order.
    pub fn names<'a>(&'a self, e: &Entity) -> Vec<&'a str> {
        e.values.iter().enumerate().map(|(i, &v)| self.features[i].domain[v].as_str()).collect()
    }

    pub fn domain_size(&self, feature: usize) -> usize {
        self.features[feature].domain.len()
    }

    /// Number of entities in the full product space, saturating.
    pub fn size(&self) -> u128 {
        self.features.iter().fold(1u128, |acc, f| acc.saturating_mul(f.domain.len() as u128))
    }

    /// Every entity of the space in odometer order (last feature fastest).
    pub fn all_entities(&self) -> impl Iterator<Item = Entity> + '_ {
        let mut next = Some(vec![0usize; self.len()]);
        std::iter::from_fn(move || {
            let cur = next.take()?;
            let mut succ = cur.clone();
            let mut i = succ.len();
            loop {
                if i == 0 {
                    break;
                }
                i -= 1;
                succ[i] += 1;
                if succ[i] < self.features[i].domain.len() {
                    next = Some(succ);
                    break;
                }
                succ[i] = 0;
            }
            Some(Entity { values: cur })
        })
    }
}

/// One value per feature, as domain indices.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Entity {
    pub values: Vec<usize>,
}

impl Entity {
    /// Same entity with feature `i` set to value `v`.
    pub fn with(&self, i: usize, v: usize) -> Entity {
        let mut out = self.clone();
        out.values[i] = v;
        out
    }

    /// Feature positions where the two entities differ.
    pub fn diff(&self, other: &Entity) -> Vec<usize> {
        (0..self.values.len()).filter(|&i| self.values[i] != other.values[i]).collect()
    }
}

/// A decision-tree node as stored on disk: either a leaf label or a test on
/// one feature with a child per value. A branch key may list several values
/// separated by `|`.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum RawNode {
    Leaf { leaf: String },
    Test { feature: String, branches: BTreeMap<String, RawNode> },
}

#[derive(Deserialize)]
struct RawTree {
    positive: String,
    features: Vec<Feature>,
    root: RawNode,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Node {
    Leaf(u8),
    /// Branches in order of their smallest domain value.
    Test { feature: usize, branches: Vec<(Vec<usize>, Node)> },
}

/// A total decision tree with 0/1 leaves.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecisionTree {
    space: FeatureSpace,
    root: Node,
}

impl DecisionTree {
    pub fn new(space: FeatureSpace, root: Node) -> Result<Self, ClassifierError> {
        check_node(&space, &root, &mut Vec::new())?;
        Ok(DecisionTree { space, root })
    }

    /// Parses the JSON tree format:
    /// `{"positive": "yes", "features": [{"name", "domain"}], "root": node}`
    /// where a node is `{"leaf": label}` or `{"feature": name, "branches":
    /// {value: node}}`. Leaves equal to `positive` mean 1.
    pub fn from_json(text: &str) -> Result<Self, ClassifierError> {
        let raw: RawTree = serde_json::from_str(text).map_err(|e| ClassifierError::BadTree(e.to_string()))?;
        let space = FeatureSpace::new(raw.features)?;
        let root = resolve(&space, &raw.root, &raw.positive)?;
        DecisionTree::new(space, root)
    }

    pub fn load(path: &Path) -> Result<Self, ClassifierError> {
        DecisionTree::from_json(&read(path)?)
    }

    pub fn space(&self) -> &FeatureSpace {
        &self.space
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn classify(&self, e: &Entity) -> u8 {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf(l) => return *l,
                Node::Test { feature, branches } => {
                    let v = e.values[*feature];
                    node = &branches.iter().find(|(vs, _)| vs.contains(&v)).expect("tree is total").1;
                }
            }
        }
    }

    /// Root-to-leaf paths ending in label 1, each as the list of tests
    /// (feature, allowed values) from the leaf upwards.
    pub fn positive_paths(&self) -> Vec<Vec<(usize, Vec<usize>)>> {
        let mut out = Vec::new();
        collect_paths(&self.root, &mut Vec::new(), &mut out);
        out
    }
}

fn collect_paths(node: &Node, path: &mut Vec<(usize, Vec<usize>)>, out: &mut Vec<Vec<(usize, Vec<usize>)>>) {
    match node {
        Node::Leaf(1) => out.push(path.iter().rev().cloned().collect()),
        Node::Leaf(_) => {}
        Node::Test { feature, branches } => {
            for (vs, child) in branches {
                path.push((*feature, vs.clone()));
                collect_paths(child, path, out);
                path.pop();
            }
        }
    }
}

fn resolve(space: &FeatureSpace, raw: &RawNode, positive: &str) -> Result<Node, ClassifierError> {
    match raw {
        RawNode::Leaf { leaf } => Ok(Node::Leaf(u8::from(leaf == positive))),
        RawNode::Test { feature, branches } => {
            let f = space.feature_index(feature)?;
            let mut out = Vec::new();
            for (key, child) in branches {
                let mut vs =
                    key.split('|').map(|v| space.value_index(f, v.trim())).collect::<Result<Vec<_>, _>>()?;
                vs.sort_unstable();
                out.push((vs, resolve(space, child, positive)?));
            }
            out.sort_by_key(|(vs, _)| vs[0]);
            Ok(Node::Test { feature: f, branches: out })
        }
    }
}

fn check_node(space: &FeatureSpace, node: &Node, tested: &mut Vec<usize>) -> Result<(), ClassifierError> {
    match node {
        Node::Leaf(l) if *l > 1 => Err(ClassifierError::BadTree(format!("leaf label {l} is not 0 or 1"))),
        Node::Leaf(_) => Ok(()),
        Node::Test { feature, branches } => {
            let Some(f) = space.features.get(*feature) else {
                return Err(ClassifierError::BadTree(format!("feature index {feature} out of range")));
            };
            if tested.contains(feature) {
                return Err(ClassifierError::BadTree(format!("feature `{}` tested twice on one path", f.name)));
            }
            let mut seen = vec![0usize; f.domain.len()];
            for (vs, _) in branches {
                for &v in vs {
                    if v >= seen.len() {
                        return Err(ClassifierError::BadTree(format!("value #{v} out of range for `{}`", f.name)));
                    }
                    seen[v] += 1;
                }
            }
            if let Some(v) = seen.iter().position(|&c| c != 1) {
                let what = if seen[v] == 0 { "no branch" } else { "several branches" };
                return Err(ClassifierError::BadTree(format!(
                    "value `{}` of `{}` has {what}",
                    f.domain[v], f.name
                )));
            }
            tested.push(*feature);
            for (_, child) in branches {
                check_node(space, child, tested)?;
            }
            tested.pop();
            Ok(())
        }
    }
}

/// A black-box classifier given as an exhaustive label table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelTable {
    space: FeatureSpace,
    labels: BTreeMap<Entity, u8>,
}

impl LabelTable {
    /// CSV with one column per feature followed by a `label` column of 0/1.
    /// Domains are the distinct values of each column in order of first
    /// appearance; every entity of the resulting space must appear once.
    pub fn from_csv(text: &str) -> Result<Self, ClassifierError> {
        let bad = |m: String| ClassifierError::BadTable(m);
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let header: Vec<String> = rdr.headers().map_err(|e| bad(e.to_string()))?.iter().map(String::from).collect();
        if header.last().map(String::as_str) != Some("label") || header.len() < 2 {
            return Err(bad("the last column must be `label` after at least one feature".into()));
        }
        let n = header.len() - 1;
        let mut rows = Vec::new();
        let mut domains: Vec<Vec<String>> = vec![Vec::new(); n];
        for rec in rdr.records() {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            let line = rec.position().map_or(0, |p| p.line());
            let label = match &rec[n] {
                "0" => 0u8,
                "1" => 1,
                other => return Err(bad(format!("line {line}: label `{other}` is not 0 or 1"))),
            };
            for (i, v) in rec.iter().take(n).enumerate() {
                if !domains[i].iter().any(|d| d == v) {
                    domains[i].push(v.to_string());
                }
            }
            rows.push((rec.iter().take(n).map(String::from).collect::<Vec<_>>(), label, line));
        }
        let space = FeatureSpace::new(
            header[..n].iter().cloned().zip(domains).map(|(name, domain)| Feature { name, domain }).collect(),
        )?;
        let mut labels = BTreeMap::new();
        for (values, label, line) in rows {
            let e = space.entity(&values)?;
            if labels.insert(e, label).is_some() {
                return Err(bad(format!("line {line}: entity {} listed twice", values.join(","))));
            }
        }
        if labels.len() as u128 != space.size() {
            return Err(bad(format!("{} rows but the space has {} entities", labels.len(), space.size())));
        }
        Ok(LabelTable { space, labels })
    }

    pub fn load(path: &Path) -> Result<Self, ClassifierError> {
        LabelTable::from_csv(&read(path)?)
    }

    /// Tabulates any classifier over its whole space.
    pub fn tabulate(c: &Classifier) -> Self {
        let space = c.space().clone();
        let labels = space.all_entities().map(|e| {
            let l = c.classify_unchecked(&e);
            (e, l)
        });
        LabelTable { labels: labels.collect(), space }
    }

    pub fn space(&self) -> &FeatureSpace {
        &self.space
    }
}

/// A decision tree we can open, or a label table we can only query.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Classifier {
    Tree(DecisionTree),
    Oracle(LabelTable),
}

impl Classifier {
    pub fn space(&self) -> &FeatureSpace {
        match self {
            Classifier::Tree(t) => t.space(),
            Classifier::Oracle(o) => o.space(),
        }
    }

    pub fn classify(&self, e: &Entity) -> Result<u8, ClassifierError> {
        self.space().check(e)?;
        Ok(self.classify_unchecked(e))
    }

    pub(crate) fn classify_unchecked(&self, e: &Entity) -> u8 {
        match self {
            Classifier::Tree(t) => t.classify(e),
            Classifier::Oracle(o) => o.labels[e],
        }
    }
}

impl From<DecisionTree> for Classifier {
    fn from(t: DecisionTree) -> Self {
        Classifier::Tree(t)
    }
}

impl From<LabelTable> for Classifier {
    fn from(t: LabelTable) -> Self {
        Classifier::Oracle(t)
    }
}

/// Reads a CSV sample of entities with a header naming the features (any
/// order; extra columns are ignored).
pub fn parse_sample(space: &FeatureSpace, text: &str) -> Result<Vec<Entity>, ClassifierError> {
    let bad = |m: String| ClassifierError::BadTable(m);
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header: Vec<String> = rdr.headers().map_err(|e| bad(e.to_string()))?.iter().map(String::from).collect();
    let cols = space
        .features()
        .iter()
        .map(|f| header.iter().position(|h| *h == f.name).ok_or_else(|| bad(format!("sample lacks column `{}`", f.name))))
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let values: Vec<&str> = cols.iter().map(|&c| rec.get(c).unwrap_or("")).collect();
        out.push(space.entity(&values)?);
    }
    Ok(out)
}

pub fn load_sample(space: &FeatureSpace, path: &Path) -> Result<Vec<Entity>, ClassifierError> {
    parse_sample(space, &read(path)?)
}

fn read(path: &Path) -> Result<String, ClassifierError> {
    std::fs::read_to_string(path)
        .map_err(|e| ClassifierError::Io { path: path.display().to_string(), message: e.to_string() })
}

impl fmt::Display for FeatureSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.features.iter().map(|x| format!("{}{{{}}}", x.name, x.domain.join(","))).collect();
        f.write_str(&parts.join(" "))
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub const TENNIS: &str = r#"{
      "positive": "yes",
      "features": [
        {"name": "outlook", "domain": ["sunny", "overcast", "rain"]},
        {"name": "humidity", "domain": ["high", "normal"]},
        {"name": "wind", "domain": ["strong", "weak"]}
      ],
      "root": {"feature": "outlook", "branches": {
        "sunny": {"feature": "humidity", "branches": {"high": {"leaf": "no"}, "normal": {"leaf": "yes"}}},
        "overcast": {"leaf": "yes"},
        "rain": {"feature": "wind", "branches": {"strong": {"leaf": "no"}, "weak": {"leaf": "yes"}}}
      }}
    }"#;

    pub fn tennis() -> DecisionTree {
        DecisionTree::from_json(TENNIS).unwrap()
    }

    #[test]
    fn tennis_labels() {
        let t = tennis();
        let s = t.space().clone();
        let l = |x: &str| t.classify(&s.parse_entity(x).unwrap());
        assert_eq!(l("sunny,normal,weak"), 1);
        assert_eq!(l("sunny,high,weak"), 0);
        assert_eq!(l("rain,normal,strong"), 0);
        assert_eq!(l("overcast,high,strong"), 1);
        let positives = s.all_entities().filter(|e| t.classify(e) == 1).count();
        assert_eq!(positives, 8);
    }

    #[test]
    fn branch_order_and_paths() {
        let t = tennis();
        let Node::Test { branches, .. } = t.root() else { panic!() };
        assert_eq!(branches.iter().map(|(v, _)| v[0]).collect::<Vec<_>>(), vec![0, 1, 2]);
        // leaf-up order: (humidity=normal, outlook=sunny), (outlook=overcast), (wind=weak, outlook=rain)
        assert_eq!(
            t.positive_paths(),
            vec![vec![(1, vec![1]), (0, vec![0])], vec![(0, vec![1])], vec![(2, vec![1]), (0, vec![2])]]
        );
    }

    #[test]
    fn value_sets_and_totality() {
        let ok = r#"{"positive":"1","features":[{"name":"a","domain":["x","y","z"]}],
            "root":{"feature":"a","branches":{"x|z":{"leaf":"1"},"y":{"leaf":"0"}}}}"#;
        let t = DecisionTree::from_json(ok).unwrap();
        let s = t.space().clone();
        assert_eq!(t.classify(&s.parse_entity("z").unwrap()), 1);
        let gap = ok.replace("x|z", "x");
        assert!(matches!(DecisionTree::from_json(&gap), Err(ClassifierError::BadTree(_))));
        let overlap = ok.replace("\"y\":{", "\"y|x\":{");
        assert!(matches!(DecisionTree::from_json(&overlap), Err(ClassifierError::BadTree(_))));
        let unknown = ok.replace("x|z", "x|q");
        assert!(matches!(DecisionTree::from_json(&unknown), Err(ClassifierError::UnknownValue { .. })));
    }

    #[test]
    fn entity_errors() {
        let s = tennis().space().clone();
        assert_eq!(s.parse_entity("sunny,normal"), Err(ClassifierError::DomainMismatch { expected: 3, found: 2 }));
        assert!(matches!(s.parse_entity("sunny,wet,weak"), Err(ClassifierError::UnknownValue { .. })));
        let c = Classifier::from(tennis());
        assert!(c.classify(&Entity { values: vec![0, 5, 0] }).is_err());
    }

    #[test]
    fn label_table_round_trip() {
        let c = Classifier::from(tennis());
        let table = LabelTable::tabulate(&c);
        let mut csv = String::from("outlook,humidity,wind,label\n");
        for e in c.space().all_entities() {
            csv.push_str(&format!("{},{}\n", c.space().names(&e).join(","), c.classify(&e).unwrap()));
        }
        let parsed = LabelTable::from_csv(&csv).unwrap();
        assert_eq!(parsed, table);
        let short: String = csv.lines().enumerate().filter(|(i, _)| *i != 2).map(|(_, l)| format!("{l}\n")).collect();
        assert!(matches!(LabelTable::from_csv(&short), Err(ClassifierError::BadTable(_))));
    }

    #[test]
    fn samples_by_header() {
        let s = tennis().space().clone();
        let sample = parse_sample(&s, "wind,outlook,humidity\nweak,rain,high\n").unwrap();
        assert_eq!(s.names(&sample[0]), vec!["rain", "high", "weak"]);
        assert!(parse_sample(&s, "wind,outlook\nweak,rain\n").is_err());
    }
}

use rayon::prelude::*;

use crate::num::{inverse_succ, shapley_weight, Scalar};
use crate::repair::hitting::for_each_k_subset;

use super::{Classifier, ClassifierError, Distribution, Entity};

/// Hard cap on features for Shap, which sums over all feature subsets.
pub const MAX_SHAP_FEATURES: usize = 16;

/// An entity reached from the original by changing `changed` and carrying
/// the other label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CounterfactualVersion {
    pub entity: Entity,
    /// Feature positions, ascending.
    pub changed: Vec<usize>,
}

impl CounterfactualVersion {
    pub fn distance(&self) -> usize {
        self.changed.len()
    }
}

/// Which values of the scored feature the local Resp expectation ranges over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Expectation {
    /// The whole domain, original value included; Counter is then the
    /// empty-contingency case of Resp.
    #[default]
    Full,
    /// Only values different from the original one.
    ExcludeOriginal,
}

/// A generalized responsibility together with the contingency that attains
/// it: `(feature, new value)` pairs, empty when the score is 0 or no
/// contingency was needed.
#[derive(Clone, Debug, PartialEq)]
pub struct RespScore<S> {
    pub score: S,
    pub contingency: Vec<(usize, usize)>,
}

fn positions(mask: u32, pool: &[usize]) -> Vec<usize> {
    (0..pool.len()).filter(|i| mask >> i & 1 == 1).map(|i| pool[i]).collect()
}

/// Calls `visit` on every entity obtained from `e` by giving each feature in
/// `at` a value different from its current one, in odometer order. Stops
/// early when `visit` returns true, and reports whether it did.
fn for_each_change(c: &Classifier, e: &Entity, at: &[usize], mut visit: impl FnMut(&Entity) -> bool) -> bool {
    let space = c.space();
    if at.iter().any(|&i| space.domain_size(i) < 2) {
        return false;
    }
    // digit k walks the alternatives 0..size-1 of feature at[k], skipping e's value
    let alt = |i: usize, k: usize| if k >= e.values[i] { k + 1 } else { k };
    let mut digits = vec![0usize; at.len()];
    loop {
        let mut cur = e.clone();
        for (k, &i) in at.iter().enumerate() {
            cur.values[i] = alt(i, digits[k]);
        }
        if visit(&cur) {
            return true;
        }
        let mut k = at.len();
        loop {
            if k == 0 {
                return false;
            }
            k -= 1;
            digits[k] += 1;
            if digits[k] < space.domain_size(at[k]) - 1 {
                break;
            }
            digits[k] = 0;
        }
    }
}

/// Label-flipping entities within Hamming distance `max_distance`, by
/// distance, then changed positions, then values.
pub fn counterfactual_versions(
    c: &Classifier,
    e: &Entity,
    max_distance: usize,
) -> Result<Vec<CounterfactualVersion>, ClassifierError> {
    let label = c.classify(e)?;
    let n = c.space().len();
    let all: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    for d in 1..=max_distance.min(n) {
        for_each_k_subset(n, d, |mask| {
            let at = positions(mask, &all);
            for_each_change(c, e, &at, |x| {
                if c.classify_unchecked(x) != label {
                    out.push(CounterfactualVersion { entity: x.clone(), changed: at.clone() });
                }
                false
            });
        });
    }
    Ok(out)
}

/// `1/(1+|Y|)` for a smallest contingency `Y` that keeps the label while
/// some further change of `feature` flips it; 0 when there is none.
pub fn x_resp<S: Scalar>(c: &Classifier, e: &Entity, feature: usize) -> Result<S, ClassifierError> {
    let label = c.classify(e)?;
    let space = c.space();
    if feature >= space.len() {
        return Err(ClassifierError::UnknownFeature(format!("#{feature}")));
    }
    let others: Vec<usize> = (0..space.len()).filter(|&i| i != feature).collect();
    for k in 0..=others.len() {
        let mut found = false;
        for_each_k_subset(others.len(), k, |mask| {
            if found {
                return;
            }
            let at = positions(mask, &others);
            found = for_each_change(c, e, &at, |y| {
                c.classify_unchecked(y) == label
                    && for_each_change(c, y, &[feature], |z| c.classify_unchecked(z) != label)
            });
        });
        if found {
            return Ok(inverse_succ(k));
        }
    }
    Ok(S::zero())
}

fn label_value<S: Scalar>(l: u8) -> S {
    if l == 1 {
        S::one()
    } else {
        S::zero()
    }
}

/// `L(e) - E[L(e') | e' agrees with e off feature]`.
pub fn counter_score<S: Scalar>(
    c: &Classifier,
    e: &Entity,
    feature: usize,
    dist: &Distribution<S>,
) -> Result<S, ClassifierError> {
    let label = c.classify(e)?;
    let n = c.space().len();
    if feature >= n {
        return Err(ClassifierError::UnknownFeature(format!("#{feature}")));
    }
    let fixed: Vec<bool> = (0..n).map(|i| i != feature).collect();
    Ok(label_value::<S>(label) - dist.expectation(c, e, &fixed, None)?)
}

/// Generalized responsibility: over contingencies `(Gamma, w)` of minimum
/// size that keep the label and give a positive local numerator
/// `L(e') - E[L(e'') | e'' agrees with e' off feature]`, the largest
/// `numerator / (1 + |Gamma|)`. Contingencies hold at most
/// `max_contingency` features.
pub fn resp_score<S: Scalar>(
    c: &Classifier,
    e: &Entity,
    feature: usize,
    dist: &Distribution<S>,
    max_contingency: usize,
    mode: Expectation,
) -> Result<RespScore<S>, ClassifierError> {
    let label = c.classify(e)?;
    let space = c.space();
    let n = space.len();
    if feature >= n {
        return Err(ClassifierError::UnknownFeature(format!("#{feature}")));
    }
    let none = RespScore { score: S::zero(), contingency: Vec::new() };
    if space.domain_size(feature) < 2 {
        return Ok(none);
    }
    let fixed: Vec<bool> = (0..n).map(|i| i != feature).collect();
    let exclude = (mode == Expectation::ExcludeOriginal).then_some(feature);
    let others: Vec<usize> = (0..n).filter(|&i| i != feature).collect();
    for k in 0..=max_contingency.min(others.len()) {
        let mut best: Option<RespScore<S>> = None;
        let mut failure = None;
        for_each_k_subset(others.len(), k, |mask| {
            if failure.is_some() {
                return;
            }
            let at = positions(mask, &others);
            for_each_change(c, e, &at, |y| {
                if c.classify_unchecked(y) != label {
                    return false;
                }
                let expected = match dist.expectation(c, y, &fixed, exclude) {
                    Ok(x) => x,
                    Err(ClassifierError::ZeroProbability) => return false,
                    Err(err) => {
                        failure = Some(err);
                        return true;
                    }
                };
                let numerator = label_value::<S>(label) - expected;
                if numerator > S::zero() {
                    let local = numerator * inverse_succ::<S>(k);
                    if best.as_ref().is_none_or(|b| local > b.score) {
                        let contingency = at.iter().map(|&i| (i, y.values[i])).collect();
                        best = Some(RespScore { score: local, contingency });
                    }
                }
                false
            });
        });
        if let Some(err) = failure {
            return Err(err);
        }
        if let Some(b) = best {
            return Ok(b);
        }
    }
    Ok(none)
}

/// Shap scores of every feature value of `e`: Shapley values of the game
/// `S -> E[L(e') | e'_S = e_S]`.
pub fn shap_scores<S: Scalar>(c: &Classifier, e: &Entity, dist: &Distribution<S>) -> Result<Vec<S>, ClassifierError> {
    c.classify(e)?;
    let n = c.space().len();
    if n > MAX_SHAP_FEATURES {
        return Err(ClassifierError::TooManyFeatures { count: n, cap: MAX_SHAP_FEATURES });
    }
    let game: Vec<S> = (0u32..1 << n)
        .into_par_iter()
        .map(|mask| {
            let fixed: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
            dist.expectation(c, e, &fixed, None)
        })
        .collect::<Result<_, _>>()?;
    Ok((0..n)
        .map(|f| {
            let me = 1u32 << f;
            (0u32..1 << n)
                .filter(|s| s & me == 0)
                .map(|s| shapley_weight::<S>(n, s.count_ones() as usize) * (game[(s | me) as usize].clone() - game[s as usize].clone()))
                .sum()
        })
        .collect())
}

pub fn shap_score<S: Scalar>(
    c: &Classifier,
    e: &Entity,
    feature: usize,
    dist: &Distribution<S>,
) -> Result<S, ClassifierError> {
    if feature >= c.space().len() {
        return Err(ClassifierError::UnknownFeature(format!("#{feature}")));
    }
    Ok(shap_scores(c, e, dist)?.swap_remove(feature))
}

use crate::num::Scalar;

use super::{Classifier, ClassifierError, Entity, FeatureSpace};

/// Largest number of entities one expectation may enumerate.
pub const MAX_ENUMERATION: u128 = 1 << 20;

/// A probability distribution over the entity population.
#[derive(Clone, Debug, PartialEq)]
pub enum Distribution<S> {
    /// Independent features, each uniform over its domain.
    Uniform,
    /// Independent features with marginals estimated from a sample.
    Product { marginals: Vec<Vec<S>> },
    /// Frequencies of the sample itself.
    Empirical { sample: Vec<Entity> },
}

impl<S: Scalar> Distribution<S> {
    pub fn product(space: &FeatureSpace, sample: &[Entity]) -> Result<Self, ClassifierError> {
        if sample.is_empty() {
            return Err(ClassifierError::EmptySample { kind: "PRODUCT" });
        }
        for e in sample {
            space.check(e)?;
        }
        let n = sample.len() as u128;
        let marginals = (0..space.len())
            .map(|i| {
                (0..space.domain_size(i))
                    .map(|v| S::from_ratio(sample.iter().filter(|e| e.values[i] == v).count() as u128, n))
                    .collect()
            })
            .collect();
        Ok(Distribution::Product { marginals })
    }

    pub fn empirical(space: &FeatureSpace, sample: Vec<Entity>) -> Result<Self, ClassifierError> {
        if sample.is_empty() {
            return Err(ClassifierError::EmptySample { kind: "EMPIRICAL" });
        }
        for e in &sample {
            space.check(e)?;
        }
        Ok(Distribution::Empirical { sample })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Distribution::Uniform => "UNIFORM",
            Distribution::Product { .. } => "PRODUCT",
            Distribution::Empirical { .. } => "EMPIRICAL",
        }
    }

    fn weight(&self, space: &FeatureSpace, i: usize, v: usize) -> S {
        match self {
            Distribution::Product { marginals } => marginals[i][v].clone(),
            _ => S::from_ratio(1, space.domain_size(i) as u128),
        }
    }

    /// `E[L(e') | e'_i = e_i for every fixed i]`, additionally conditioned on
    /// `e'_x != e_x` when `exclude` is `Some(x)`.
    pub fn expectation(
        &self,
        c: &Classifier,
        e: &Entity,
        fixed: &[bool],
        exclude: Option<usize>,
    ) -> Result<S, ClassifierError> {
        let space = c.space();
        if let Distribution::Empirical { sample } = self {
            let matching: Vec<&Entity> = sample
                .iter()
                .filter(|x| (0..space.len()).all(|i| !fixed[i] || x.values[i] == e.values[i]))
                .filter(|x| exclude.is_none_or(|f| x.values[f] != e.values[f]))
                .collect();
            if matching.is_empty() {
                return Err(ClassifierError::ZeroProbability);
            }
            let ones = matching.iter().filter(|x| c.classify_unchecked(x) == 1).count();
            return Ok(S::from_ratio(ones as u128, matching.len() as u128));
        }
        let free: Vec<usize> = (0..space.len()).filter(|&i| !fixed[i]).collect();
        let count = free.iter().fold(1u128, |a, &i| a.saturating_mul(space.domain_size(i) as u128));
        if count > MAX_ENUMERATION {
            return Err(ClassifierError::SpaceTooLarge { count, cap: MAX_ENUMERATION });
        }
        let mut cur = e.clone();
        for &i in &free {
            cur.values[i] = 0;
        }
        let mut mass = S::zero();
        let mut hit = S::zero();
        loop {
            if exclude.is_none_or(|f| cur.values[f] != e.values[f]) {
                let w = free.iter().fold(S::one(), |acc, &i| acc * self.weight(space, i, cur.values[i]));
                if c.classify_unchecked(&cur) == 1 {
                    hit = hit + w.clone();
                }
                mass = mass + w;
            }
            // odometer over the free features
            let mut k = free.len();
            loop {
                if k == 0 {
                    return if mass == S::zero() { Err(ClassifierError::ZeroProbability) } else { Ok(hit / mass) };
                }
                k -= 1;
                let i = free[k];
                cur.values[i] += 1;
                if cur.values[i] < space.domain_size(i) {
                    break;
                }
                cur.values[i] = 0;
            }
        }
    }
}

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::num::{shapley_weight, Scalar};
use crate::query::Ucq;
use crate::relational::{witnesses, Database, TupleId};

use super::ScoreError;

/// Largest player count for exact subset enumeration.
pub const MAX_PLAYERS: usize = 22;

/// Below this many players the subset sweep stays on one thread.
const PARALLEL_FROM: usize = 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Players {
    /// Every tuple of the instance; tuples outside all witnesses are dummies.
    #[default]
    All,
    /// Only tuples occurring in some witness.
    Support,
}

/// A Boolean query as a cooperative game over tuples: a coalition wins when
/// it contains some witness.
#[derive(Clone, Debug)]
pub struct QueryGame {
    players: Vec<TupleId>,
    /// Witnesses as sorted player indices.
    witnesses: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sampled<S> {
    pub estimate: S,
    pub samples: u64,
}

impl QueryGame {
    pub fn new(db: &Database, q: &Ucq, players: Players) -> Result<Self, ScoreError> {
        if !q.is_boolean() {
            return Err(ScoreError::NotBoolean(q.name().to_string()));
        }
        let ws: Vec<BTreeSet<TupleId>> = witnesses(db, q)?.into_iter().map(|w| w.tids).collect();
        let players: Vec<TupleId> = match players {
            Players::All => db.tids().collect(),
            Players::Support => ws.iter().flatten().copied().collect::<BTreeSet<_>>().into_iter().collect(),
        };
        let index = |t: &TupleId| players.binary_search(t).expect("witness tuples are players");
        let witnesses = ws.iter().map(|w| w.iter().map(index).collect()).collect();
        Ok(QueryGame { players, witnesses })
    }

    pub fn players(&self) -> &[TupleId] {
        &self.players
    }

    /// Whether the coalition given by a player bitmask wins.
    pub fn value(&self, coalition: u32) -> bool {
        self.masks().iter().any(|&w| w & !coalition == 0)
    }

    fn masks(&self) -> Vec<u32> {
        self.witnesses.iter().map(|w| w.iter().fold(0u32, |m, &i| m | 1 << i)).collect()
    }

    fn player_index(&self, db: &Database, tid: TupleId) -> Result<Option<usize>, ScoreError> {
        if !db.contains(tid) {
            return Err(ScoreError::UnknownTid(tid));
        }
        Ok(self.players.binary_search(&tid).ok())
    }

    /// Per coalition size `k`, how many coalitions of the other players are
    /// losing but win once `i` joins.
    fn pivotal_counts(&self, i: usize) -> Result<Vec<u64>, ScoreError> {
        let n = self.players.len();
        if n > MAX_PLAYERS {
            return Err(ScoreError::TooManyPlayers { count: n, cap: MAX_PLAYERS });
        }
        let masks = self.masks();
        let wins = |c: u32| masks.iter().any(|&w| w & !c == 0);
        let me = 1u32 << i;
        // relevant witnesses only: those containing i can make it pivotal
        let count_range = |lo: u32, hi: u32| {
            let mut counts = vec![0u64; n];
            for rest in lo..hi {
                // spread the n-1 bits of `rest` around position i
                let low = rest & (me - 1);
                let high = (rest >> i) << (i + 1);
                let c = low | high;
                if !wins(c) && wins(c | me) {
                    counts[rest.count_ones() as usize] += 1;
                }
            }
            counts
        };
        let total: u32 = 1 << (n - 1);
        if n < PARALLEL_FROM {
            return Ok(count_range(0, total));
        }
        let chunk = 1u32 << 10;
        let starts: Vec<u32> = (0..total).step_by(chunk as usize).collect();
        Ok(starts
            .par_iter()
            .map(|&lo| count_range(lo, (lo + chunk).min(total)))
            .reduce(|| vec![0u64; n], |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            }))
    }

    /// Exact Shapley value of `tid`; 0 for a tuple that is not a player.
    pub fn shapley<S: Scalar>(&self, db: &Database, tid: TupleId) -> Result<S, ScoreError> {
        let Some(i) = self.player_index(db, tid)? else {
            return Ok(S::zero());
        };
        let n = self.players.len();
        let counts = self.pivotal_counts(i)?;
        Ok(counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(k, &c)| S::from_count(c as u128) * shapley_weight::<S>(n, k))
            .sum())
    }

    /// Exact Banzhaf index of `tid`; 0 for a tuple that is not a player.
    pub fn banzhaf<S: Scalar>(&self, db: &Database, tid: TupleId) -> Result<S, ScoreError> {
        let Some(i) = self.player_index(db, tid)? else {
            return Ok(S::zero());
        };
        let n = self.players.len();
        let pivotal: u64 = self.pivotal_counts(i)?.iter().sum();
        Ok(S::from_ratio(pivotal as u128, 1u128 << (n - 1)))
    }

    /// Monte-Carlo Shapley: the fraction of `m` random player orders in which
    /// `tid` is pivotal. Sample `j` draws its order from a ChaCha8 stream `j`
    /// keyed by `seed`, so the result does not depend on thread count.
    pub fn shapley_sampled<S: Scalar>(
        &self,
        db: &Database,
        tid: TupleId,
        samples: u64,
        seed: u64,
    ) -> Result<Sampled<S>, ScoreError> {
        let Some(i) = self.player_index(db, tid)? else {
            return Ok(Sampled { estimate: S::zero(), samples });
        };
        if samples == 0 {
            return Err(ScoreError::BadAccuracy("sample count must be positive".into()));
        }
        let mine: Vec<&Vec<usize>> = self.witnesses.iter().filter(|w| w.contains(&i)).collect();
        if mine.is_empty() {
            return Ok(Sampled { estimate: S::zero(), samples });
        }
        let n = self.players.len();
        let hits: u64 = (0..samples)
            .into_par_iter()
            .map(|j| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(j);
                let mut order: Vec<usize> = (0..n).collect();
                order.shuffle(&mut rng);
                let mut pos = vec![0usize; n];
                for (p, &player) in order.iter().enumerate() {
                    pos[player] = p;
                }
                let before = |w: &Vec<usize>| w.iter().all(|&x| x == i || pos[x] < pos[i]);
                let already = self.witnesses.iter().any(|w| w.iter().all(|&x| pos[x] < pos[i]));
                u64::from(!already && mine.iter().any(|w| before(w)))
            })
            .sum();
        Ok(Sampled { estimate: S::from_ratio(hits as u128, samples as u128), samples })
    }
}

/// Hoeffding sample size `ceil(ln(2/delta) / (2 eps^2))` for an additive
/// `eps` error with confidence `1 - delta`.
pub fn hoeffding_samples(eps: f64, delta: f64) -> Result<u64, ScoreError> {
    if !(eps > 0.0 && eps < 1.0 && delta > 0.0 && delta < 1.0) {
        return Err(ScoreError::BadAccuracy(format!("eps and delta must lie in (0, 1), got {eps} and {delta}")));
    }
    Ok(((2.0 / delta).ln() / (2.0 * eps * eps)).ceil() as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_size() {
        assert_eq!(hoeffding_samples(0.05, 0.05).unwrap(), 738);
        assert!(hoeffding_samples(0.0, 0.5).is_err());
        assert!(hoeffding_samples(0.1, 1.0).is_err());
    }
}

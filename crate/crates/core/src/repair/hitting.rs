//! Breadth-first enumeration of minimal hitting sets of a small hypergraph.

use std::collections::BTreeSet;

/// Largest number of distinct vertices (across all edges) we will search.
pub const MAX_VERTICES: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TooLarge {
    pub vertices: usize,
}

struct Masks<T> {
    universe: Vec<T>,
    edges: Vec<u32>,
}

fn encode<T: Ord + Clone>(edges: &[BTreeSet<T>]) -> Result<Masks<T>, TooLarge> {
    let universe: Vec<T> = edges.iter().flatten().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    if universe.len() > MAX_VERTICES {
        return Err(TooLarge { vertices: universe.len() });
    }
    let edges = edges
        .iter()
        .map(|e| e.iter().map(|x| 1u32 << universe.binary_search(x).expect("in universe")).fold(0, |a, b| a | b))
        .collect();
    Ok(Masks { universe, edges })
}

fn decode<T>(universe: &[T], mask: u32) -> BTreeSet<T>
where
    T: Clone + Ord,
{
    (0..universe.len()).filter(|i| mask >> i & 1 == 1).map(|i| universe[i].clone()).collect()
}

/// Hits every edge, and every member is the only hitter of some edge.
fn is_minimal_hs(h: u32, edges: &[u32]) -> bool {
    let mut critical = 0u32;
    for &e in edges {
        let hit = e & h;
        if hit == 0 {
            return false;
        }
        if hit.is_power_of_two() {
            critical |= hit;
        }
    }
    critical == h
}

/// Visits `k`-subsets of `0..n` as bitmasks in lexicographic order of their
/// sorted index lists.
pub(crate) fn for_each_k_subset(n: usize, k: usize, mut visit: impl FnMut(u32)) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        visit(idx.iter().fold(0u32, |m, &i| m | 1 << i));
        let Some(pos) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return;
        };
        idx[pos] += 1;
        for j in pos + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn search<T: Ord + Clone>(edges: &[BTreeSet<T>], minimum_only: bool) -> Result<Vec<BTreeSet<T>>, TooLarge> {
    if edges.iter().any(BTreeSet::is_empty) {
        return Ok(Vec::new());
    }
    let m = encode(edges)?;
    let n = m.universe.len();
    let mut found = Vec::new();
    for k in 0..=n {
        for_each_k_subset(n, k, |h| {
            if is_minimal_hs(h, &m.edges) {
                found.push(h);
            }
        });
        if minimum_only && !found.is_empty() {
            break;
        }
    }
    Ok(found.into_iter().map(|h| decode(&m.universe, h)).collect())
}

/// All inclusion-minimal hitting sets, ordered by size and then
/// lexicographically. No edges yields the single empty set; an empty edge
/// yields nothing.
pub fn minimal_hitting_sets<T: Ord + Clone>(edges: &[BTreeSet<T>]) -> Result<Vec<BTreeSet<T>>, TooLarge> {
    search(edges, false)
}

/// The minimum-cardinality hitting sets, in lexicographic order.
pub fn minimum_hitting_sets<T: Ord + Clone>(edges: &[BTreeSet<T>]) -> Result<Vec<BTreeSet<T>>, TooLarge> {
    search(edges, true)
}

/// Drops every edge that strictly contains another, and duplicates.
pub fn minimize_edges<T: Ord + Clone>(edges: impl IntoIterator<Item = BTreeSet<T>>) -> Vec<BTreeSet<T>> {
    let mut all: Vec<BTreeSet<T>> = edges.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
    all.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    let mut kept: Vec<BTreeSet<T>> = Vec::new();
    for e in all {
        if !kept.iter().any(|k| k.is_subset(&e)) {
            kept.push(e);
        }
    }
    kept.sort();
    kept
}

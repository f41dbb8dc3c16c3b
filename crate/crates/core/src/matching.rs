//! Perfect matching enumeration on bi-colored multigraphs.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::graph::{BiColoredGraph, EdgeId};

/// Default cap on the number of emitted matchings.
pub const DEFAULT_MATCHING_CAP: usize = 10_000_000;

/// Largest vertex count accepted by [`oracle_enumerate`].
pub const ORACLE_MAX_N: usize = 12;

// Below this size thread dispatch costs more than the enumeration.
const PARALLEL_MIN_EDGES: usize = 32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MatchingError {
    #[error("more than {cap} perfect matchings")]
    MatchingExplosion { cap: usize },
    #[error("oracle enumeration is limited to n <= {max}, got n = {n}")]
    TooLargeForOracle { n: usize, max: usize },
    #[error("matching enumeration supports at most 64 vertices, got {0}")]
    TooManyVertices(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerfectMatching {
    /// Member edges, sorted by id.
    pub edges: Vec<EdgeId>,
    /// Product of the member edge weights.
    pub weight: Complex64,
}

impl PerfectMatching {
    pub fn from_edges(g: &BiColoredGraph, mut edges: Vec<EdgeId>) -> Self {
        edges.sort_unstable();
        let weight = edges.iter().map(|&id| g.edge(id).weight).product();
        Self { edges, weight }
    }
}

/// All perfect matchings of `g`, ordered lexicographically by sorted edge ids.
pub fn enumerate_perfect_matchings(g: &BiColoredGraph) -> Result<Vec<PerfectMatching>, MatchingError> {
    enumerate_with_cap(g, DEFAULT_MATCHING_CAP)
}

/// Branches on the lowest uncovered vertex. On larger graphs the top-level
/// branches (the edges at vertex 0) run in parallel; the result is sorted, so
/// the schedule does not affect the output.
pub fn enumerate_with_cap(g: &BiColoredGraph, cap: usize) -> Result<Vec<PerfectMatching>, MatchingError> {
    let n = g.n();
    if n > 64 {
        return Err(MatchingError::TooManyVertices(n));
    }
    if n % 2 == 1 {
        return Ok(Vec::new());
    }
    let inc = g.incidence();
    let full: u64 = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let emitted = AtomicUsize::new(0);
    let walker = Walker { g, inc: &inc, full, cap, emitted: &emitted };

    let branch = |&id: &EdgeId| -> Result<Vec<Vec<EdgeId>>, MatchingError> {
        let e = g.edge(id);
        let covered = 1u64 | (1u64 << e.other(0));
        let mut out = Vec::new();
        let mut stack = vec![id];
        walker.recurse(covered, &mut stack, &mut out)?;
        Ok(out)
    };
    let branches: Vec<Result<Vec<Vec<EdgeId>>, MatchingError>> = if g.edge_count() >= PARALLEL_MIN_EDGES {
        inc[0].par_iter().map(branch).collect()
    } else {
        inc[0].iter().map(branch).collect()
    };

    let mut all = Vec::new();
    for b in branches {
        all.extend(b?);
    }
    let mut pms: Vec<PerfectMatching> = all.into_iter().map(|es| PerfectMatching::from_edges(g, es)).collect();
    pms.sort_by(|a, b| a.edges.cmp(&b.edges));
    Ok(pms)
}

struct Walker<'a> {
    g: &'a BiColoredGraph,
    inc: &'a [Vec<EdgeId>],
    full: u64,
    cap: usize,
    emitted: &'a AtomicUsize,
}

impl Walker<'_> {
    fn recurse(&self, covered: u64, stack: &mut Vec<EdgeId>, out: &mut Vec<Vec<EdgeId>>) -> Result<(), MatchingError> {
        if covered == self.full {
            if self.emitted.fetch_add(1, Ordering::Relaxed) >= self.cap {
                return Err(MatchingError::MatchingExplosion { cap: self.cap });
            }
            out.push(stack.clone());
            return Ok(());
        }
        if !self.all_coverable(covered) {
            return Ok(());
        }
        let v = (!covered).trailing_zeros() as usize;
        for &id in &self.inc[v] {
            let w = self.g.edge(id).other(v);
            if covered & (1u64 << w) != 0 {
                continue;
            }
            stack.push(id);
            self.recurse(covered | (1u64 << v) | (1u64 << w), stack, out)?;
            stack.pop();
        }
        Ok(())
    }

    // Every uncovered vertex still needs an edge into the uncovered set.
    fn all_coverable(&self, covered: u64) -> bool {
        let mut free = !covered & self.full;
        while free != 0 {
            let v = free.trailing_zeros() as usize;
            free &= free - 1;
            let ok = self.inc[v].iter().any(|&id| {
                let w = self.g.edge(id).other(v);
                covered & (1u64 << w) == 0
            });
            if !ok {
                return false;
            }
        }
        true
    }
}

/// Independent brute-force enumerator: every pairing of the vertex set,
/// then every choice of one parallel edge per pair.
pub fn oracle_enumerate(g: &BiColoredGraph) -> Result<Vec<PerfectMatching>, MatchingError> {
    let n = g.n();
    if n > ORACLE_MAX_N {
        return Err(MatchingError::TooLargeForOracle { n, max: ORACLE_MAX_N });
    }
    if n % 2 == 1 {
        return Ok(Vec::new());
    }
    let mut by_pair: BTreeMap<(usize, usize), Vec<EdgeId>> = BTreeMap::new();
    for e in g.edges() {
        by_pair.entry((e.u, e.v)).or_default().push(e.id);
    }

    let mut pairings = Vec::new();
    let vertices: Vec<usize> = (0..n).collect();
    all_pairings(&vertices, &mut Vec::new(), &mut pairings);

    let mut out = Vec::new();
    for pairing in pairings {
        let choices: Vec<&[EdgeId]> = pairing
            .iter()
            .map(|p| by_pair.get(p).map(Vec::as_slice).unwrap_or(&[]))
            .collect();
        if choices.iter().any(|c| c.is_empty()) {
            continue;
        }
        // odometer over the cartesian product
        let mut idx = vec![0usize; choices.len()];
        loop {
            let edges: Vec<EdgeId> = idx.iter().zip(&choices).map(|(&i, c)| c[i]).collect();
            out.push(PerfectMatching::from_edges(g, edges));
            let mut k = 0;
            while k < idx.len() {
                idx[k] += 1;
                if idx[k] < choices[k].len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == idx.len() {
                break;
            }
        }
    }
    out.sort_by(|a, b| a.edges.cmp(&b.edges));
    Ok(out)
}

fn all_pairings(rest: &[usize], cur: &mut Vec<(usize, usize)>, out: &mut Vec<Vec<(usize, usize)>>) {
    if rest.is_empty() {
        out.push(cur.clone());
        return;
    }
    let first = rest[0];
    for i in 1..rest.len() {
        let mut remaining: Vec<usize> = rest[1..].to_vec();
        let partner = remaining.remove(i - 1);
        cur.push((first, partner));
        all_pairings(&remaining, cur, out);
        cur.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, k4_ghz, EdgeSpec};

    fn complete(n: usize) -> BiColoredGraph {
        let mut specs = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                specs.push(EdgeSpec::new(u, v, 0, 0, 1.0));
            }
        }
        build_graph(n, 2, &specs).unwrap()
    }

    #[test]
    fn k4_three_matchings() {
        let pms = enumerate_perfect_matchings(&k4_ghz()).unwrap();
        assert_eq!(pms.len(), 3);
        let ids: Vec<Vec<usize>> = pms.iter().map(|m| m.edges.iter().map(|e| e.0).collect()).collect();
        assert_eq!(ids, vec![vec![0, 1], vec![2, 3], vec![4, 5]]);
        assert_eq!(pms, oracle_enumerate(&k4_ghz()).unwrap());
    }

    #[test]
    fn complete_graph_counts() {
        // (2k-1)!!
        for (n, count) in [(2, 1), (4, 3), (6, 15), (8, 105), (10, 945)] {
            assert_eq!(enumerate_perfect_matchings(&complete(n)).unwrap().len(), count, "K{n}");
        }
    }

    #[test]
    fn parallel_edges_are_distinct_matchings() {
        let g = build_graph(2, 2, &[EdgeSpec::new(0, 1, 0, 0, 1.0), EdgeSpec::new(0, 1, 0, 0, -1.0)]).unwrap();
        let pms = enumerate_perfect_matchings(&g).unwrap();
        assert_eq!(pms.len(), 2);
        assert_eq!(pms[0].weight, Complex64::new(1.0, 0.0));
        assert_eq!(pms[1].weight, Complex64::new(-1.0, 0.0));
    }

    #[test]
    fn odd_and_disconnected() {
        assert!(enumerate_perfect_matchings(&complete(5)).unwrap().is_empty());
        let g = build_graph(4, 2, &[EdgeSpec::new(0, 1, 0, 0, 1.0)]).unwrap();
        assert!(enumerate_perfect_matchings(&g).unwrap().is_empty());
        assert!(oracle_enumerate(&g).unwrap().is_empty());
    }

    #[test]
    fn cap_triggers_explosion() {
        assert_eq!(
            enumerate_with_cap(&complete(8), 100),
            Err(MatchingError::MatchingExplosion { cap: 100 })
        );
        assert_eq!(enumerate_with_cap(&complete(8), 105).unwrap().len(), 105);
    }

    #[test]
    fn oracle_guard() {
        let g = build_graph(14, 2, &[]).unwrap();
        assert_eq!(
            oracle_enumerate(&g),
            Err(MatchingError::TooLargeForOracle { n: 14, max: 12 })
        );
    }
}

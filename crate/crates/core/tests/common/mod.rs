//! Shared generators and brute-force references for the integration tests.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

use bicolor::optimizer::{gradient, Objective, Topology, WeightVector};
use bicolor::{build_graph, evaluate, oracle_enumerate, BiColoredGraph, EdgeSpec};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random multigraph on `n` vertices with at most `max_edges` edges and at
/// most `max_mult` parallel edges per vertex pair.
pub fn random_multigraph(
    rng: &mut ChaCha8Rng,
    n: usize,
    d: usize,
    max_edges: usize,
    max_mult: usize,
) -> BiColoredGraph {
    let target = rng.gen_range(0..=max_edges);
    let mut per_pair: HashMap<(usize, usize), usize> = HashMap::new();
    let mut specs = Vec::new();
    let mut attempts = 0;
    while specs.len() < target && attempts < 10 * max_edges + 10 {
        attempts += 1;
        let u = rng.gen_range(0..n);
        let v = rng.gen_range(0..n);
        if u == v {
            continue;
        }
        let m = per_pair.entry((u.min(v), u.max(v))).or_insert(0);
        if *m >= max_mult {
            continue;
        }
        *m += 1;
        let w = Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        specs.push(EdgeSpec::new(u, v, rng.gen_range(0..d), rng.gen_range(0..d), w));
    }
    build_graph(n, d, &specs).unwrap()
}

/// Dense even-order graph: a random perfect matching's worth of guaranteed
/// structure plus extra random edges, so that most instances have matchings.
pub fn random_dense(rng: &mut ChaCha8Rng, n: usize, d: usize, extra: usize, max_mult: usize) -> BiColoredGraph {
    let mut verts: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        verts.swap(i, rng.gen_range(0..=i));
    }
    let mut specs = Vec::new();
    let mut per_pair: HashMap<(usize, usize), usize> = HashMap::new();
    let mut push = |u: usize, v: usize, rng: &mut ChaCha8Rng, specs: &mut Vec<EdgeSpec>| {
        let m = per_pair.entry((u.min(v), u.max(v))).or_insert(0);
        if *m >= max_mult {
            return;
        }
        *m += 1;
        let w = Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        specs.push(EdgeSpec::new(u, v, rng.gen_range(0..d), rng.gen_range(0..d), w));
    };
    for p in verts.chunks_exact(2) {
        push(p[0], p[1], rng, &mut specs);
    }
    for _ in 0..extra {
        let u = rng.gen_range(0..n);
        let v = rng.gen_range(0..n);
        if u != v {
            push(u, v, rng, &mut specs);
        }
    }
    build_graph(n, d, &specs).unwrap()
}

/// Proptest strategy over small multigraphs. Loops are dropped and pair
/// multiplicities above `max_mult` are truncated.
pub fn arb_multigraph(
    ns: std::ops::RangeInclusive<usize>,
    ds: std::ops::RangeInclusive<usize>,
    max_edges: usize,
    max_mult: usize,
) -> impl Strategy<Value = BiColoredGraph> {
    (ns, ds).prop_flat_map(move |(n, d)| {
        let edge = (0..n, 0..n, 0..d, 0..d, -2.0..2.0f64, -2.0..2.0f64);
        prop::collection::vec(edge, 0..=max_edges).prop_map(move |raw| {
            let mut per_pair: HashMap<(usize, usize), usize> = HashMap::new();
            let specs: Vec<EdgeSpec> = raw
                .into_iter()
                .filter(|&(u, v, ..)| u != v)
                .filter(|&(u, v, ..)| {
                    let m = per_pair.entry((u.min(v), u.max(v))).or_insert(0);
                    *m += 1;
                    *m <= max_mult
                })
                .map(|(u, v, cu, cv, re, im)| EdgeSpec::new(u, v, cu, cv, Complex64::new(re, im)))
                .collect();
            build_graph(n, d, &specs).unwrap()
        })
    })
}

/// Sorted edge-id lists of every matching.
pub fn id_lists(pms: &[bicolor::PerfectMatching]) -> Vec<Vec<usize>> {
    let mut v: Vec<Vec<usize>> = pms.iter().map(|m| m.edges.iter().map(|e| e.0).collect()).collect();
    v.sort();
    v
}

/// Coloring weights from the brute-force enumerator, with colors assigned by
/// walking edge endpoints directly.
pub fn oracle_state(g: &BiColoredGraph) -> BTreeMap<Vec<usize>, Complex64> {
    let mut out: BTreeMap<Vec<usize>, Complex64> = BTreeMap::new();
    for pm in oracle_enumerate(g).unwrap() {
        let mut col = vec![usize::MAX; g.n()];
        let mut w = Complex64::new(1.0, 0.0);
        for id in &pm.edges {
            let e = g.edge(*id);
            col[e.u] = e.color_at_u.index();
            col[e.v] = e.color_at_v.index();
            w *= e.weight;
        }
        assert!(col.iter().all(|&c| c != usize::MAX));
        *out.entry(col).or_default() += w;
    }
    out
}

pub fn random_weights(rng: &mut ChaCha8Rng, edges: usize) -> WeightVector {
    WeightVector((0..2 * edges).map(|_| rng.gen_range(-1.5..1.5)).collect())
}

/// Central differences of `evaluate`.
pub fn fd_gradient(t: &Topology, w: &WeightVector, obj: &Objective, h: f64) -> Vec<f64> {
    (0..w.0.len())
        .map(|i| {
            let mut plus = w.clone();
            let mut minus = w.clone();
            plus.0[i] += h;
            minus.0[i] -= h;
            let fp = evaluate(t, &plus, obj).unwrap().value;
            let fm = evaluate(t, &minus, obj).unwrap().value;
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

/// `||analytic - fd|| / max(||fd||, floor)`.
pub fn gradient_error(t: &Topology, w: &WeightVector, obj: &Objective) -> f64 {
    let g = gradient(t, w, obj).unwrap();
    let fd = fd_gradient(t, w, obj, 1e-6);
    let diff: f64 = g.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let scale: f64 = fd.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / scale.max(1e-3)
}

/// 4-monochromatic graph on six vertices, two colors, red = color 0.
///
/// A two-colored alternating 4-cycle on vertices 0..4 gives `rrrr` and `gggg`;
/// the edge 4-5 `(r,r)` puts the trailing pair in red. Two parallel 4-5 edges
/// `(g,g)` with weights `+1` and `-1` add the colorings `....gg`, which cancel.
pub fn synthetic_kmono() -> BiColoredGraph {
    let specs = [
        EdgeSpec::new(0, 1, 0, 0, 1.0),
        EdgeSpec::new(1, 2, 1, 1, 1.0),
        EdgeSpec::new(2, 3, 0, 0, 1.0),
        EdgeSpec::new(3, 0, 1, 1, 1.0),
        EdgeSpec::new(4, 5, 0, 0, 1.0),
        EdgeSpec::new(4, 5, 1, 1, 1.0),
        EdgeSpec::new(4, 5, 1, 1, -1.0),
    ];
    build_graph(6, 2, &specs).unwrap()
}

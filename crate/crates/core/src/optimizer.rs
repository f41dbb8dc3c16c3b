//! Weight optimization on fixed topologies and small exhaustive topology search.
//!
//! A [`Topology`] caches the perfect matchings of a graph together with the
//! coloring each one inherits, so that evaluating a fidelity for new weights
//! is a pass over the matchings. Objectives are maximized by projected
//! gradient ascent from seeded random starts. Near-optimal points are then
//! polished by Gauss-Newton on the residual `w(c) - target(c)` and checked
//! with the exact predicates from [`crate::fidelity`].

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::fidelity::{
    check_expected, general_fidelity, k_monochromatic_colorings, k_monochromatic_fidelity,
    monochromatic_colorings, monochromatic_fidelity, FidelityError, TargetSpec,
};
use crate::graph::{default_palette, BiColoredGraph, Color, EdgeSpec, GraphError, DEFAULT_TOL};
use crate::matching::{enumerate_with_cap, MatchingError, DEFAULT_MATCHING_CAP};
use crate::state::{compute_state_with, inherited_coloring, StateError, StateOptions, VertexColoring};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizeError {
    #[error("search space has {count} topologies, budget allows {limit}")]
    BudgetExceeded { count: u128, limit: u128 },
    #[error("objective undefined at this point (no surviving coloring)")]
    UndefinedAtPoint,
    #[error("weight vector has {got} parameters, topology needs {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("weights violate the {0:?} constraint")]
    ConstraintViolated(Constraint),
    #[error("objective does not fit the topology: {0}")]
    BadObjective(String),
    #[error(transparent)]
    Matching(#[from] MatchingError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Fidelity(#[from] FidelityError),
}

/// Admissible edge weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Constraint {
    #[default]
    Complex,
    Real,
    /// Strictly positive reals; no destructive interference is possible.
    PositiveReal,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ObjectiveKind {
    Monochromatic,
    KMonochromatic { k: usize, red: Color },
    General(TargetSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    pub kind: ObjectiveKind,
    pub constraint: Constraint,
}

impl Objective {
    pub fn mono() -> Self {
        Self { kind: ObjectiveKind::Monochromatic, constraint: Constraint::Complex }
    }

    pub fn k_mono(k: usize, red: Color) -> Self {
        Self { kind: ObjectiveKind::KMonochromatic { k, red }, constraint: Constraint::Complex }
    }

    pub fn general(t: TargetSpec) -> Self {
        Self { kind: ObjectiveKind::General(t), constraint: Constraint::Complex }
    }

    pub fn with_constraint(mut self, c: Constraint) -> Self {
        self.constraint = c;
        self
    }

    /// Colorings and the weights an exact solution must give them.
    pub fn expected(&self, n: usize, d: usize) -> BTreeMap<VertexColoring, Complex64> {
        let one = Complex64::new(1.0, 0.0);
        match &self.kind {
            ObjectiveKind::Monochromatic => monochromatic_colorings(n, d).into_iter().map(|c| (c, one)).collect(),
            ObjectiveKind::KMonochromatic { k, red } => {
                k_monochromatic_colorings(n, d, *k, *red).into_iter().map(|c| (c, one)).collect()
            }
            ObjectiveKind::General(t) => t.colorings().iter().cloned().zip(t.weights().iter().copied()).collect(),
        }
    }

    /// Overlap coefficients and the constant `K` in `F = |sum a_c w(c)|^2 / (K N)`.
    fn plan(&self, n: usize, d: usize) -> (BTreeMap<VertexColoring, Complex64>, f64) {
        match &self.kind {
            ObjectiveKind::General(t) => (t.coefficients().map(|(c, a)| (c.clone(), a)).collect(), t.norm_sqr()),
            _ => (self.expected(n, d), d as f64),
        }
    }

    fn validate(&self, n: usize, d: usize) -> Result<(), OptimizeError> {
        match &self.kind {
            ObjectiveKind::Monochromatic => Ok(()),
            ObjectiveKind::KMonochromatic { k, red } => {
                if *k == 0 || *k > n || red.index() >= d {
                    Err(OptimizeError::BadObjective(format!("k = {k}, red = {} on n = {n}, d = {d}", red.0)))
                } else {
                    Ok(())
                }
            }
            ObjectiveKind::General(t) => {
                if t.n() != n {
                    return Err(OptimizeError::BadObjective(format!("target has {} vertices, graph {n}", t.n())));
                }
                match t.colorings().iter().flat_map(|c| c.colors()).find(|c| c.index() >= d) {
                    Some(c) => Err(OptimizeError::BadObjective(format!("target color {} outside palette", c.0))),
                    None => Ok(()),
                }
            }
        }
    }
}

/// Per-edge complex weights flattened as `[re_0, im_0, re_1, im_1, ...]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(pub Vec<f64>);

impl WeightVector {
    pub fn from_complex(ws: &[Complex64]) -> Self {
        Self(ws.iter().flat_map(|w| [w.re, w.im]).collect())
    }

    pub fn to_complex(&self) -> Vec<Complex64> {
        self.0.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect()
    }

    pub fn edges(&self) -> usize {
        self.0.len() / 2
    }

    pub fn satisfies(&self, c: Constraint) -> bool {
        self.0.iter().all(|x| x.is_finite())
            && match c {
                Constraint::Complex => true,
                Constraint::Real => self.0.chunks_exact(2).all(|p| p[1] == 0.0),
                Constraint::PositiveReal => self.0.chunks_exact(2).all(|p| p[1] == 0.0 && p[0] > 0.0),
            }
    }
}

/// A graph's edge structure with its matchings and their inherited colorings
/// precomputed. Edge weights of the source graph are ignored.
#[derive(Debug, Clone)]
pub struct Topology {
    graph: BiColoredGraph,
    colorings: Vec<VertexColoring>,
    /// `(coloring index, edge indices)` per perfect matching.
    matchings: Vec<(usize, Vec<usize>)>,
    tolerance: f64,
}

impl Topology {
    pub fn new(graph: &BiColoredGraph) -> Result<Self, OptimizeError> {
        Self::with_cap(graph, DEFAULT_MATCHING_CAP)
    }

    pub fn with_cap(graph: &BiColoredGraph, cap: usize) -> Result<Self, OptimizeError> {
        let pms = enumerate_with_cap(graph, cap)?;
        let mut index: BTreeMap<VertexColoring, usize> = BTreeMap::new();
        let mut raw = Vec::with_capacity(pms.len());
        for pm in &pms {
            let c = inherited_coloring(graph, pm)?;
            let next = index.len();
            let ci = *index.entry(c).or_insert(next);
            raw.push((ci, pm.edges.iter().map(|e| e.0).collect::<Vec<_>>()));
        }
        // renumber so coloring indices follow coloring order
        let mut colorings: Vec<(VertexColoring, usize)> = index.into_iter().collect();
        let mut remap = vec![0; colorings.len()];
        for (new, (_, old)) in colorings.iter().enumerate() {
            remap[*old] = new;
        }
        let matchings = raw.into_iter().map(|(ci, es)| (remap[ci], es)).collect();
        let colorings = colorings.drain(..).map(|(c, _)| c).collect();
        Ok(Self { graph: graph.clone(), colorings, matchings, tolerance: DEFAULT_TOL })
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = tol;
        self
    }

    pub fn graph(&self) -> &BiColoredGraph {
        &self.graph
    }

    pub fn edge_count(&self) -> usize {
        self.graph.edge_count()
    }

    pub fn params(&self) -> usize {
        2 * self.graph.edge_count()
    }

    pub fn matching_count(&self) -> usize {
        self.matchings.len()
    }

    /// Colorings inherited by at least one matching, in coloring order.
    pub fn colorings(&self) -> &[VertexColoring] {
        &self.colorings
    }

    /// Number of matchings inheriting each coloring.
    pub fn multiplicities(&self) -> Vec<usize> {
        let mut m = vec![0; self.colorings.len()];
        for (ci, _) in &self.matchings {
            m[*ci] += 1;
        }
        m
    }

    /// Whether every edge lies in some perfect matching.
    pub fn all_edges_used(&self) -> bool {
        let mut used = vec![false; self.edge_count()];
        for (_, es) in &self.matchings {
            for &e in es {
                used[e] = true;
            }
        }
        used.into_iter().all(|u| u)
    }

    pub fn instantiate(&self, w: &WeightVector) -> Result<BiColoredGraph, OptimizeError> {
        Ok(self.graph.with_weights(&w.to_complex())?)
    }

    /// `w(c)` for every coloring of [`Self::colorings`].
    pub fn coloring_weights(&self, ws: &[Complex64]) -> Vec<Complex64> {
        let mut z = vec![Complex64::new(0.0, 0.0); self.colorings.len()];
        for (ci, es) in &self.matchings {
            z[*ci] += es.iter().map(|&e| ws[e]).product::<Complex64>();
        }
        z
    }

    fn coefficients(&self, obj: &Objective) -> (Vec<Complex64>, f64) {
        let (map, k) = obj.plan(self.graph.n(), self.graph.d());
        let a = self
            .colorings
            .iter()
            .map(|c| map.get(c).copied().unwrap_or(Complex64::new(0.0, 0.0)))
            .collect();
        (a, k)
    }

    /// `d w(c) / d w_e` as a dense `colorings x edges` matrix.
    fn jacobian(&self, ws: &[Complex64]) -> DMatrix<Complex64> {
        let mut j = DMatrix::from_element(self.colorings.len(), ws.len(), Complex64::new(0.0, 0.0));
        for (ci, es) in &self.matchings {
            for (pos, &e) in es.iter().enumerate() {
                j[(*ci, e)] += leave_one_out(es, pos, ws);
            }
        }
        j
    }
}

fn leave_one_out(es: &[usize], skip: usize, ws: &[Complex64]) -> Complex64 {
    es.iter()
        .enumerate()
        .filter(|&(i, _)| i != skip)
        .map(|(_, &e)| ws[e])
        .product()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    /// No surviving coloring: the fidelity is undefined and `value` is 0.
    pub undefined: bool,
}

fn check_point(t: &Topology, w: &WeightVector, obj: &Objective) -> Result<(), OptimizeError> {
    if w.0.len() != t.params() {
        return Err(OptimizeError::DimensionMismatch { got: w.0.len(), expected: t.params() });
    }
    if !w.satisfies(obj.constraint) {
        return Err(OptimizeError::ConstraintViolated(obj.constraint));
    }
    obj.validate(t.graph.n(), t.graph.d())
}

/// Objective fidelity of `topology` with weights `w`.
pub fn evaluate(t: &Topology, w: &WeightVector, obj: &Objective) -> Result<Evaluation, OptimizeError> {
    check_point(t, w, obj)?;
    let (a, k) = t.coefficients(obj);
    Ok(eval_raw(t, &w.to_complex(), &a, k))
}

fn eval_raw(t: &Topology, ws: &[Complex64], a: &[Complex64], k: f64) -> Evaluation {
    let z = t.coloring_weights(ws);
    if z.iter().all(|x| x.norm() <= t.tolerance) {
        return Evaluation { value: 0.0, undefined: true };
    }
    let n: f64 = z.iter().map(|x| x.norm_sqr()).sum();
    let s: Complex64 = a.iter().zip(&z).map(|(a, z)| a * z).sum();
    Evaluation { value: (s.norm_sqr() / (k * n)).min(1.0), undefined: false }
}

/// Analytic gradient of the objective with respect to the `2|E|` real parameters.
pub fn gradient(t: &Topology, w: &WeightVector, obj: &Objective) -> Result<Vec<f64>, OptimizeError> {
    check_point(t, w, obj)?;
    let (a, k) = t.coefficients(obj);
    grad_raw(t, &w.to_complex(), &a, k)
}

fn grad_raw(t: &Topology, ws: &[Complex64], a: &[Complex64], k: f64) -> Result<Vec<f64>, OptimizeError> {
    let z = t.coloring_weights(ws);
    if z.iter().all(|x| x.norm() <= t.tolerance) {
        return Err(OptimizeError::UndefinedAtPoint);
    }
    let n: f64 = z.iter().map(|x| x.norm_sqr()).sum();
    let s: Complex64 = a.iter().zip(&z).map(|(a, z)| a * z).sum();
    let s2 = s.norm_sqr();
    // dF / d conj(w(c))
    let beta: Vec<Complex64> = a
        .iter()
        .zip(&z)
        .map(|(a, z)| (s * a.conj() * n - z * s2) / (k * n * n))
        .collect();
    let mut g = vec![Complex64::new(0.0, 0.0); ws.len()];
    for (ci, es) in &t.matchings {
        for (pos, &e) in es.iter().enumerate() {
            g[e] += beta[*ci] * leave_one_out(es, pos, ws).conj();
        }
    }
    Ok(g.iter().flat_map(|x| [2.0 * x.re, 2.0 * x.im]).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    /// Armijo backtracking along the projected gradient.
    Backtracking,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeConfig {
    pub restarts: usize,
    pub max_iters: usize,
    pub seed: u64,
    pub step: StepRule,
    /// Bound on each real and imaginary part.
    pub box_bound: f64,
    /// Verification tolerance for the exactness check.
    pub tol: f64,
    /// Polish and verify once `1 - F` falls below this.
    pub polish_gap: f64,
    pub stop_on_exact: bool,
    pub record_trace: bool,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        Self {
            restarts: 10,
            max_iters: 2000,
            seed: 0,
            step: StepRule::Backtracking,
            box_bound: 10.0,
            tol: DEFAULT_TOL,
            polish_gap: 1e-3,
            stop_on_exact: true,
            record_trace: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub restart: usize,
    pub iter: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub graph: BiColoredGraph,
    pub fidelity: f64,
    pub exact: bool,
    pub restarts_used: usize,
    pub evaluations: usize,
    pub seed: u64,
    pub trace: Vec<TracePoint>,
}

fn restart_rng(seed: u64, restart: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (restart as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn random_start(rng: &mut ChaCha8Rng, edges: usize, c: Constraint) -> Vec<f64> {
    let mut x = Vec::with_capacity(2 * edges);
    for _ in 0..edges {
        match c {
            Constraint::Complex => {
                let r = rng.gen::<f64>().sqrt();
                let th = rng.gen::<f64>() * std::f64::consts::TAU;
                x.extend([r * th.cos(), r * th.sin()]);
            }
            Constraint::Real => x.extend([rng.gen_range(-1.0..1.0), 0.0]),
            Constraint::PositiveReal => x.extend([1.0 - rng.gen::<f64>(), 0.0]),
        }
    }
    x
}

// Smallest admissible positive weight.
const POSITIVE_FLOOR: f64 = 1e-12;

fn project(x: &mut [f64], c: Constraint, bound: f64) {
    for p in x.chunks_exact_mut(2) {
        p[0] = p[0].clamp(-bound, bound);
        p[1] = p[1].clamp(-bound, bound);
        match c {
            Constraint::Complex => {}
            Constraint::Real => p[1] = 0.0,
            Constraint::PositiveReal => {
                p[0] = p[0].max(POSITIVE_FLOOR);
                p[1] = 0.0;
            }
        }
    }
}

struct Ascent {
    x: Vec<f64>,
    value: f64,
    evaluations: usize,
}

fn to_complex(x: &[f64]) -> Vec<Complex64> {
    x.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect()
}

#[allow(clippy::too_many_arguments)]
fn ascend(
    t: &Topology,
    a: &[Complex64],
    k: f64,
    obj: &Objective,
    cfg: &OptimizeConfig,
    rng: &mut ChaCha8Rng,
    restart: usize,
    trace: &mut Vec<TracePoint>,
) -> Ascent {
    let mut x = random_start(rng, t.edge_count(), obj.constraint);
    project(&mut x, obj.constraint, cfg.box_bound);
    let mut evals = 1;
    let mut f = eval_raw(t, &to_complex(&x), a, k).value;
    let mut best = (x.clone(), f);
    let mut step: f64 = 1.0;
    let mut stalls = 0;

    for iter in 0..cfg.max_iters {
        if cfg.record_trace {
            trace.push(TracePoint { restart, iter, value: f });
        }
        if f >= 1.0 - 1e-15 {
            break;
        }
        let mut g = match grad_raw(t, &to_complex(&x), a, k) {
            Ok(g) => g,
            Err(_) => {
                // degenerate point: jitter and retry
                for xi in x.iter_mut() {
                    *xi += 0.1 * (rng.gen::<f64>() - 0.5);
                }
                project(&mut x, obj.constraint, cfg.box_bound);
                evals += 1;
                f = eval_raw(t, &to_complex(&x), a, k).value;
                continue;
            }
        };
        if obj.constraint != Constraint::Complex {
            for p in g.chunks_exact_mut(2) {
                p[1] = 0.0;
            }
        }
        let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if gnorm < 1e-14 {
            break;
        }

        match cfg.step {
            StepRule::Fixed(h) => {
                for (xi, gi) in x.iter_mut().zip(&g) {
                    *xi += h * gi;
                }
                project(&mut x, obj.constraint, cfg.box_bound);
                evals += 1;
                f = eval_raw(t, &to_complex(&x), a, k).value;
            }
            StepRule::Backtracking => {
                let mut h = (step * 2.0).min(1e6);
                let mut accepted = false;
                while h > 1e-18 {
                    let mut y: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi + h * gi).collect();
                    project(&mut y, obj.constraint, cfg.box_bound);
                    let dir: f64 = y.iter().zip(&x).zip(&g).map(|((yi, xi), gi)| (yi - xi) * gi).sum();
                    evals += 1;
                    let fy = eval_raw(t, &to_complex(&y), a, k);
                    if !fy.undefined && fy.value >= f + 1e-4 * dir && dir > 0.0 {
                        stalls = if fy.value - f < 1e-15 { stalls + 1 } else { 0 };
                        x = y;
                        f = fy.value;
                        step = h;
                        accepted = true;
                        break;
                    }
                    h *= 0.5;
                }
                if !accepted || stalls > 20 {
                    break;
                }
            }
        }
        if f > best.1 {
            best = (x.clone(), f);
        }
    }
    if f > best.1 {
        best = (x, f);
    }
    Ascent { x: best.0, value: best.1, evaluations: evals }
}

/// Values that near-exact weight components are snapped to.
fn snap_values() -> [f64; 11] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    [0.0, 1.0, -1.0, 2.0, -2.0, 0.5, -0.5, h, -h, 3.0, -3.0]
}

const SNAP_RADIUS: f64 = 1e-4;

fn snap(x: f64) -> f64 {
    snap_values()
        .into_iter()
        .find(|v| (x - v).abs() <= SNAP_RADIUS)
        .unwrap_or(x)
}

/// Solve `w(c) = target(c)` by Gauss-Newton starting from `ws`, after a global
/// rescaling that best aligns the state with the target. Returns the polished
/// weights if the residual converges.
fn polish(
    t: &Topology,
    ws: &[Complex64],
    expected: &BTreeMap<VertexColoring, Complex64>,
    constraint: Constraint,
) -> Option<Vec<Complex64>> {
    // every required nonzero coloring must be reachable
    if expected.iter().any(|(c, e)| e.norm() > 0.0 && t.colorings.binary_search(c).is_err()) {
        return None;
    }
    let target: Vec<Complex64> = t
        .colorings
        .iter()
        .map(|c| expected.get(c).copied().unwrap_or(Complex64::new(0.0, 0.0)))
        .collect();
    let half = (t.graph.n() / 2) as f64;
    let z = t.coloring_weights(ws);
    let zz: f64 = z.iter().map(|x| x.norm_sqr()).sum();
    if zz == 0.0 {
        return None;
    }
    let alpha: Complex64 = z.iter().zip(&target).map(|(z, e)| z.conj() * e).sum::<Complex64>() / zz;
    let lambda = match constraint {
        Constraint::Complex => alpha.powf(1.0 / half),
        _ => {
            let r = alpha.re;
            if r > 0.0 {
                Complex64::new(r.powf(1.0 / half), 0.0)
            } else if r < 0.0 && (t.graph.n() / 2) % 2 == 1 {
                Complex64::new(-(-r).powf(1.0 / half), 0.0)
            } else {
                Complex64::new(1.0, 0.0)
            }
        }
    };
    let mut w: Vec<Complex64> = ws.iter().map(|x| x * lambda).collect();
    let rows = t.colorings.len();
    let cols = w.len();

    for _ in 0..60 {
        let z = t.coloring_weights(&w);
        let r: Vec<Complex64> = z.iter().zip(&target).map(|(z, e)| z - e).collect();
        let res = r.iter().map(|x| x.norm()).fold(0.0, f64::max);
        if res < 1e-14 {
            return Some(w);
        }
        let j = t.jacobian(&w);
        let delta: Vec<Complex64> = match constraint {
            Constraint::Complex => {
                let b = DVector::from_iterator(rows, r.iter().map(|x| -x));
                let sol = j.svd(true, true).solve(&b, 1e-12).ok()?;
                sol.iter().copied().collect()
            }
            _ => {
                let a = DMatrix::from_fn(2 * rows, cols, |i, e| {
                    if i < rows {
                        j[(i, e)].re
                    } else {
                        j[(i - rows, e)].im
                    }
                });
                let b = DVector::from_fn(2 * rows, |i, _| if i < rows { -r[i].re } else { -r[i - rows].im });
                let sol = a.svd(true, true).solve(&b, 1e-12).ok()?;
                sol.iter().map(|&x| Complex64::new(x, 0.0)).collect()
            }
        };
        for (wi, di) in w.iter_mut().zip(&delta) {
            *wi += di;
        }
        if w.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
            return None;
        }
        if constraint == Constraint::PositiveReal && w.iter().any(|x| x.re <= 0.0) {
            return None;
        }
    }
    None
}

/// Fidelity of a concrete graph under `obj`, through the state and fidelity
/// modules. Undefined fidelities count as 0.
pub fn graph_fidelity(g: &BiColoredGraph, obj: &Objective, tol: f64) -> Result<f64, OptimizeError> {
    let s = compute_state_with(g, StateOptions { tolerance: tol, ..StateOptions::default() })?;
    let r = match &obj.kind {
        ObjectiveKind::Monochromatic => monochromatic_fidelity(&s),
        ObjectiveKind::KMonochromatic { k, red } => k_monochromatic_fidelity(&s, *k, *red),
        ObjectiveKind::General(t) => general_fidelity(&s, t),
    };
    match r {
        Ok(r) => Ok(r.value),
        Err(FidelityError::UndefinedFidelity) => Ok(0.0),
        Err(e) => Err(e.into()),
    }
}

/// The exactness predicate matching `obj` (verify_monochromatic,
/// verify_k_monochromatic or verify_target).
pub fn graph_is_exact(g: &BiColoredGraph, obj: &Objective, tol: f64) -> Result<bool, OptimizeError> {
    let s = compute_state_with(g, StateOptions { tolerance: tol, ..StateOptions::default() })?;
    Ok(check_expected(&s, &obj.expected(g.n(), g.d()), tol).passed)
}

/// Try to turn a near-optimal point into an exactly verified graph.
fn exact_candidate(
    t: &Topology,
    ws: &[Complex64],
    obj: &Objective,
    tol: f64,
) -> Result<Option<BiColoredGraph>, OptimizeError> {
    let expected = obj.expected(t.graph.n(), t.graph.d());
    let Some(polished) = polish(t, ws, &expected, obj.constraint) else {
        return Ok(None);
    };
    let snapped: Vec<Complex64> = polished.iter().map(|w| Complex64::new(snap(w.re), snap(w.im))).collect();
    if snapped != polished {
        let g = t.graph.with_weights(&snapped)?;
        let admissible = WeightVector::from_complex(&snapped).satisfies(obj.constraint);
        if admissible && graph_is_exact(&g, obj, tol)? {
            return Ok(Some(g));
        }
    }
    let g = t.graph.with_weights(&polished)?;
    if graph_is_exact(&g, obj, tol)? {
        Ok(Some(g))
    } else {
        Ok(None)
    }
}

/// Multi-start projected gradient ascent on a fixed topology.
pub fn optimize_weights(t: &Topology, obj: &Objective, cfg: &OptimizeConfig) -> Result<SearchResult, OptimizeError> {
    obj.validate(t.graph.n(), t.graph.d())?;
    let (a, k) = t.coefficients(obj);
    let mut trace = Vec::new();
    let mut evaluations = 0;
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut exact: Option<BiColoredGraph> = None;
    let mut restarts_used = 0;

    if t.edge_count() > 0 && t.matching_count() > 0 {
        for restart in 0..cfg.restarts.max(1) {
            restarts_used += 1;
            let mut rng = restart_rng(cfg.seed, restart);
            let run = ascend(t, &a, k, obj, cfg, &mut rng, restart, &mut trace);
            evaluations += run.evaluations;
            if exact.is_none() && run.value >= 1.0 - cfg.polish_gap {
                exact = exact_candidate(t, &to_complex(&run.x), obj, cfg.tol)?;
            }
            if best.as_ref().is_none_or(|b| run.value > b.1) {
                best = Some((run.x, run.value));
            }
            if exact.is_some() && cfg.stop_on_exact {
                break;
            }
        }
    }

    let (graph, is_exact) = match exact {
        Some(g) => (g, true),
        None => match best {
            Some((x, _)) => (t.graph.with_weights(&to_complex(&x))?, false),
            None => (t.graph.clone(), false),
        },
    };
    let fidelity = graph_fidelity(&graph, obj, cfg.tol)?;
    Ok(SearchResult {
        graph,
        fidelity,
        exact: is_exact,
        restarts_used,
        evaluations,
        seed: cfg.seed,
        trace,
    })
}

/// Edge weights for a topology search.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightDomain {
    /// Gradient ascent over the constraint set.
    Continuous,
    /// Exhaustive assignment from a finite set.
    Set(Vec<Complex64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchBudget {
    pub max_edges: usize,
    /// Maximum number of parallel edges between one vertex pair.
    pub max_multiplicity: usize,
    pub weights: WeightDomain,
    /// Upper bound on the number of candidate topologies.
    pub max_topologies: u128,
    /// Upper bound on weight assignments per topology in [`WeightDomain::Set`].
    pub max_assignments: u128,
    /// Skip topologies that cannot be exact hits (see [`exact_feasible`]).
    pub exact_only: bool,
    /// Stop after this many exact hits.
    pub max_hits: Option<usize>,
    /// Number of best non-exact results to keep.
    pub keep_best: usize,
    /// Palette labels; defaults to [`default_palette`].
    pub palette: Option<Vec<String>>,
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self {
            max_edges: 6,
            max_multiplicity: 1,
            weights: WeightDomain::Continuous,
            max_topologies: 5_000_000,
            max_assignments: 1_000_000,
            exact_only: true,
            max_hits: None,
            keep_best: 5,
            palette: None,
        }
    }
}

/// All `(u, v, color_at_u, color_at_v)` with `u < v`, in lexicographic order.
pub fn candidate_edges(n: usize, d: usize) -> Vec<(usize, usize, usize, usize)> {
    let mut out = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            for cu in 0..d {
                for cv in 0..d {
                    out.push((u, v, cu, cv));
                }
            }
        }
    }
    out
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

/// Number of edge subsets with `1..=max_edges` edges and at most
/// `max_multiplicity` edges per vertex pair.
pub fn count_topologies(n: usize, d: usize, max_edges: usize, max_multiplicity: usize) -> u128 {
    let pairs = n * n.saturating_sub(1) / 2;
    let per_pair: Vec<u128> = (0..=max_multiplicity.min(d * d))
        .map(|m| binomial((d * d) as u128, m as u128))
        .collect();
    let mut poly = vec![0u128; max_edges + 1];
    poly[0] = 1;
    for _ in 0..pairs {
        let mut next = vec![0u128; max_edges + 1];
        for (i, &p) in poly.iter().enumerate() {
            if p == 0 {
                continue;
            }
            for (m, &c) in per_pair.iter().enumerate() {
                if i + m <= max_edges {
                    next[i + m] = next[i + m].saturating_add(p.saturating_mul(c));
                }
            }
        }
        poly = next;
    }
    poly[1..].iter().fold(0u128, |a, &b| a.saturating_add(b))
}

/// Necessary conditions for an exact hit with all edges nonzero: every edge
/// lies in a perfect matching, every required coloring is reachable, and every
/// other reachable coloring has at least two matchings to cancel (none at all
/// for positive weights).
pub fn exact_feasible(t: &Topology, obj: &Objective) -> bool {
    if t.matching_count() == 0 || !t.all_edges_used() {
        return false;
    }
    let expected = obj.expected(t.graph.n(), t.graph.d());
    if expected.iter().any(|(c, e)| e.norm() > 0.0 && t.colorings.binary_search(c).is_err()) {
        return false;
    }
    let mult = t.multiplicities();
    t.colorings.iter().zip(&mult).all(|(c, &m)| {
        let needed = expected.get(c).is_some_and(|e| e.norm() > 0.0);
        needed || (obj.constraint != Constraint::PositiveReal && m >= 2)
    })
}

fn worth_optimizing(t: &Topology, obj: &Objective) -> bool {
    if t.matching_count() == 0 || !t.all_edges_used() {
        return false;
    }
    let expected = obj.expected(t.graph.n(), t.graph.d());
    t.colorings.iter().any(|c| expected.contains_key(c))
}

/// Visit every subset of `0..universe` of size `k` in lexicographic order,
/// respecting a per-group cap.
fn for_each_subset(
    group: &[usize],
    k: usize,
    cap: usize,
    start: usize,
    counts: &mut Vec<usize>,
    cur: &mut Vec<usize>,
    f: &mut dyn FnMut(&[usize]),
) {
    if cur.len() == k {
        f(cur);
        return;
    }
    let need = k - cur.len();
    for i in start..group.len() {
        if group.len() - i < need {
            break;
        }
        if counts[group[i]] >= cap {
            continue;
        }
        counts[group[i]] += 1;
        cur.push(i);
        for_each_subset(group, k, cap, i + 1, counts, cur, f);
        cur.pop();
        counts[group[i]] -= 1;
    }
}

fn assignment_search(
    t: &Topology,
    obj: &Objective,
    set: &[Complex64],
    cfg: &OptimizeConfig,
) -> Result<SearchResult, OptimizeError> {
    let (a, k) = t.coefficients(obj);
    let m = t.edge_count();
    let mut idx = vec![0usize; m];
    let mut best: Option<(Vec<Complex64>, f64)> = None;
    let mut exact = None;
    let mut evaluations = 0;
    loop {
        let ws: Vec<Complex64> = idx.iter().map(|&i| set[i]).collect();
        evaluations += 1;
        let e = eval_raw(t, &ws, &a, k);
        if !e.undefined && best.as_ref().is_none_or(|b| e.value > b.1) {
            best = Some((ws.clone(), e.value));
        }
        if e.value >= 1.0 - cfg.polish_gap {
            let g = t.graph.with_weights(&ws)?;
            if graph_is_exact(&g, obj, cfg.tol)? {
                exact = Some(g);
                if cfg.stop_on_exact {
                    break;
                }
            }
        }
        let mut p = 0;
        while p < m {
            idx[p] += 1;
            if idx[p] < set.len() {
                break;
            }
            idx[p] = 0;
            p += 1;
        }
        if p == m {
            break;
        }
    }
    let (graph, is_exact) = match (exact, best) {
        (Some(g), _) => (g, true),
        (None, Some((ws, _))) => (t.graph.with_weights(&ws)?, false),
        (None, None) => (t.graph.clone(), false),
    };
    let fidelity = graph_fidelity(&graph, obj, cfg.tol)?;
    Ok(SearchResult { graph, fidelity, exact: is_exact, restarts_used: 0, evaluations, seed: cfg.seed, trace: Vec::new() })
}

/// Canonical key for syntactic dedup and ordering.
fn edge_list_key(g: &BiColoredGraph) -> Vec<(usize, usize, u8, u8)> {
    g.edges().iter().map(|e| (e.u, e.v, e.color_at_u.0, e.color_at_v.0)).collect()
}

/// Enumerate topologies by growing edge count and lexicographic order over
/// [`candidate_edges`], optimize weights on each, and return the exact hits
/// followed by the best approximate results, sorted by fidelity.
pub fn search_topologies(
    n: usize,
    d: usize,
    budget: &SearchBudget,
    obj: &Objective,
    cfg: &OptimizeConfig,
) -> Result<Vec<SearchResult>, OptimizeError> {
    if n % 2 == 1 {
        return Ok(Vec::new());
    }
    let palette = budget.palette.clone().unwrap_or_else(|| default_palette(d));
    if palette.len() != d {
        return Err(OptimizeError::BadObjective(format!("palette has {} labels, d = {d}", palette.len())));
    }
    obj.validate(n, d)?;
    let count = count_topologies(n, d, budget.max_edges, budget.max_multiplicity);
    if count > budget.max_topologies {
        return Err(OptimizeError::BudgetExceeded { count, limit: budget.max_topologies });
    }
    if let WeightDomain::Set(set) = &budget.weights {
        let per = (set.len() as u128).checked_pow(budget.max_edges as u32).unwrap_or(u128::MAX);
        if set.is_empty() || per > budget.max_assignments {
            return Err(OptimizeError::BudgetExceeded { count: per, limit: budget.max_assignments });
        }
    }

    let universe = candidate_edges(n, d);
    let pair_of: Vec<usize> = universe.iter().map(|&(u, v, _, _)| u * n + v).collect();
    let build = |subset: &[usize]| -> Result<BiColoredGraph, OptimizeError> {
        let specs: Vec<EdgeSpec> = subset
            .iter()
            .map(|&i| {
                let (u, v, cu, cv) = universe[i];
                EdgeSpec::new(u, v, cu, cv, 1.0)
            })
            .collect();
        Ok(BiColoredGraph::with_palette(n, palette.clone(), &specs)?)
    };

    let mut hits: Vec<SearchResult> = Vec::new();
    let mut approx: Vec<SearchResult> = Vec::new();
    let max_hits = budget.max_hits.unwrap_or(usize::MAX);

    for k in 1..=budget.max_edges {
        let mut subsets: Vec<Vec<usize>> = Vec::new();
        let mut counts = vec![0usize; n * n];
        for_each_subset(&pair_of, k, budget.max_multiplicity, 0, &mut counts, &mut Vec::new(), &mut |s| {
            subsets.push(s.to_vec())
        });

        // filter in parallel; order is preserved by collect
        let candidates: Vec<Topology> = subsets
            .par_iter()
            .map(|s| -> Result<Option<Topology>, OptimizeError> {
                let t = Topology::new(&build(s)?)?.with_tolerance(cfg.tol);
                let keep = if budget.exact_only { exact_feasible(&t, obj) } else { worth_optimizing(&t, obj) };
                Ok(keep.then_some(t))
            })
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .flatten()
            .collect();

        for chunk in candidates.chunks(256) {
            let results: Vec<SearchResult> = chunk
                .par_iter()
                .map(|t| match &budget.weights {
                    WeightDomain::Continuous => optimize_weights(t, obj, cfg),
                    WeightDomain::Set(set) => assignment_search(t, obj, set, cfg),
                })
                .collect::<Result<_, _>>()?;
            for r in results {
                if r.exact {
                    if hits.len() < max_hits {
                        hits.push(r);
                    }
                } else {
                    approx.push(r);
                }
            }
            approx.sort_by(|x, y| {
                y.fidelity
                    .total_cmp(&x.fidelity)
                    .then_with(|| edge_list_key(&x.graph).cmp(&edge_list_key(&y.graph)))
            });
            approx.truncate(budget.keep_best);
            if hits.len() >= max_hits {
                break;
            }
        }
        if hits.len() >= max_hits {
            break;
        }
    }

    hits.sort_by(|x, y| {
        y.fidelity
            .total_cmp(&x.fidelity)
            .then_with(|| edge_list_key(&x.graph).cmp(&edge_list_key(&y.graph)))
    });
    hits.dedup_by(|a, b| edge_list_key(&a.graph) == edge_list_key(&b.graph));
    hits.extend(approx);
    Ok(hits)
}

/// All perfect matchings of the complete graph `K_n` as vertex pairs.
pub fn complete_graph_matchings(n: usize) -> Vec<Vec<(usize, usize)>> {
    fn rec(rest: &[usize], cur: &mut Vec<(usize, usize)>, out: &mut Vec<Vec<(usize, usize)>>) {
        if rest.is_empty() {
            out.push(cur.clone());
            return;
        }
        for i in 1..rest.len() {
            let mut r: Vec<usize> = rest[1..].to_vec();
            let p = r.remove(i - 1);
            cur.push((rest[0], p));
            rec(&r, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if n.is_multiple_of(2) {
        rec(&(0..n).collect::<Vec<_>>(), &mut Vec::new(), &mut out);
    }
    out
}

/// Topologies that contain one monochromatic perfect matching per color:
/// color 0 uses `{01, 23, ...}`, every other color any perfect matching of
/// `K_n`. These are the graphs in which all `d` monochromatic colorings are
/// reachable with the fewest edges.
pub fn monochromatic_cover_library(n: usize, d: usize) -> Vec<BiColoredGraph> {
    let pms = complete_graph_matchings(n);
    if pms.is_empty() || d < 2 {
        return Vec::new();
    }
    let first: Vec<(usize, usize)> = (0..n / 2).map(|i| (2 * i, 2 * i + 1)).collect();
    let mut choice = vec![0usize; d - 1];
    let mut out = Vec::new();
    loop {
        let mut specs: Vec<EdgeSpec> = first.iter().map(|&(u, v)| EdgeSpec::new(u, v, 0, 0, 1.0)).collect();
        for (c, &pi) in choice.iter().enumerate() {
            specs.extend(pms[pi].iter().map(|&(u, v)| EdgeSpec::new(u, v, c + 1, c + 1, 1.0)));
        }
        specs.sort_by_key(|s| (s.u, s.v, s.color_at_u));
        out.push(crate::graph::build_graph(n, d, &specs).expect("library graph is valid"));
        let mut p = 0;
        while p < choice.len() {
            choice[p] += 1;
            if choice[p] < pms.len() {
                break;
            }
            choice[p] = 0;
            p += 1;
        }
        if p == choice.len() {
            break;
        }
    }
    out
}

//! Inherited vertex colorings and the state map `c -> w(c)`.
//!
//! Every perfect matching colors each vertex with the color its matching edge
//! carries at that endpoint. Matchings that induce the same coloring add up
//! coherently; a coloring whose summed weight is within tolerance of zero is
//! kept in the map and flagged as cancelled.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

use crate::graph::{BiColoredGraph, Color, GraphError, DEFAULT_TOL};
use crate::matching::{enumerate_with_cap, MatchingError, PerfectMatching, DEFAULT_MATCHING_CAP};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("edge set does not cover every vertex exactly once (vertex {vertex})")]
    NotAMatching { vertex: usize },
    #[error("coloring has length {got}, expected {n}")]
    BadColoringLength { got: usize, n: usize },
    #[error("coloring uses color {color}, palette has {d} colors")]
    BadColoringColor { color: usize, d: usize },
    #[error(transparent)]
    Matching(#[from] MatchingError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Color of each vertex, indexed by vertex. Compared by exact sequence equality.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexColoring(pub Vec<Color>);

impl VertexColoring {
    pub fn from_indices(ix: &[usize]) -> Self {
        Self(ix.iter().map(|&i| Color::from(i)).collect())
    }

    pub fn monochromatic(n: usize, c: Color) -> Self {
        Self(vec![c; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn colors(&self) -> &[Color] {
        &self.0
    }

    pub fn is_monochromatic(&self) -> bool {
        self.0.windows(2).all(|w| w[0] == w[1])
    }

    /// Concatenation, used for disjoint unions.
    pub fn concat(&self, other: &Self) -> Self {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Self(v)
    }

    pub fn check(&self, n: usize, d: usize) -> Result<(), StateError> {
        if self.0.len() != n {
            return Err(StateError::BadColoringLength { got: self.0.len(), n });
        }
        if let Some(c) = self.0.iter().find(|c| c.index() >= d) {
            return Err(StateError::BadColoringColor { color: c.index(), d });
        }
        Ok(())
    }

    pub fn labels<'a>(&self, palette: &'a [String]) -> Vec<&'a str> {
        self.0.iter().map(|c| palette[c.index()].as_str()).collect()
    }
}

impl fmt::Display for VertexColoring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|c| c.0.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub weight: Complex64,
    /// Indices into the matching list the state was computed from.
    pub matchings: Vec<usize>,
    pub cancelled: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateMap {
    pub n: usize,
    pub d: usize,
    pub palette: Vec<String>,
    pub tolerance: f64,
    pub matching_count: usize,
    pub terms: BTreeMap<VertexColoring, Term>,
}

impl StateMap {
    /// Build a state directly from coloring weights. Provenance lists are empty.
    pub fn from_terms(
        n: usize,
        palette: Vec<String>,
        terms: impl IntoIterator<Item = (VertexColoring, Complex64)>,
        tolerance: f64,
    ) -> Result<Self, StateError> {
        let d = palette.len();
        let mut map = BTreeMap::new();
        for (c, w) in terms {
            c.check(n, d)?;
            let t = map.entry(c).or_insert(Term {
                weight: Complex64::new(0.0, 0.0),
                matchings: Vec::new(),
                cancelled: false,
            });
            t.weight += w;
        }
        for t in map.values_mut() {
            t.cancelled = t.weight.norm() <= tolerance;
        }
        Ok(Self { n, d, palette, tolerance, matching_count: 0, terms: map })
    }

    /// `w(c)`; zero for colorings with no contributing matching.
    pub fn weight(&self, c: &VertexColoring) -> Complex64 {
        self.terms.get(c).map_or(Complex64::new(0.0, 0.0), |t| t.weight)
    }

    /// `N = sum_c |w(c)|^2` over the computed (unrounded) weights.
    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|t| t.weight.norm_sqr()).sum()
    }

    pub fn surviving(&self) -> impl Iterator<Item = (&VertexColoring, &Term)> {
        self.terms.iter().filter(|(_, t)| !t.cancelled)
    }

    pub fn surviving_count(&self) -> usize {
        self.surviving().count()
    }

    pub fn cancelled_count(&self) -> usize {
        self.terms.values().filter(|t| t.cancelled).count()
    }

    /// Sum of all term weights.
    pub fn total(&self) -> Complex64 {
        self.terms.values().map(|t| t.weight).sum()
    }
}

/// Coloring inherited by `pm`: each vertex takes its matching edge's color at
/// that endpoint.
pub fn inherited_coloring(g: &BiColoredGraph, pm: &PerfectMatching) -> Result<VertexColoring, StateError> {
    let mut colors: Vec<Option<Color>> = vec![None; g.n()];
    for &id in &pm.edges {
        let e = g.edge(id);
        for (vertex, c) in [(e.u, e.color_at_u), (e.v, e.color_at_v)] {
            if colors[vertex].replace(c).is_some() {
                return Err(StateError::NotAMatching { vertex });
            }
        }
    }
    colors
        .into_iter()
        .enumerate()
        .map(|(vertex, c)| c.ok_or(StateError::NotAMatching { vertex }))
        .collect::<Result<Vec<_>, _>>()
        .map(VertexColoring)
}

#[derive(Debug, Clone, Copy)]
pub struct StateOptions {
    pub tolerance: f64,
    pub matching_cap: usize,
}

impl Default for StateOptions {
    fn default() -> Self {
        Self { tolerance: DEFAULT_TOL, matching_cap: DEFAULT_MATCHING_CAP }
    }
}

pub fn compute_state(g: &BiColoredGraph) -> Result<StateMap, StateError> {
    compute_state_with(g, StateOptions::default())
}

pub fn compute_state_with(g: &BiColoredGraph, opts: StateOptions) -> Result<StateMap, StateError> {
    let pms = enumerate_with_cap(g, opts.matching_cap)?;
    state_from_matchings(g, &pms, opts.tolerance)
}

/// Group matchings by inherited coloring. Sums are accumulated in matching
/// order, which is deterministic.
pub fn state_from_matchings(
    g: &BiColoredGraph,
    pms: &[PerfectMatching],
    tolerance: f64,
) -> Result<StateMap, StateError> {
    let mut terms: BTreeMap<VertexColoring, Term> = BTreeMap::new();
    for (i, pm) in pms.iter().enumerate() {
        let c = inherited_coloring(g, pm)?;
        let t = terms.entry(c).or_insert(Term {
            weight: Complex64::new(0.0, 0.0),
            matchings: Vec::new(),
            cancelled: false,
        });
        t.weight += pm.weight;
        t.matchings.push(i);
    }
    for t in terms.values_mut() {
        t.cancelled = t.weight.norm() <= tolerance;
    }
    Ok(StateMap {
        n: g.n(),
        d: g.d(),
        palette: g.palette().to_vec(),
        tolerance,
        matching_count: pms.len(),
        terms,
    })
}

/// `w(c)` for a single coloring. Only edges whose endpoint colors agree with
/// `c` can contribute, so the enumeration runs on that subgraph.
pub fn weight_of_coloring(g: &BiColoredGraph, c: &VertexColoring) -> Result<Complex64, StateError> {
    c.check(g.n(), g.d())?;
    let specs: Vec<_> = g
        .specs()
        .into_iter()
        .filter(|s| c.0[s.u] == s.color_at_u && c.0[s.v] == s.color_at_v)
        .collect();
    let sub = BiColoredGraph::with_palette(g.n(), g.palette().to_vec(), &specs)?;
    let pms = enumerate_with_cap(&sub, DEFAULT_MATCHING_CAP)?;
    Ok(pms.iter().map(|pm| pm.weight).sum())
}

//! Edge bi-colored weighted multigraphs.
//!
//! A graph has a fixed vertex ordering `0..n`, an explicitly declared palette
//! of `d >= 2` colors, and an ordered list of edges. Every edge carries a
//! complex weight and one color per endpoint; the pair `(color_at_u,
//! color_at_v)` is stored with `u < v`. Parallel edges, including exact
//! duplicates, are kept as distinct edges.

use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

/// Default tolerance for all zero tests on complex weights.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("edge {index} is a loop on vertex {vertex}")]
    LoopEdge { index: usize, vertex: usize },
    #[error("edge {index} uses color {color}, palette has {d} colors")]
    ColorOutOfPalette { index: usize, color: usize, d: usize },
    #[error("edge {index} touches vertex {vertex}, graph has {n} vertices")]
    VertexOutOfRange { index: usize, vertex: usize, n: usize },
    #[error("graph needs at least one vertex")]
    NoVertices,
    #[error("palette needs at least 2 colors, got {0}")]
    PaletteTooSmall(usize),
    #[error("palette has {0} colors, at most 256 are supported")]
    PaletteTooLarge(usize),
    #[error("duplicate palette label {0:?}")]
    DuplicateLabel(String),
    #[error("alternating cycle needs an even vertex count >= 4, got {0}")]
    OddN(usize),
    #[error("palettes differ ({0} vs {1} colors)")]
    PaletteMismatch(usize, usize),
    #[error("color permutation has length {got}, palette has {d} colors")]
    BadPermutation { got: usize, d: usize },
    #[error("weight vector has {got} entries, graph has {edges} edges")]
    WeightCount { got: usize, edges: usize },
}

/// Index into the owning graph's palette.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Color(pub u8);

impl Color {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for Color {
    fn from(i: usize) -> Self {
        Color(u8::try_from(i).expect("color index exceeds 255"))
    }
}

/// Position of an edge in the graph's edge list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub id: EdgeId,
    pub u: usize,
    pub v: usize,
    pub color_at_u: Color,
    pub color_at_v: Color,
    pub weight: Complex64,
}

impl Edge {
    pub fn is_monochromatic(&self) -> bool {
        self.color_at_u == self.color_at_v
    }

    /// Color of this edge at `vertex`, if it is an endpoint.
    pub fn color_at(&self, vertex: usize) -> Option<Color> {
        if vertex == self.u {
            Some(self.color_at_u)
        } else if vertex == self.v {
            Some(self.color_at_v)
        } else {
            None
        }
    }

    pub fn other(&self, vertex: usize) -> usize {
        if vertex == self.u {
            self.v
        } else {
            self.u
        }
    }
}

/// Unvalidated edge description; `u > v` is accepted and normalized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeSpec {
    pub u: usize,
    pub v: usize,
    pub color_at_u: Color,
    pub color_at_v: Color,
    pub weight: Complex64,
}

impl EdgeSpec {
    pub fn new(u: usize, v: usize, cu: usize, cv: usize, weight: impl Into<Complex64>) -> Self {
        Self {
            u,
            v,
            color_at_u: Color::from(cu),
            color_at_v: Color::from(cv),
            weight: weight.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiColoredGraph {
    n: usize,
    palette: Vec<String>,
    edges: Vec<Edge>,
}

/// Labels used when a palette is declared only by its size.
pub fn default_palette(d: usize) -> Vec<String> {
    const NAMES: [&str; 8] = ["r", "g", "b", "y", "m", "c", "k", "w"];
    (0..d)
        .map(|i| match NAMES.get(i) {
            Some(s) if d <= NAMES.len() => s.to_string(),
            _ => format!("c{i}"),
        })
        .collect()
}

/// Build a validated graph with the default palette labels.
pub fn build_graph(n: usize, d: usize, specs: &[EdgeSpec]) -> Result<BiColoredGraph, GraphError> {
    BiColoredGraph::with_palette(n, default_palette(d), specs)
}

impl BiColoredGraph {
    pub fn with_palette(
        n: usize,
        palette: Vec<String>,
        specs: &[EdgeSpec],
    ) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::NoVertices);
        }
        let d = palette.len();
        if d < 2 {
            return Err(GraphError::PaletteTooSmall(d));
        }
        if d > 256 {
            return Err(GraphError::PaletteTooLarge(d));
        }
        for (i, label) in palette.iter().enumerate() {
            if palette[..i].contains(label) {
                return Err(GraphError::DuplicateLabel(label.clone()));
            }
        }
        let mut edges = Vec::with_capacity(specs.len());
        for (index, s) in specs.iter().enumerate() {
            for vertex in [s.u, s.v] {
                if vertex >= n {
                    return Err(GraphError::VertexOutOfRange { index, vertex, n });
                }
            }
            if s.u == s.v {
                return Err(GraphError::LoopEdge { index, vertex: s.u });
            }
            for color in [s.color_at_u, s.color_at_v] {
                if color.index() >= d {
                    return Err(GraphError::ColorOutOfPalette {
                        index,
                        color: color.index(),
                        d,
                    });
                }
            }
            let (u, v, cu, cv) = if s.u < s.v {
                (s.u, s.v, s.color_at_u, s.color_at_v)
            } else {
                (s.v, s.u, s.color_at_v, s.color_at_u)
            };
            edges.push(Edge {
                id: EdgeId(index),
                u,
                v,
                color_at_u: cu,
                color_at_v: cv,
                weight: s.weight,
            });
        }
        Ok(Self { n, palette, edges })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.palette.len()
    }

    pub fn palette(&self) -> &[String] {
        &self.palette
    }

    pub fn label(&self, c: Color) -> &str {
        &self.palette[c.index()]
    }

    pub fn color_by_label(&self, label: &str) -> Option<Color> {
        self.palette.iter().position(|l| l == label).map(Color::from)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id.0]
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn specs(&self) -> Vec<EdgeSpec> {
        self.edges
            .iter()
            .map(|e| EdgeSpec {
                u: e.u,
                v: e.v,
                color_at_u: e.color_at_u,
                color_at_v: e.color_at_v,
                weight: e.weight,
            })
            .collect()
    }

    pub fn weights(&self) -> Vec<Complex64> {
        self.edges.iter().map(|e| e.weight).collect()
    }

    /// Same topology and colors with new edge weights.
    pub fn with_weights(&self, weights: &[Complex64]) -> Result<Self, GraphError> {
        if weights.len() != self.edges.len() {
            return Err(GraphError::WeightCount {
                got: weights.len(),
                edges: self.edges.len(),
            });
        }
        let mut g = self.clone();
        for (e, &w) in g.edges.iter_mut().zip(weights) {
            e.weight = w;
        }
        Ok(g)
    }

    /// Multiply every edge weight by `factor`.
    pub fn scaled(&self, factor: Complex64) -> Self {
        let mut g = self.clone();
        for e in &mut g.edges {
            e.weight *= factor;
        }
        g
    }

    /// Apply a palette permutation to every edge color: color `c` becomes `perm[c]`.
    pub fn permute_colors(&self, perm: &[usize]) -> Result<Self, GraphError> {
        let d = self.d();
        let mut seen = vec![false; d];
        if perm.len() != d || perm.iter().any(|&p| p >= d || std::mem::replace(&mut seen[p], true)) {
            return Err(GraphError::BadPermutation { got: perm.len(), d });
        }
        let mut g = self.clone();
        for e in &mut g.edges {
            e.color_at_u = Color::from(perm[e.color_at_u.index()]);
            e.color_at_v = Color::from(perm[e.color_at_v.index()]);
        }
        Ok(g)
    }

    /// Vertex-disjoint union; `other`'s vertices are shifted by `self.n()`
    /// and its edge ids follow `self`'s.
    pub fn disjoint_union(&self, other: &Self) -> Result<Self, GraphError> {
        if self.d() != other.d() {
            return Err(GraphError::PaletteMismatch(self.d(), other.d()));
        }
        let mut specs = self.specs();
        specs.extend(other.specs().into_iter().map(|mut s| {
            s.u += self.n;
            s.v += self.n;
            s
        }));
        Self::with_palette(self.n + other.n, self.palette.clone(), &specs)
    }

    /// Edges incident to each vertex, in edge-id order.
    pub fn incidence(&self) -> Vec<Vec<EdgeId>> {
        let mut inc = vec![Vec::new(); self.n];
        for e in &self.edges {
            inc[e.u].push(e.id);
            inc[e.v].push(e.id);
        }
        inc
    }
}

impl fmt::Display for BiColoredGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "n={} d={} edges={}", self.n, self.d(), self.edges.len())?;
        for e in &self.edges {
            writeln!(
                f,
                "  {}-{} ({},{}) {}{:+}i",
                e.u,
                e.v,
                self.label(e.color_at_u),
                self.label(e.color_at_v),
                e.weight.re,
                e.weight.im
            )?;
        }
        Ok(())
    }
}

/// Even cycle `0-1-...-(n-1)-0` whose edges alternate between two
/// monochromatic colors, all weights 1. Palette size is `d`.
pub fn alternating_cycle(n: usize, colors: (Color, Color), d: usize) -> Result<BiColoredGraph, GraphError> {
    if n % 2 == 1 || n < 4 {
        return Err(GraphError::OddN(n));
    }
    let specs: Vec<EdgeSpec> = (0..n)
        .map(|i| {
            let c = if i % 2 == 0 { colors.0 } else { colors.1 };
            EdgeSpec {
                u: i,
                v: (i + 1) % n,
                color_at_u: c,
                color_at_v: c,
                weight: Complex64::new(1.0, 0.0),
            }
        })
        .collect();
    build_graph(n, d, &specs)
}

/// K4 split into its three perfect matchings `{01,23}`, `{02,13}`, `{03,12}`,
/// monochromatic in colors 0, 1, 2; unit weights.
pub fn k4_ghz() -> BiColoredGraph {
    let specs = [
        EdgeSpec::new(0, 1, 0, 0, 1.0),
        EdgeSpec::new(2, 3, 0, 0, 1.0),
        EdgeSpec::new(0, 2, 1, 1, 1.0),
        EdgeSpec::new(1, 3, 1, 1, 1.0),
        EdgeSpec::new(0, 3, 2, 2, 1.0),
        EdgeSpec::new(1, 2, 2, 2, 1.0),
    ];
    build_graph(4, 3, &specs).expect("static K4 construction is valid")
}

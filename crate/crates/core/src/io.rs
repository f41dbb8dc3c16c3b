//! File formats and reports.
//!
//! Graph files are JSON documents:
//!
//! ```json
//! {
//!   "n": 4,
//!   "palette": ["r", "g", "b"],
//!   "edges": [
//!     [1, 2, "r", "r", 1.0, 0.0]
//!   ]
//! }
//! ```
//!
//! Each edge record is `[u, v, color_at_u, color_at_v, re, im]` with 1-based
//! vertices and colors given by palette label. `d` is the palette length even
//! when some label is unused. Target files carry `colorings` (label
//! sequences), `weights` (`[re, im]` pairs) and `mode` (`"conjugated"` or
//! `"literal"`).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fidelity::{ConjugationMode, FidelityKind, FidelityReport, TargetSpec, Verification};
use crate::graph::{alternating_cycle, k4_ghz, BiColoredGraph, Color, EdgeSpec, GraphError};
use crate::optimizer::{SearchResult, TracePoint};
use crate::state::{StateMap, VertexColoring};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid document: {0}")]
    Validation(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<GraphError> for IoError {
    fn from(e: GraphError) -> Self {
        IoError::Validation(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord(pub usize, pub usize, pub String, pub String, pub f64, pub f64);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphDocument {
    pub n: usize,
    pub palette: Vec<String>,
    pub edges: Vec<EdgeRecord>,
}

impl GraphDocument {
    pub fn from_graph(g: &BiColoredGraph) -> Self {
        Self {
            n: g.n(),
            palette: g.palette().to_vec(),
            edges: g
                .edges()
                .iter()
                .map(|e| {
                    EdgeRecord(
                        e.u + 1,
                        e.v + 1,
                        g.label(e.color_at_u).to_string(),
                        g.label(e.color_at_v).to_string(),
                        e.weight.re,
                        e.weight.im,
                    )
                })
                .collect(),
        }
    }

    pub fn to_graph(&self) -> Result<BiColoredGraph, IoError> {
        let lookup = |label: &str, index: usize| -> Result<Color, IoError> {
            self.palette.iter().position(|l| l == label).map(Color::from).ok_or_else(|| {
                IoError::Parse(format!("edge record {}: unknown color label {label:?}", index + 1))
            })
        };
        let mut specs = Vec::with_capacity(self.edges.len());
        for (i, EdgeRecord(u, v, cu, cv, re, im)) in self.edges.iter().enumerate() {
            if *u == 0 || *v == 0 {
                return Err(IoError::Parse(format!("edge record {}: vertices are 1-based", i + 1)));
            }
            if !re.is_finite() || !im.is_finite() {
                return Err(IoError::Parse(format!("edge record {}: non-finite weight", i + 1)));
            }
            specs.push(EdgeSpec {
                u: u - 1,
                v: v - 1,
                color_at_u: lookup(cu, i)?,
                color_at_v: lookup(cv, i)?,
                weight: Complex64::new(*re, *im),
            });
        }
        Ok(BiColoredGraph::with_palette(self.n, self.palette.clone(), &specs)?)
    }
}

pub fn parse_graph(text: &str) -> Result<BiColoredGraph, IoError> {
    let doc: GraphDocument = serde_json::from_str(text).map_err(|e| IoError::Parse(e.to_string()))?;
    doc.to_graph()
}

/// Graph document with one edge record per line.
pub fn write_graph(g: &BiColoredGraph) -> String {
    let doc = GraphDocument::from_graph(g);
    let mut s = String::from("{\n");
    s += &format!("  \"n\": {},\n", doc.n);
    s += &format!("  \"palette\": {},\n", serde_json::to_string(&doc.palette).expect("labels serialize"));
    s += "  \"edges\": [";
    for (i, e) in doc.edges.iter().enumerate() {
        s += if i == 0 { "\n    " } else { ",\n    " };
        s += &serde_json::to_string(e).expect("edge records serialize");
    }
    s += if doc.edges.is_empty() { "]\n" } else { "\n  ]\n" };
    s += "}\n";
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetDocument {
    pub colorings: Vec<Vec<String>>,
    pub weights: Vec<[f64; 2]>,
    #[serde(default)]
    pub mode: ConjugationMode,
}

impl TargetDocument {
    pub fn from_target(t: &TargetSpec, palette: &[String]) -> Self {
        Self {
            colorings: t
                .colorings()
                .iter()
                .map(|c| c.labels(palette).into_iter().map(String::from).collect())
                .collect(),
            weights: t.weights().iter().map(|w| [w.re, w.im]).collect(),
            mode: t.mode,
        }
    }

    pub fn to_target(&self, palette: &[String]) -> Result<TargetSpec, IoError> {
        let mut colorings = Vec::with_capacity(self.colorings.len());
        for (i, labels) in self.colorings.iter().enumerate() {
            let colors = labels
                .iter()
                .map(|l| {
                    palette.iter().position(|p| p == l).map(Color::from).ok_or_else(|| {
                        IoError::Parse(format!("target coloring {}: unknown color label {l:?}", i + 1))
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            colorings.push(VertexColoring(colors));
        }
        let weights = self.weights.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
        TargetSpec::new(colorings, weights, self.mode).map_err(|e| IoError::Validation(e.to_string()))
    }
}

pub fn parse_target(text: &str, palette: &[String]) -> Result<TargetSpec, IoError> {
    let doc: TargetDocument = serde_json::from_str(text).map_err(|e| IoError::Parse(e.to_string()))?;
    doc.to_target(palette)
}

pub fn write_target(t: &TargetSpec, palette: &[String]) -> String {
    let doc = TargetDocument::from_target(t, palette);
    let mut s = String::from("{\n  \"colorings\": [");
    for (i, c) in doc.colorings.iter().enumerate() {
        s += if i == 0 { "\n    " } else { ",\n    " };
        s += &serde_json::to_string(c).expect("labels serialize");
    }
    s += "\n  ],\n  \"weights\": ";
    s += &serde_json::to_string(&doc.weights).expect("weights serialize");
    s += &format!(",\n  \"mode\": \"{}\"\n}}\n", doc.mode);
    s
}

/// `x` with `sig` significant digits, fixed notation for moderate magnitudes.
pub fn fmt_num(x: f64, sig: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-5..=15).contains(&mag) {
        return format!("{:.*e}", sig.saturating_sub(1), x);
    }
    let decimals = (sig as i32 - 1 - mag).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        let t = s.trim_end_matches('0').trim_end_matches('.');
        if t == "-0" { "0".into() } else { t.to_string() }
    } else {
        s
    }
}

fn fmt_complex(w: Complex64, sig: usize) -> String {
    format!("{}{}{}i", fmt_num(w.re, sig), if w.im < 0.0 { "-" } else { "+" }, fmt_num(w.im.abs(), sig))
}

fn coloring_labels(c: &VertexColoring, palette: &[String]) -> String {
    c.labels(palette).join(" ")
}

/// One line per coloring: labels, re, im, matching count, cancelled flag.
pub fn state_report(s: &StateMap, sig: usize) -> String {
    let mut out = String::new();
    out += &format!("# matchings {}\n", s.matching_count);
    out += &format!(
        "# terms {} surviving {} cancelled {}\n",
        s.terms.len(),
        s.surviving_count(),
        s.cancelled_count()
    );
    out += &format!("# N {}\n", fmt_num(s.norm_sqr(), sig));
    out += &format!("# tolerance {:e}\n", s.tolerance);
    out += "# coloring\tre\tim\tmatchings\tcancelled\n";
    for (c, t) in &s.terms {
        out += &format!(
            "{}\t{}\t{}\t{}\t{}\n",
            coloring_labels(c, &s.palette),
            fmt_num(t.weight.re, sig),
            fmt_num(t.weight.im, sig),
            t.matchings.len(),
            t.cancelled
        );
    }
    out
}

#[derive(Debug, Serialize)]
pub struct StateTermJson {
    pub coloring: Vec<String>,
    pub re: f64,
    pub im: f64,
    pub matchings: usize,
    pub cancelled: bool,
}

#[derive(Debug, Serialize)]
pub struct StateJson {
    pub n: usize,
    pub d: usize,
    pub matchings: usize,
    pub norm: f64,
    pub tolerance: f64,
    pub terms: Vec<StateTermJson>,
}

pub fn state_json(s: &StateMap) -> String {
    let doc = StateJson {
        n: s.n,
        d: s.d,
        matchings: s.matching_count,
        norm: s.norm_sqr(),
        tolerance: s.tolerance,
        terms: s
            .terms
            .iter()
            .map(|(c, t)| StateTermJson {
                coloring: c.labels(&s.palette).into_iter().map(String::from).collect(),
                re: t.weight.re,
                im: t.weight.im,
                matchings: t.matchings.len(),
                cancelled: t.cancelled,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("report serializes")
}

#[derive(Debug, Serialize)]
pub struct FidelityJson {
    pub kind: &'static str,
    pub value: f64,
    pub d: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub red: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<ConjugationMode>,
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub norm: Option<f64>,
    #[serde(rename = "N1", skip_serializing_if = "Option::is_none")]
    pub n1: Option<f64>,
    #[serde(rename = "N2", skip_serializing_if = "Option::is_none")]
    pub n2: Option<f64>,
    pub overlap: [f64; 2],
    pub tolerance: f64,
    pub matched_terms: Vec<StateTermJson>,
}

pub fn fidelity_json(r: &FidelityReport, palette: &[String]) -> String {
    let (kind, k, red, mode) = match r.kind {
        FidelityKind::Monochromatic => ("monochromatic", None, None, None),
        FidelityKind::KMonochromatic { k, red } => {
            ("k-monochromatic", Some(k), Some(palette[red.index()].clone()), None)
        }
        FidelityKind::General { mode } => ("general", None, None, Some(mode)),
    };
    let general = r.target_norm.is_some();
    let doc = FidelityJson {
        kind,
        value: r.value,
        d: r.d,
        k,
        red,
        mode,
        norm: (!general).then_some(r.state_norm),
        n1: r.target_norm,
        n2: general.then_some(r.state_norm),
        overlap: [r.overlap.re, r.overlap.im],
        tolerance: r.tolerance,
        matched_terms: r
            .matched_terms
            .iter()
            .map(|(c, w)| StateTermJson {
                coloring: c.labels(palette).into_iter().map(String::from).collect(),
                re: w.re,
                im: w.im,
                matchings: 0,
                cancelled: w.norm() <= r.tolerance,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("report serializes")
}

pub fn fidelity_report(r: &FidelityReport, palette: &[String], sig: usize) -> String {
    let mut out = String::new();
    match r.kind {
        FidelityKind::Monochromatic => {
            out += &format!("F_mono {}\n", fmt_num(r.value, sig));
            out += &format!("d {}\nN {}\n", r.d, fmt_num(r.state_norm, sig));
        }
        FidelityKind::KMonochromatic { k, red } => {
            out += &format!("F_kmono {}\n", fmt_num(r.value, sig));
            out += &format!("d {}\nk {}\nred {}\nN {}\n", r.d, k, palette[red.index()], fmt_num(r.state_norm, sig));
        }
        FidelityKind::General { mode } => {
            out += &format!("F_general {}\n", fmt_num(r.value, sig));
            out += &format!(
                "mode {}\nd {}\nN1 {}\nN2 {}\n",
                mode,
                r.d,
                fmt_num(r.target_norm.unwrap_or(0.0), sig),
                fmt_num(r.state_norm, sig)
            );
        }
    }
    out += &format!("overlap {}\n", fmt_complex(r.overlap, sig));
    out += &format!("tolerance {:e}\n", r.tolerance);
    for (c, w) in &r.matched_terms {
        out += &format!("  {}\t{}\n", coloring_labels(c, palette), fmt_complex(*w, sig));
    }
    out
}

pub fn verification_report(v: &Verification, palette: &[String], sig: usize) -> String {
    let mut out = format!("{} (tolerance {:e})\n", if v.passed { "PASS" } else { "FAIL" }, v.tolerance);
    for x in &v.violations {
        out += &format!(
            "  {}\tgot {}\texpected {}\n",
            coloring_labels(&x.coloring, palette),
            fmt_complex(x.weight, sig),
            fmt_complex(x.expected, sig)
        );
    }
    out
}

pub fn search_report(r: &SearchResult, sig: usize) -> String {
    format!(
        "fidelity {}\nexact {}\nrestarts {}\nevaluations {}\nseed {}\nedges {}\n",
        fmt_num(r.fidelity, sig),
        r.exact,
        r.restarts_used,
        r.evaluations,
        r.seed,
        r.graph.edge_count()
    )
}

/// Plain-text optimization trace: `restart iter value` per line.
pub fn trace_text(trace: &[TracePoint]) -> String {
    trace.iter().map(|p| format!("{} {} {:e}\n", p.restart, p.iter, p.value)).collect()
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Graphviz source. Edge attributes `cu`, `cv`, `re`, `im` carry the full
/// edge data, so [`parse_dot`] recovers the graph exactly.
pub fn to_dot(g: &BiColoredGraph) -> String {
    let mut out = String::from("graph bicolored {\n");
    out += &format!("  n=\"{}\";\n", g.n());
    let palette = serde_json::to_string(g.palette()).expect("labels serialize");
    out += &format!("  palette=\"{}\";\n", dot_escape(&palette));
    out += "  node [shape=circle];\n";
    for v in 1..=g.n() {
        out += &format!("  {v};\n");
    }
    for e in g.edges() {
        let (cu, cv) = (g.label(e.color_at_u), g.label(e.color_at_v));
        out += &format!(
            "  {} -- {} [taillabel=\"{}\", headlabel=\"{}\", label=\"{}\", cu=\"{}\", cv=\"{}\", re=\"{}\", im=\"{}\"];\n",
            e.u + 1,
            e.v + 1,
            dot_escape(cu),
            dot_escape(cv),
            fmt_complex(e.weight, 6),
            dot_escape(cu),
            dot_escape(cv),
            e.weight.re,
            e.weight.im
        );
    }
    out += "}\n";
    out
}

/// Read back the output of [`to_dot`].
pub fn parse_dot(text: &str) -> Result<BiColoredGraph, IoError> {
    let mut n = None;
    let mut palette: Option<Vec<String>> = None;
    let mut records = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim().trim_end_matches(';');
        let err = |m: &str| IoError::Parse(format!("line {}: {m}", lineno + 1));
        if let Some(rest) = line.strip_prefix("n=") {
            n = Some(unquote(rest).ok_or_else(|| err("bad n"))?.parse().map_err(|_| err("bad n"))?);
        } else if let Some(rest) = line.strip_prefix("palette=") {
            let json = unquote(rest).ok_or_else(|| err("bad palette"))?;
            palette = Some(serde_json::from_str(&json).map_err(|e| err(&e.to_string()))?);
        } else if let Some((ends, attrs)) = line.split_once('[') {
            let Some((a, b)) = ends.split_once("--") else { continue };
            let u: usize = a.trim().parse().map_err(|_| err("bad vertex"))?;
            let v: usize = b.trim().parse().map_err(|_| err("bad vertex"))?;
            let attrs = parse_attrs(attrs.trim_end_matches(']')).ok_or_else(|| err("bad attributes"))?;
            let get = |k: &str| attrs.iter().find(|(a, _)| a == k).map(|(_, v)| v.clone()).ok_or_else(|| err(k));
            let num = |k: &str| get(k)?.parse::<f64>().map_err(|_| err(k));
            records.push(EdgeRecord(u, v, get("cu")?, get("cv")?, num("re")?, num("im")?));
        }
    }
    let doc = GraphDocument {
        n: n.ok_or_else(|| IoError::Parse("missing n".into()))?,
        palette: palette.ok_or_else(|| IoError::Parse("missing palette".into()))?,
        edges: records,
    };
    doc.to_graph()
}

fn unquote(s: &str) -> Option<String> {
    let s = s.trim();
    let inner = s.strip_prefix('"')?.strip_suffix('"')?;
    let mut out = String::new();
    let mut chars = inner.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            out.push(chars.next()?);
        } else {
            out.push(c);
        }
    }
    Some(out)
}

fn parse_attrs(s: &str) -> Option<Vec<(String, String)>> {
    let mut out = Vec::new();
    let mut chars = s.chars().peekable();
    loop {
        while matches!(chars.peek(), Some(c) if c.is_whitespace() || *c == ',') {
            chars.next();
        }
        if chars.peek().is_none() {
            return Some(out);
        }
        let key: String = std::iter::from_fn(|| chars.next_if(|c| *c != '=')).collect();
        chars.next()?; // '='
        if chars.next()? != '"' {
            return None;
        }
        let mut val = String::new();
        loop {
            match chars.next()? {
                '\\' => val.push(chars.next()?),
                '"' => break,
                c => val.push(c),
            }
        }
        out.push((key.trim().to_string(), val));
    }
}

/// Named graphs shipped with the tool: `k4` and `cycle4` ... `cycle10`.
pub fn catalog_graph(name: &str) -> Option<BiColoredGraph> {
    match name {
        "k4" => Some(k4_ghz()),
        _ => {
            let n: usize = name.strip_prefix("cycle")?.parse().ok()?;
            alternating_cycle(n, (Color(0), Color(1)), 2).ok()
        }
    }
}

/// Four-vertex two-color target with one `g` vertex per coloring and
/// weights `(1, 1, 2, i)`, over the palette `["r", "g"]`.
pub fn w_state_target() -> TargetSpec {
    let (r, g) = (0, 1);
    let colorings = vec![
        VertexColoring::from_indices(&[g, r, r, r]),
        VertexColoring::from_indices(&[r, g, r, r]),
        VertexColoring::from_indices(&[r, r, g, r]),
        VertexColoring::from_indices(&[r, r, r, g]),
    ];
    let weights = vec![
        Complex64::new(1.0, 0.0),
        Complex64::new(1.0, 0.0),
        Complex64::new(2.0, 0.0),
        Complex64::new(0.0, 1.0),
    ];
    TargetSpec::new(colorings, weights, ConjugationMode::Conjugated).expect("static target is valid")
}

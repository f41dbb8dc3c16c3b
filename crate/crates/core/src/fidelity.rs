//! Fidelity functionals on states and the exact predicates behind them.
//!
//! All three fidelities have the form `|<a, w>|^2 / (K * N)` where `w` is the
//! state's coloring weights, `a` selects the target colorings, `N = sum |w(c)|^2`
//! and `K` is `d` (monochromatic / k-monochromatic) or `sum |w_i|^2` (general).

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Color;
use crate::state::{StateMap, VertexColoring};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FidelityError {
    #[error("fidelity undefined: the state has no surviving coloring (N = 0)")]
    UndefinedFidelity,
    #[error("target coloring {index} has length {got}, state has {n} vertices")]
    LengthMismatch { index: usize, got: usize, n: usize },
    #[error("k = {k} out of range 1..={n}")]
    BadK { k: usize, n: usize },
    #[error("color {color} not in palette of size {d}")]
    BadColor { color: usize, d: usize },
    #[error("invalid target: {0}")]
    InvalidTarget(String),
}

/// How prescribed weights enter the general overlap `sum_i w_i * w(C_i)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConjugationMode {
    /// `conj(w_i) * w(C_i)`: an exact realization scores 1.
    #[default]
    Conjugated,
    /// `w_i * w(C_i)` as printed, without conjugation.
    Literal,
}

impl fmt::Display for ConjugationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Conjugated => "conjugated",
            Self::Literal => "literal",
        })
    }
}

/// Prescribed colorings with prescribed complex weights.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetSpec {
    colorings: Vec<VertexColoring>,
    weights: Vec<Complex64>,
    pub mode: ConjugationMode,
}

impl TargetSpec {
    pub fn new(
        colorings: Vec<VertexColoring>,
        weights: Vec<Complex64>,
        mode: ConjugationMode,
    ) -> Result<Self, FidelityError> {
        if colorings.is_empty() {
            return Err(FidelityError::InvalidTarget("no colorings".into()));
        }
        if colorings.len() != weights.len() {
            return Err(FidelityError::InvalidTarget(format!(
                "{} colorings but {} weights",
                colorings.len(),
                weights.len()
            )));
        }
        let n = colorings[0].len();
        for (i, c) in colorings.iter().enumerate() {
            if c.len() != n {
                return Err(FidelityError::LengthMismatch { index: i, got: c.len(), n });
            }
            if colorings[..i].contains(c) {
                return Err(FidelityError::InvalidTarget(format!("coloring {i} repeats {c}")));
            }
        }
        if weights.iter().all(|w| w.norm_sqr() == 0.0) {
            return Err(FidelityError::InvalidTarget("all weights are zero".into()));
        }
        Ok(Self { colorings, weights, mode })
    }

    pub fn colorings(&self) -> &[VertexColoring] {
        &self.colorings
    }

    pub fn weights(&self) -> &[Complex64] {
        &self.weights
    }

    pub fn n(&self) -> usize {
        self.colorings[0].len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.weights.iter().map(|w| w.norm_sqr()).sum()
    }

    /// Overlap coefficients per coloring under the configured mode.
    pub fn coefficients(&self) -> impl Iterator<Item = (&VertexColoring, Complex64)> {
        self.colorings.iter().zip(&self.weights).map(move |(c, &w)| {
            let a = match self.mode {
                ConjugationMode::Conjugated => w.conj(),
                ConjugationMode::Literal => w,
            };
            (c, a)
        })
    }

    pub fn with_mode(&self, mode: ConjugationMode) -> Self {
        Self { mode, ..self.clone() }
    }

    fn check_against(&self, s: &StateMap) -> Result<(), FidelityError> {
        for (index, c) in self.colorings.iter().enumerate() {
            if c.len() != s.n {
                return Err(FidelityError::LengthMismatch { index, got: c.len(), n: s.n });
            }
            if let Some(bad) = c.colors().iter().find(|x| x.index() >= s.d) {
                return Err(FidelityError::BadColor { color: bad.index(), d: s.d });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FidelityKind {
    Monochromatic,
    KMonochromatic { k: usize, red: Color },
    General { mode: ConjugationMode },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FidelityReport {
    pub kind: FidelityKind,
    pub value: f64,
    pub d: usize,
    /// `N` (or `N2` for the general fidelity).
    pub state_norm: f64,
    /// `N1`; only for the general fidelity.
    pub target_norm: Option<f64>,
    /// `sum_c a_c w(c)` before taking the modulus.
    pub overlap: Complex64,
    /// Achieved weight of every coloring in the target family.
    pub matched_terms: Vec<(VertexColoring, Complex64)>,
    pub tolerance: f64,
}

/// The `d` monochromatic colorings of `n` vertices.
pub fn monochromatic_colorings(n: usize, d: usize) -> Vec<VertexColoring> {
    (0..d).map(|c| VertexColoring::monochromatic(n, Color::from(c))).collect()
}

/// The `d` colorings whose first `k` vertices share a color and whose
/// remaining vertices are `red`.
pub fn k_monochromatic_colorings(n: usize, d: usize, k: usize, red: Color) -> Vec<VertexColoring> {
    (0..d)
        .map(|c| {
            let mut v = vec![Color::from(c); k];
            v.resize(n, red);
            VertexColoring(v)
        })
        .collect()
}

pub fn is_k_monochromatic_coloring(c: &VertexColoring, k: usize, red: Color) -> bool {
    let colors = c.colors();
    if k == 0 || k > colors.len() {
        return false;
    }
    colors[..k].iter().all(|&x| x == colors[0]) && colors[k..].iter().all(|&x| x == red)
}

fn overlap_fidelity(
    s: &StateMap,
    kind: FidelityKind,
    family: Vec<(VertexColoring, Complex64)>,
    k_norm: f64,
) -> Result<FidelityReport, FidelityError> {
    if s.surviving_count() == 0 {
        return Err(FidelityError::UndefinedFidelity);
    }
    let n_state = s.norm_sqr();
    let mut overlap = Complex64::new(0.0, 0.0);
    let mut matched = Vec::with_capacity(family.len());
    for (c, a) in family {
        let w = s.weight(&c);
        overlap += a * w;
        matched.push((c, w));
    }
    let value = (overlap.norm_sqr() / (k_norm * n_state)).clamp(0.0, 1.0);
    Ok(FidelityReport {
        kind,
        value,
        d: s.d,
        state_norm: n_state,
        target_norm: match kind {
            FidelityKind::General { .. } => Some(k_norm),
            _ => None,
        },
        overlap,
        matched_terms: matched,
        tolerance: s.tolerance,
    })
}

pub fn monochromatic_fidelity(s: &StateMap) -> Result<FidelityReport, FidelityError> {
    let family = monochromatic_colorings(s.n, s.d)
        .into_iter()
        .map(|c| (c, Complex64::new(1.0, 0.0)))
        .collect();
    overlap_fidelity(s, FidelityKind::Monochromatic, family, s.d as f64)
}

fn check_k(s: &StateMap, k: usize, red: Color) -> Result<(), FidelityError> {
    if k == 0 || k > s.n {
        return Err(FidelityError::BadK { k, n: s.n });
    }
    if red.index() >= s.d {
        return Err(FidelityError::BadColor { color: red.index(), d: s.d });
    }
    Ok(())
}

pub fn k_monochromatic_fidelity(s: &StateMap, k: usize, red: Color) -> Result<FidelityReport, FidelityError> {
    check_k(s, k, red)?;
    let family = k_monochromatic_colorings(s.n, s.d, k, red)
        .into_iter()
        .map(|c| (c, Complex64::new(1.0, 0.0)))
        .collect();
    overlap_fidelity(s, FidelityKind::KMonochromatic { k, red }, family, s.d as f64)
}

pub fn general_fidelity(s: &StateMap, t: &TargetSpec) -> Result<FidelityReport, FidelityError> {
    t.check_against(s)?;
    let family = t.coefficients().map(|(c, a)| (c.clone(), a)).collect();
    overlap_fidelity(s, FidelityKind::General { mode: t.mode }, family, t.norm_sqr())
}

/// A coloring whose weight differs from what the predicate requires.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub coloring: VertexColoring,
    pub weight: Complex64,
    pub expected: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verification {
    pub passed: bool,
    pub tolerance: f64,
    pub violations: Vec<Violation>,
}

/// Every coloring in `expected` must carry its weight within `tol`, every
/// other term of `s` must vanish within `tol`.
pub fn check_expected(s: &StateMap, expected: &BTreeMap<VertexColoring, Complex64>, tol: f64) -> Verification {
    let mut violations = Vec::new();
    for (c, &e) in expected {
        let w = s.weight(c);
        if (w - e).norm() > tol {
            violations.push(Violation { coloring: c.clone(), weight: w, expected: e });
        }
    }
    for (c, t) in &s.terms {
        if !expected.contains_key(c) && t.weight.norm() > tol {
            violations.push(Violation {
                coloring: c.clone(),
                weight: t.weight,
                expected: Complex64::new(0.0, 0.0),
            });
        }
    }
    Verification { passed: violations.is_empty(), tolerance: tol, violations }
}

fn unit_family(cs: Vec<VertexColoring>) -> BTreeMap<VertexColoring, Complex64> {
    cs.into_iter().map(|c| (c, Complex64::new(1.0, 0.0))).collect()
}

pub fn check_monochromatic(s: &StateMap, tol: f64) -> Verification {
    check_expected(s, &unit_family(monochromatic_colorings(s.n, s.d)), tol)
}

pub fn check_k_monochromatic(s: &StateMap, k: usize, red: Color, tol: f64) -> Result<Verification, FidelityError> {
    check_k(s, k, red)?;
    Ok(check_expected(s, &unit_family(k_monochromatic_colorings(s.n, s.d, k, red)), tol))
}

pub fn check_target(s: &StateMap, t: &TargetSpec, tol: f64) -> Result<Verification, FidelityError> {
    t.check_against(s)?;
    let expected = t.colorings.iter().cloned().zip(t.weights.iter().copied()).collect();
    Ok(check_expected(s, &expected, tol))
}

pub fn verify_monochromatic(s: &StateMap, tol: f64) -> bool {
    check_monochromatic(s, tol).passed
}

pub fn verify_k_monochromatic(s: &StateMap, k: usize, red: Color, tol: f64) -> Result<bool, FidelityError> {
    Ok(check_k_monochromatic(s, k, red, tol)?.passed)
}

pub fn verify_target(s: &StateMap, t: &TargetSpec, tol: f64) -> Result<bool, FidelityError> {
    Ok(check_target(s, t, tol)?.passed)
}

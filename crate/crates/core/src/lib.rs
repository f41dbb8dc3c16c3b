//! States of edge bi-colored weighted multigraphs.
//!
//! Every perfect matching of a bi-colored graph induces a vertex coloring; the
//! weights of all matchings with the same coloring add up, possibly to zero.
//! This crate enumerates matchings, builds the resulting state, scores it with
//! the monochromatic, k-monochromatic and general fidelities, and searches for
//! weights and topologies that maximize them.

pub mod fidelity;
pub mod graph;
pub mod io;
pub mod matching;
pub mod optimizer;
pub mod state;

pub use fidelity::{
    general_fidelity, is_k_monochromatic_coloring, k_monochromatic_fidelity, monochromatic_fidelity,
    verify_k_monochromatic, verify_monochromatic, verify_target, ConjugationMode, FidelityError,
    FidelityReport, TargetSpec,
};
pub use graph::{
    alternating_cycle, build_graph, k4_ghz, BiColoredGraph, Color, Edge, EdgeId, EdgeSpec, GraphError,
    DEFAULT_TOL,
};
pub use matching::{enumerate_perfect_matchings, oracle_enumerate, MatchingError, PerfectMatching};
pub use optimizer::{
    evaluate, gradient, optimize_weights, search_topologies, Constraint, Objective, ObjectiveKind,
    OptimizeConfig, OptimizeError, SearchBudget, SearchResult, Topology, WeightVector,
};
pub use state::{compute_state, inherited_coloring, weight_of_coloring, StateError, StateMap, VertexColoring};

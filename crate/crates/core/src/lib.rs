//! Engine for typed argumentation graphs.
//!
//! Claims carry qualitatively scored evidence and are linked by support and
//! attack edges. This crate holds the pure parts of the system: the graph
//! model and its invariants ([`graph`]), credibility propagation
//! ([`credibility`]), structural pattern critique ([`critique`]) and report
//! templating ([`report`]). It is `no_std` and needs only `alloc`.

#![no_std]

extern crate alloc;

pub mod credibility;
pub mod critique;
pub mod graph;
pub mod report;

pub use credibility::{
    compute_scores, edge_weight, evans_magnitude, evidence_score, node_preactivation, propagate, PropagationConfig,
    PropagationError, PropagationResult,
};
pub use critique::{detect_structural, Finding, FindingOrigin, Pattern, PatternBank, Severity};
pub use graph::{
    validate_graph, ArgumentGraph, ClaimNode, ClaimType, Edge, Evidence, GraphError, NewEdge, NewEvidence, Origin,
    Polarity, QualitativeStrength, Relation, Violation,
};
pub use report::{Assumption, Report, ReportInputs};

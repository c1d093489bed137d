//! Eight-section analysis report.
//!
//! Sections 2 to 7 are templated here from engine outputs; the executive
//! summary and recommendations are prose supplied by the caller (usually a
//! language model), with templated fallbacks in [`fallback_summary`] and
//! [`fallback_recommendations`].
//!
//! Numbers are written with `f64`'s `Display`, which prints the shortest
//! representation that parses back to the same value, so every figure in a
//! report reads back bit-identical to the engine output it came from.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::credibility::{edge_weight, evidence_score, PropagationResult};
use crate::critique::Finding;
use crate::graph::{ArgumentGraph, Origin, QualitativeStrength, Relation};

pub const SECTION_TITLES: [&str; 8] = [
    "Executive Summary",
    "Graph Overview & Statistics",
    "Claim Credibility Analysis",
    "Evidence Evaluation",
    "Edge Validation",
    "Assumptions Analysis",
    "Graph Critique",
    "Recommendations",
];

pub const MIN_IMPORTANCE: u8 = 1;
pub const MAX_IMPORTANCE: u8 = 5;

/// An implicit premise that would strengthen the link between two claims.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Assumption {
    pub text: String,
    pub importance: u8,
    pub justification: String,
}

impl Assumption {
    pub fn check(&self) -> Result<(), String> {
        if self.text.trim().is_empty() {
            return Err("assumption text is empty".into());
        }
        if !(MIN_IMPORTANCE..=MAX_IMPORTANCE).contains(&self.importance) {
            return Err(format!(
                "importance {} outside {MIN_IMPORTANCE}..={MAX_IMPORTANCE}",
                self.importance
            ));
        }
        Ok(())
    }
}

/// Assumptions generated for one edge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeAssumptions {
    pub edge_id: String,
    pub assumptions: Vec<Assumption>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportSection {
    pub title: String,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub graph_id: String,
    pub generated_at: String,
    pub sections: [ReportSection; 8],
}

/// Everything the templated sections are computed from.
#[derive(Debug, Clone, Copy)]
pub struct ReportInputs<'a> {
    pub graph: &'a ArgumentGraph,
    pub propagation: &'a PropagationResult,
    pub findings: &'a [Finding],
    pub assumptions: &'a [EdgeAssumptions],
}

impl Report {
    pub fn assemble(
        inputs: &ReportInputs<'_>,
        generated_at: impl Into<String>,
        summary: String,
        recommendations: String,
    ) -> Report {
        let bodies = [
            summary,
            overview(inputs),
            credibility(inputs),
            evidence(inputs),
            edges(inputs),
            assumptions(inputs),
            critique(inputs),
            recommendations,
        ];
        let sections = core::array::from_fn(|i| ReportSection {
            title: SECTION_TITLES[i].into(),
            body: bodies[i].clone(),
        });
        Report {
            graph_id: inputs.graph.id.clone(),
            generated_at: generated_at.into(),
            sections,
        }
    }

    pub fn has_canonical_layout(&self) -> bool {
        self.sections.iter().zip(SECTION_TITLES).all(|(s, t)| s.title == t)
    }

    pub fn to_markdown(&self) -> String {
        let mut md = String::new();
        let _ = writeln!(md, "# Argument report: {}\n", self.graph_id);
        let _ = writeln!(md, "_Generated at {}_\n", self.generated_at);
        for (i, section) in self.sections.iter().enumerate() {
            let _ = writeln!(md, "## {}. {}\n", i + 1, section.title);
            let _ = writeln!(md, "{}\n", section.body.trim_end());
        }
        md
    }
}

pub fn overview(inputs: &ReportInputs<'_>) -> String {
    let g = inputs.graph;
    let count = |rel| g.edges.iter().filter(|e| e.relation == rel).count();
    let evidence: usize = g.nodes.iter().map(|n| n.evidence.len()).sum();
    let overrides = g.edges.iter().filter(|e| e.origin == Origin::HumanOverride).count()
        + g.nodes
            .iter()
            .flat_map(|n| &n.evidence)
            .filter(|e| e.origin == Origin::HumanOverride)
            .count();
    let mut out = String::new();
    let _ = writeln!(out, "Title: {}", g.title);
    let _ = writeln!(out, "Claims: {}", g.nodes.len());
    for ty in [
        crate::graph::ClaimType::Fact,
        crate::graph::ClaimType::Policy,
        crate::graph::ClaimType::Value,
    ] {
        let _ = writeln!(
            out,
            "- {}: {}",
            ty.as_str(),
            g.nodes.iter().filter(|n| n.claim_type == ty).count()
        );
    }
    let _ = writeln!(
        out,
        "Edges: {} ({} support, {} attack)",
        g.edges.len(),
        count(Relation::Support),
        count(Relation::Attack)
    );
    let _ = writeln!(out, "Evidence items: {evidence}");
    let _ = writeln!(out, "Human overrides: {overrides}");
    let _ = writeln!(out, "Delta: {}", g.delta);
    out
}

pub fn credibility(inputs: &ReportInputs<'_>) -> String {
    let p = inputs.propagation;
    let mut out = String::new();
    let status = if p.converged { "converged" } else { "did not converge" };
    let _ = writeln!(
        out,
        "Propagation {status} after {} iteration(s); max residual {}.",
        p.iterations_used, p.max_residual
    );
    if p.scores.is_empty() {
        let _ = writeln!(out, "No claims to score.");
        return out;
    }
    for node in &inputs.graph.nodes {
        match p.score(&node.id) {
            Some(score) => {
                let _ = writeln!(
                    out,
                    "- {} [{}] {}: {}",
                    node.id,
                    node.claim_type.as_str(),
                    node.text,
                    score
                );
            }
            None => {
                let _ = writeln!(
                    out,
                    "- {} [{}] {}: not scored",
                    node.id,
                    node.claim_type.as_str(),
                    node.text
                );
            }
        }
    }
    out
}

pub fn evidence(inputs: &ReportInputs<'_>) -> String {
    let mut out = String::new();
    let mut any = false;
    for node in &inputs.graph.nodes {
        if node.evidence.is_empty() {
            continue;
        }
        any = true;
        let _ = writeln!(out, "{} ({} item(s)):", node.id, node.evidence.len());
        for item in &node.evidence {
            let _ = writeln!(
                out,
                "- {} {} {} [{}] score {}: \"{}\"",
                item.id,
                item.polarity.as_str(),
                item.strength,
                item.origin.as_str(),
                evidence_score(item),
                item.excerpt
            );
        }
    }
    if !any {
        let _ = writeln!(out, "No evidence attached.");
    }
    out
}

pub fn edges(inputs: &ReportInputs<'_>) -> String {
    let g = inputs.graph;
    let mut out = String::new();
    if g.edges.is_empty() {
        let _ = writeln!(out, "No edges.");
        return out;
    }
    for e in &g.edges {
        let _ = writeln!(
            out,
            "- {} {} -> {} {} {} [{}] weight {}",
            e.id,
            e.source_id,
            e.target_id,
            e.relation.as_str(),
            e.strength,
            e.origin.as_str(),
            edge_weight(e)
        );
        if !e.justification.is_empty() {
            let _ = writeln!(out, "  justification: {}", e.justification);
        }
    }
    out
}

pub fn assumptions(inputs: &ReportInputs<'_>) -> String {
    let mut out = String::new();
    for entry in inputs.assumptions {
        let _ = writeln!(out, "{}:", entry.edge_id);
        for a in &entry.assumptions {
            let _ = writeln!(
                out,
                "- (importance {}) {}; justification: {}",
                a.importance, a.text, a.justification
            );
        }
    }
    let weak: Vec<&str> = inputs
        .graph
        .edges
        .iter()
        .filter(|e| e.strength <= QualitativeStrength::Weak)
        .filter(|e| !inputs.assumptions.iter().any(|a| a.edge_id == e.id))
        .map(|e| e.id.as_str())
        .collect();
    if inputs.assumptions.is_empty() {
        let _ = writeln!(out, "No assumptions generated.");
    }
    if !weak.is_empty() {
        let _ = writeln!(out, "Weak links without assumption analysis: {}", weak.join(", "));
    }
    out
}

pub fn critique(inputs: &ReportInputs<'_>) -> String {
    let mut out = String::new();
    if inputs.findings.is_empty() {
        let _ = writeln!(out, "No pattern matches.");
        return out;
    }
    for f in inputs.findings {
        let _ = writeln!(
            out,
            "- [{}] {} ({}): {}",
            f.severity.as_str(),
            f.pattern_id,
            f.category.as_str(),
            f.explanation
        );
    }
    out
}

pub fn fallback_summary(inputs: &ReportInputs<'_>) -> String {
    let g = inputs.graph;
    let mut out = format!(
        "\"{}\" contains {} claim(s) and {} edge(s).",
        g.title,
        g.nodes.len(),
        g.edges.len()
    );
    let strongest = inputs
        .propagation
        .scores
        .iter()
        .max_by(|a, b| a.1.total_cmp(b.1).then_with(|| b.0.cmp(a.0)));
    if let Some((id, score)) = strongest {
        let _ = write!(out, " Most credible claim: {id} ({score}).");
    }
    let _ = write!(out, " {} pattern finding(s).", inputs.findings.len());
    out
}

pub fn fallback_recommendations(inputs: &ReportInputs<'_>) -> String {
    let mut out = String::new();
    for f in inputs.findings {
        let _ = writeln!(
            out,
            "- Address {} involving {}.",
            f.pattern_id,
            f.involved_node_ids.join(", ")
        );
    }
    for node in &inputs.graph.nodes {
        if inputs.propagation.score(&node.id).is_some_and(|s| s <= 0.0) {
            let _ = writeln!(out, "- Strengthen {} with additional supporting evidence.", node.id);
        }
    }
    if out.is_empty() {
        out.push_str("No recommendations.\n");
    }
    out
}

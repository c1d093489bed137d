//! Argument pattern bank and structural critique.
//!
//! Structural patterns are decided from graph shape alone:
//!
//! * `cycle`: every elementary directed cycle made only of support edges,
//!   reported once, starting at its smallest node id;
//! * `contradictory_pair`: an ordered node pair joined by both a support and
//!   an attack edge;
//! * `unsupported_claim`: a claim with no evidence and no incoming support;
//! * `isolated_node`: a claim with no evidence and no edges at all.
//!
//! Semantic patterns need a language model and are handled by the std crate.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{ArgumentGraph, Relation, Violation};

/// The only bank format version this crate understands.
pub const BANK_FORMAT_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternCategory {
    Fallacy,
    GoodArgument,
    AbsurdReasoning,
}

impl PatternCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            PatternCategory::Fallacy => "fallacy",
            PatternCategory::GoodArgument => "good_argument",
            PatternCategory::AbsurdReasoning => "absurd_reasoning",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternKind {
    Structural,
    Semantic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StructuralSignature {
    Cycle,
    ContradictoryPair,
    UnsupportedClaim,
    IsolatedNode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Info,
    Warning,
    Critical,
}

impl Severity {
    pub fn as_str(self) -> &'static str {
        match self {
            Severity::Info => "info",
            Severity::Warning => "warning",
            Severity::Critical => "critical",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pattern {
    pub id: String,
    pub name: String,
    pub category: PatternCategory,
    pub kind: PatternKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structural_signature: Option<StructuralSignature>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_template: Option<String>,
    pub description: String,
    pub severity: Severity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternBank {
    pub version: String,
    pub patterns: Vec<Pattern>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BankViolation {
    /// Offending pattern id, or `None` for bank-level problems.
    pub pattern_id: Option<String>,
    pub reason: String,
}

impl fmt::Display for BankViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.pattern_id {
            Some(id) => write!(f, "pattern {id}: {}", self.reason),
            None => write!(f, "bank: {}", self.reason),
        }
    }
}

impl PatternBank {
    pub fn pattern(&self, id: &str) -> Option<&Pattern> {
        self.patterns.iter().find(|p| p.id == id)
    }

    pub fn structural(&self) -> impl Iterator<Item = &Pattern> {
        self.patterns.iter().filter(|p| p.kind == PatternKind::Structural)
    }

    pub fn semantic(&self) -> impl Iterator<Item = &Pattern> {
        self.patterns.iter().filter(|p| p.kind == PatternKind::Semantic)
    }

    pub fn validate(&self) -> Vec<BankViolation> {
        let mut out = Vec::new();
        if self.version != BANK_FORMAT_VERSION {
            out.push(BankViolation {
                pattern_id: None,
                reason: format!(
                    "unsupported version {:?}, expected {:?}",
                    self.version, BANK_FORMAT_VERSION
                ),
            });
        }
        if self.patterns.is_empty() {
            out.push(BankViolation {
                pattern_id: None,
                reason: "bank contains no patterns".into(),
            });
        }
        let mut seen = BTreeSet::new();
        for p in &self.patterns {
            let mut push = |reason: String| {
                out.push(BankViolation {
                    pattern_id: Some(p.id.clone()),
                    reason,
                })
            };
            if p.id.trim().is_empty() {
                push("id is empty".into());
            }
            if !seen.insert(p.id.as_str()) {
                push("duplicate pattern id".into());
            }
            match p.kind {
                PatternKind::Structural => {
                    if p.structural_signature.is_none() {
                        push("structural pattern lacks structural_signature".into());
                    }
                    if p.prompt_template.is_some() {
                        push("structural pattern must not carry prompt_template".into());
                    }
                }
                PatternKind::Semantic => {
                    match &p.prompt_template {
                        None => push("semantic pattern lacks prompt_template".into()),
                        Some(t) if t.trim().is_empty() => push("prompt_template is empty".into()),
                        Some(_) => {}
                    }
                    if p.structural_signature.is_some() {
                        push("semantic pattern must not carry structural_signature".into());
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FindingOrigin {
    Structural,
    Semantic,
}

/// A pattern match against a graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub pattern_id: String,
    pub category: PatternCategory,
    pub involved_node_ids: Vec<String>,
    pub involved_edge_ids: Vec<String>,
    pub explanation: String,
    pub severity: Severity,
    pub origin: FindingOrigin,
}

impl Finding {
    fn sort_key(&self) -> (&str, Option<&String>, &[String], &[String]) {
        (
            &self.pattern_id,
            self.involved_node_ids.iter().min(),
            &self.involved_node_ids,
            &self.involved_edge_ids,
        )
    }
}

/// Sorts findings by pattern id, then smallest involved node id, with the
/// full id lists as tie-breakers.
pub fn sort_findings(findings: &mut [Finding]) {
    findings.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CritiqueError {
    #[error("graph has {} invariant violation(s)", .0.len())]
    InvalidGraph(Vec<Violation>),
}

/// A support cycle as parallel node and edge id lists; `edges[i]` runs from
/// `nodes[i]` to `nodes[(i + 1) % len]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportCycle {
    pub nodes: Vec<String>,
    pub edges: Vec<String>,
}

/// Enumerates the elementary cycles formed by support edges.
///
/// Johnson's circuit-finding algorithm over nodes ordered by id. Each cycle
/// is emitted once, rotated to start at its smallest node id; the result is
/// sorted by node sequence.
pub fn support_cycles(graph: &ArgumentGraph) -> Vec<SupportCycle> {
    let mut ids: Vec<&str> = graph.nodes.iter().map(|n| n.id.as_str()).collect();
    ids.sort_unstable();
    ids.dedup();
    let rank: BTreeMap<&str, usize> = ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();

    let n = ids.len();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut edge_of: BTreeMap<(usize, usize), &str> = BTreeMap::new();
    for edge in graph.edges.iter().filter(|e| e.relation == Relation::Support) {
        let (Some(&s), Some(&t)) = (rank.get(edge.source_id.as_str()), rank.get(edge.target_id.as_str())) else {
            continue;
        };
        if s == t {
            continue;
        }
        if edge_of.insert((s, t), edge.id.as_str()).is_none() {
            adj[s].push(t);
        }
    }
    for list in &mut adj {
        list.sort_unstable();
    }

    let mut circuits = Vec::new();
    let mut search = CircuitSearch {
        adj: &adj,
        in_component: vec![false; n],
        blocked: vec![false; n],
        blocked_by: vec![Vec::new(); n],
        stack: Vec::new(),
        out: &mut circuits,
    };
    for start in 0..n {
        let component = strongly_connected_from(&adj, start);
        if component.iter().filter(|&&b| b).count() < 2 {
            continue;
        }
        search.in_component = component;
        for v in 0..n {
            search.blocked[v] = false;
            search.blocked_by[v].clear();
        }
        search.circuit(start, start);
    }

    let mut cycles: Vec<SupportCycle> = circuits
        .into_iter()
        .map(|cycle| {
            let nodes = cycle.iter().map(|&i| String::from(ids[i])).collect();
            let edges = (0..cycle.len())
                .map(|k| String::from(edge_of[&(cycle[k], cycle[(k + 1) % cycle.len()])]))
                .collect();
            SupportCycle { nodes, edges }
        })
        .collect();
    cycles.sort_by(|a, b| a.nodes.cmp(&b.nodes));
    cycles
}

/// Nodes `>= start` lying on a cycle through `start` in the subgraph induced
/// by `{start, start + 1, ..}`.
fn strongly_connected_from(adj: &[Vec<usize>], start: usize) -> Vec<bool> {
    let n = adj.len();
    let mut reverse: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (v, targets) in adj.iter().enumerate().skip(start) {
        for &w in targets.iter().filter(|&&w| w >= start) {
            reverse[w].push(v);
        }
    }
    let reach = |edges: &dyn Fn(usize) -> Vec<usize>| {
        let mut seen = vec![false; n];
        let mut todo = vec![start];
        seen[start] = true;
        while let Some(v) = todo.pop() {
            for w in edges(v) {
                if w >= start && !seen[w] {
                    seen[w] = true;
                    todo.push(w);
                }
            }
        }
        seen
    };
    let forward = reach(&|v| adj[v].clone());
    let backward = reach(&|v| reverse[v].clone());
    forward.iter().zip(&backward).map(|(a, b)| *a && *b).collect()
}

struct CircuitSearch<'a> {
    adj: &'a [Vec<usize>],
    in_component: Vec<bool>,
    blocked: Vec<bool>,
    blocked_by: Vec<Vec<usize>>,
    stack: Vec<usize>,
    out: &'a mut Vec<Vec<usize>>,
}

impl CircuitSearch<'_> {
    fn circuit(&mut self, v: usize, start: usize) -> bool {
        let mut found = false;
        self.stack.push(v);
        self.blocked[v] = true;
        for &w in self.adj[v].iter() {
            if !self.in_component[w] {
                continue;
            }
            if w == start {
                self.out.push(self.stack.clone());
                found = true;
            } else if !self.blocked[w] && self.circuit(w, start) {
                found = true;
            }
        }
        if found {
            self.unblock(v);
        } else {
            for &w in self.adj[v].iter() {
                if self.in_component[w] && !self.blocked_by[w].contains(&v) {
                    self.blocked_by[w].push(v);
                }
            }
        }
        self.stack.pop();
        found
    }

    fn unblock(&mut self, u: usize) {
        self.blocked[u] = false;
        while let Some(w) = self.blocked_by[u].pop() {
            if self.blocked[w] {
                self.unblock(w);
            }
        }
    }
}

/// Runs every structural pattern in `bank` against `graph`.
///
/// Several patterns may share a signature; each produces its own findings.
pub fn detect_structural(graph: &ArgumentGraph, bank: &PatternBank) -> Result<Vec<Finding>, CritiqueError> {
    let violations = graph.validate();
    if !violations.is_empty() {
        return Err(CritiqueError::InvalidGraph(violations));
    }

    let mut findings = Vec::new();
    let mut cycles = None;
    for pattern in bank.structural() {
        let Some(signature) = pattern.structural_signature else {
            continue;
        };
        let finding = |nodes: Vec<String>, edges: Vec<String>, explanation: String| Finding {
            pattern_id: pattern.id.clone(),
            category: pattern.category,
            involved_node_ids: nodes,
            involved_edge_ids: edges,
            explanation,
            severity: pattern.severity,
            origin: FindingOrigin::Structural,
        };
        match signature {
            StructuralSignature::Cycle => {
                for cycle in cycles.get_or_insert_with(|| support_cycles(graph)).iter() {
                    let mut path = cycle.nodes.join(" -> ");
                    path.push_str(" -> ");
                    path.push_str(&cycle.nodes[0]);
                    findings.push(finding(
                        cycle.nodes.clone(),
                        cycle.edges.clone(),
                        format!("Claims support each other in a loop: {path}."),
                    ));
                }
            }
            StructuralSignature::ContradictoryPair => {
                let mut by_pair: BTreeMap<(&str, &str), [Option<&str>; 2]> = BTreeMap::new();
                for edge in &graph.edges {
                    let slot = match edge.relation {
                        Relation::Support => 0,
                        Relation::Attack => 1,
                    };
                    by_pair.entry((&edge.source_id, &edge.target_id)).or_default()[slot] = Some(&edge.id);
                }
                for ((source, target), pair) in by_pair {
                    if let [Some(support), Some(attack)] = pair {
                        findings.push(finding(
                            vec![source.into(), target.into()],
                            vec![support.into(), attack.into()],
                            format!("{source} both supports and attacks {target}."),
                        ));
                    }
                }
            }
            StructuralSignature::UnsupportedClaim => {
                for node in &graph.nodes {
                    let supported = graph.incoming(&node.id).any(|e| e.relation == Relation::Support);
                    if node.evidence.is_empty() && !supported {
                        findings.push(finding(
                            vec![node.id.clone()],
                            Vec::new(),
                            format!("{} has no evidence and no supporting claim.", node.id),
                        ));
                    }
                }
            }
            StructuralSignature::IsolatedNode => {
                for node in &graph.nodes {
                    let connected = graph
                        .edges
                        .iter()
                        .any(|e| e.source_id == node.id || e.target_id == node.id);
                    if node.evidence.is_empty() && !connected {
                        findings.push(finding(
                            vec![node.id.clone()],
                            Vec::new(),
                            format!("{} is not connected to any claim and has no evidence.", node.id),
                        ));
                    }
                }
            }
        }
    }
    sort_findings(&mut findings);
    Ok(findings)
}

//! Argumentation graph model.
//!
//! A graph holds typed claims (nodes) carrying evidence, and directed
//! support/attack edges between claims. All mutation goes through the methods
//! on [`ArgumentGraph`], which keep the structural invariants and flag the
//! nodes whose credibility needs recomputation.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default value of the evidence scaling hyperparameter.
pub const DEFAULT_DELTA: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClaimType {
    Fact,
    Policy,
    Value,
}

impl ClaimType {
    pub fn as_str(self) -> &'static str {
        match self {
            ClaimType::Fact => "fact",
            ClaimType::Policy => "policy",
            ClaimType::Value => "value",
        }
    }
}

/// Closed set of qualitative labels a classifier may emit. Numbers are
/// derived from these labels, never supplied directly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QualitativeStrength {
    None,
    VeryWeak,
    Weak,
    Moderate,
    Strong,
    VeryStrong,
}

impl QualitativeStrength {
    pub const ALL: [QualitativeStrength; 6] = [
        QualitativeStrength::None,
        QualitativeStrength::VeryWeak,
        QualitativeStrength::Weak,
        QualitativeStrength::Moderate,
        QualitativeStrength::Strong,
        QualitativeStrength::VeryStrong,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            QualitativeStrength::None => "none",
            QualitativeStrength::VeryWeak => "very_weak",
            QualitativeStrength::Weak => "weak",
            QualitativeStrength::Moderate => "moderate",
            QualitativeStrength::Strong => "strong",
            QualitativeStrength::VeryStrong => "very_strong",
        }
    }
}

impl fmt::Display for QualitativeStrength {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    Supporting,
    Negating,
}

impl Polarity {
    pub fn as_str(self) -> &'static str {
        match self {
            Polarity::Supporting => "supporting",
            Polarity::Negating => "negating",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Support,
    Attack,
}

impl Relation {
    pub fn as_str(self) -> &'static str {
        match self {
            Relation::Support => "support",
            Relation::Attack => "attack",
        }
    }
}

/// Who produced a label: the classifier, or a human replacing its output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Machine,
    HumanOverride,
}

impl Origin {
    pub fn as_str(self) -> &'static str {
        match self {
            Origin::Machine => "machine",
            Origin::HumanOverride => "human_override",
        }
    }
}

/// A supporting or negating excerpt attached to one claim.
///
/// `claim_id` is implied by nesting in the document format; it is restored
/// from the owning node on deserialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Evidence {
    pub id: String,
    #[serde(skip)]
    pub claim_id: String,
    pub excerpt: String,
    pub polarity: Polarity,
    pub strength: QualitativeStrength,
    pub justification: String,
    pub origin: Origin,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_document: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "ClaimNodeDocument")]
pub struct ClaimNode {
    pub id: String,
    pub text: String,
    pub claim_type: ClaimType,
    pub credibility: f64,
    pub credibility_stale: bool,
    pub evidence: Vec<Evidence>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ClaimNodeDocument {
    id: String,
    text: String,
    claim_type: ClaimType,
    credibility: f64,
    #[serde(default)]
    credibility_stale: bool,
    evidence: Vec<Evidence>,
}

impl From<ClaimNodeDocument> for ClaimNode {
    fn from(doc: ClaimNodeDocument) -> Self {
        let mut evidence = doc.evidence;
        for item in &mut evidence {
            item.claim_id.clone_from(&doc.id);
        }
        ClaimNode {
            id: doc.id,
            text: doc.text,
            claim_type: doc.claim_type,
            credibility: doc.credibility,
            credibility_stale: doc.credibility_stale,
            evidence,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Edge {
    pub id: String,
    pub source_id: String,
    pub target_id: String,
    pub relation: Relation,
    pub strength: QualitativeStrength,
    pub justification: String,
    pub origin: Origin,
}

/// RFC 3339 timestamps. The core crate stores them verbatim; the std crate
/// validates and stamps them.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Metadata {
    pub created_at: String,
    pub modified_at: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArgumentGraph {
    pub id: String,
    pub title: String,
    pub delta: f64,
    pub nodes: Vec<ClaimNode>,
    pub edges: Vec<Edge>,
    pub metadata: Metadata,
}

/// Parameters for a new edge. Unset fields default to an empty
/// justification, machine origin and a system-generated id.
#[derive(Debug, Clone, PartialEq)]
pub struct NewEdge {
    pub id: Option<String>,
    pub source_id: String,
    pub target_id: String,
    pub relation: Relation,
    pub strength: QualitativeStrength,
    pub justification: String,
    pub origin: Origin,
}

impl NewEdge {
    pub fn new(
        source_id: impl Into<String>,
        target_id: impl Into<String>,
        relation: Relation,
        strength: QualitativeStrength,
    ) -> Self {
        NewEdge {
            id: None,
            source_id: source_id.into(),
            target_id: target_id.into(),
            relation,
            strength,
            justification: String::new(),
            origin: Origin::Machine,
        }
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = Some(id.into());
        self
    }

    pub fn justification(mut self, text: impl Into<String>) -> Self {
        self.justification = text.into();
        self
    }

    pub fn origin(mut self, origin: Origin) -> Self {
        self.origin = origin;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewEvidence {
    pub id: Option<String>,
    pub excerpt: String,
    pub polarity: Polarity,
    pub strength: QualitativeStrength,
    pub justification: String,
    pub origin: Origin,
    pub source_document: Option<String>,
}

impl NewEvidence {
    pub fn new(excerpt: impl Into<String>, polarity: Polarity, strength: QualitativeStrength) -> Self {
        NewEvidence {
            id: None,
            excerpt: excerpt.into(),
            polarity,
            strength,
            justification: String::new(),
            origin: Origin::Machine,
            source_document: None,
        }
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = Some(id.into());
        self
    }

    pub fn justification(mut self, text: impl Into<String>) -> Self {
        self.justification = text.into();
        self
    }

    pub fn origin(mut self, origin: Origin) -> Self {
        self.origin = origin;
        self
    }

    pub fn source_document(mut self, document_id: impl Into<String>) -> Self {
        self.source_document = Some(document_id.into());
        self
    }
}

/// Broad class of a [`GraphError`], used to pick a transport status code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    NotFound,
    Conflict,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("claim text must not be empty")]
    EmptyText,
    #[error("evidence excerpt must not be empty")]
    EmptyExcerpt,
    #[error("delta must be a finite number greater than zero, got {0}")]
    InvalidDelta(f64),
    #[error("edge {source_id} -> {target_id} would be a self-loop")]
    SelfLoop { source_id: String, target_id: String },
    #[error("claim {0} not found")]
    NodeNotFound(String),
    #[error("edge {0} not found")]
    EdgeNotFound(String),
    #[error("evidence {0} not found")]
    EvidenceNotFound(String),
    #[error("id {0} is already in use")]
    DuplicateId(String),
    #[error("a {relation} edge {source_id} -> {target_id} already exists")]
    DuplicateEdge {
        source_id: String,
        target_id: String,
        relation: &'static str,
    },
}

impl GraphError {
    pub fn class(&self) -> ErrorClass {
        match self {
            GraphError::EmptyText
            | GraphError::EmptyExcerpt
            | GraphError::InvalidDelta(_)
            | GraphError::SelfLoop { .. } => ErrorClass::Validation,
            GraphError::NodeNotFound(_) | GraphError::EdgeNotFound(_) | GraphError::EvidenceNotFound(_) => {
                ErrorClass::NotFound
            }
            GraphError::DuplicateId(_) | GraphError::DuplicateEdge { .. } => ErrorClass::Conflict,
        }
    }
}

/// The element a [`Violation`] is about.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", content = "id", rename_all = "snake_case")]
pub enum Subject {
    Graph,
    Node(String),
    Edge(String),
    Evidence(String),
}

impl fmt::Display for Subject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Subject::Graph => f.write_str("graph"),
            Subject::Node(id) => write!(f, "node {id}"),
            Subject::Edge(id) => write!(f, "edge {id}"),
            Subject::Evidence(id) => write!(f, "evidence {id}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    NonPositiveDelta,
    DuplicateNodeId,
    DuplicateEdgeId,
    DuplicateEvidenceId,
    EmptyClaimText,
    EmptyExcerpt,
    CredibilityOutOfRange,
    EvidenceOwnerMismatch,
    DanglingEndpoint,
    SelfLoop,
    DuplicateEdge,
}

/// One broken invariant. Violations are data: a graph may carry any number.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub subject: Subject,
    pub kind: ViolationKind,
    pub reason: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.subject, self.reason)
    }
}

impl ArgumentGraph {
    /// Empty graph with the default delta; both timestamps set to `timestamp`.
    pub fn new(id: impl Into<String>, title: impl Into<String>, timestamp: impl Into<String>) -> Self {
        let timestamp = timestamp.into();
        ArgumentGraph {
            id: id.into(),
            title: title.into(),
            delta: DEFAULT_DELTA,
            nodes: Vec::new(),
            edges: Vec::new(),
            metadata: Metadata {
                created_at: timestamp.clone(),
                modified_at: timestamp,
            },
        }
    }

    pub fn set_delta(&mut self, delta: f64) -> Result<(), GraphError> {
        if !is_valid_delta(delta) {
            return Err(GraphError::InvalidDelta(delta));
        }
        self.delta = delta;
        Ok(())
    }

    pub fn node(&self, id: &str) -> Option<&ClaimNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn node_mut(&mut self, id: &str) -> Option<&mut ClaimNode> {
        self.nodes.iter_mut().find(|n| n.id == id)
    }

    pub fn edge(&self, id: &str) -> Option<&Edge> {
        self.edges.iter().find(|e| e.id == id)
    }

    pub fn evidence(&self, id: &str) -> Option<&Evidence> {
        self.nodes.iter().flat_map(|n| n.evidence.iter()).find(|e| e.id == id)
    }

    /// Edges whose target is `node_id`, in graph order.
    pub fn incoming<'a>(&'a self, node_id: &'a str) -> impl Iterator<Item = &'a Edge> + 'a {
        self.edges.iter().filter(move |e| e.target_id == node_id)
    }

    pub fn outgoing<'a>(&'a self, node_id: &'a str) -> impl Iterator<Item = &'a Edge> + 'a {
        self.edges.iter().filter(move |e| e.source_id == node_id)
    }

    pub fn stale_node_ids(&self) -> Vec<&str> {
        self.nodes
            .iter()
            .filter(|n| n.credibility_stale)
            .map(|n| n.id.as_str())
            .collect()
    }

    pub fn add_claim(&mut self, text: impl Into<String>, claim_type: ClaimType) -> Result<&ClaimNode, GraphError> {
        let id = fresh_id("n", self.nodes.len(), |c| self.node(c).is_some());
        self.add_claim_with_id(id, text, claim_type)
    }

    /// Like [`ArgumentGraph::add_claim`] with a caller-chosen id.
    pub fn add_claim_with_id(
        &mut self,
        id: impl Into<String>,
        text: impl Into<String>,
        claim_type: ClaimType,
    ) -> Result<&ClaimNode, GraphError> {
        let id = id.into();
        let text = text.into();
        if text.trim().is_empty() {
            return Err(GraphError::EmptyText);
        }
        if id.is_empty() || self.node(&id).is_some() {
            return Err(GraphError::DuplicateId(id));
        }
        self.nodes.push(ClaimNode {
            id,
            text,
            claim_type,
            credibility: 0.0,
            credibility_stale: true,
            evidence: Vec::new(),
        });
        Ok(self.nodes.last().expect("node just pushed"))
    }

    pub fn set_claim_text(&mut self, id: &str, text: impl Into<String>) -> Result<(), GraphError> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(GraphError::EmptyText);
        }
        let node = self.node_mut(id).ok_or_else(|| GraphError::NodeNotFound(id.into()))?;
        node.text = text;
        Ok(())
    }

    pub fn set_claim_type(&mut self, id: &str, claim_type: ClaimType) -> Result<(), GraphError> {
        let node = self.node_mut(id).ok_or_else(|| GraphError::NodeNotFound(id.into()))?;
        node.claim_type = claim_type;
        Ok(())
    }

    /// Removes a claim together with every edge touching it. Targets of the
    /// removed outgoing edges lose an input and become stale.
    pub fn remove_claim(&mut self, id: &str) -> Result<ClaimNode, GraphError> {
        let pos = self
            .nodes
            .iter()
            .position(|n| n.id == id)
            .ok_or_else(|| GraphError::NodeNotFound(id.into()))?;
        let removed = self.nodes.remove(pos);
        let mut affected = BTreeSet::new();
        self.edges.retain(|e| {
            let touches = e.source_id == id || e.target_id == id;
            if touches && e.source_id == id {
                affected.insert(e.target_id.clone());
            }
            !touches
        });
        for node in &mut self.nodes {
            if affected.contains(&node.id) {
                node.credibility_stale = true;
            }
        }
        Ok(removed)
    }

    pub fn add_edge(&mut self, new: NewEdge) -> Result<&Edge, GraphError> {
        if self.node(&new.source_id).is_none() {
            return Err(GraphError::NodeNotFound(new.source_id));
        }
        if self.node(&new.target_id).is_none() {
            return Err(GraphError::NodeNotFound(new.target_id));
        }
        if new.source_id == new.target_id {
            return Err(GraphError::SelfLoop {
                source_id: new.source_id,
                target_id: new.target_id,
            });
        }
        self.ensure_unique_triple(&new.source_id, &new.target_id, new.relation, None)?;
        let id = match new.id {
            Some(id) => {
                if id.is_empty() || self.edge(&id).is_some() {
                    return Err(GraphError::DuplicateId(id));
                }
                id
            }
            None => fresh_id("e", self.edges.len(), |c| self.edge(c).is_some()),
        };
        self.mark_stale(&new.target_id);
        self.edges.push(Edge {
            id,
            source_id: new.source_id,
            target_id: new.target_id,
            relation: new.relation,
            strength: new.strength,
            justification: new.justification,
            origin: new.origin,
        });
        Ok(self.edges.last().expect("edge just pushed"))
    }

    /// Relabels an existing edge, typically a human overriding a machine
    /// classification.
    pub fn relabel_edge(
        &mut self,
        id: &str,
        relation: Relation,
        strength: QualitativeStrength,
        justification: impl Into<String>,
        origin: Origin,
    ) -> Result<&Edge, GraphError> {
        let pos = self
            .edges
            .iter()
            .position(|e| e.id == id)
            .ok_or_else(|| GraphError::EdgeNotFound(id.into()))?;
        let (source, target) = (self.edges[pos].source_id.clone(), self.edges[pos].target_id.clone());
        self.ensure_unique_triple(&source, &target, relation, Some(id))?;
        self.mark_stale(&target);
        let edge = &mut self.edges[pos];
        edge.relation = relation;
        edge.strength = strength;
        edge.justification = justification.into();
        edge.origin = origin;
        Ok(&self.edges[pos])
    }

    pub fn remove_edge(&mut self, id: &str) -> Result<Edge, GraphError> {
        let pos = self
            .edges
            .iter()
            .position(|e| e.id == id)
            .ok_or_else(|| GraphError::EdgeNotFound(id.into()))?;
        let edge = self.edges.remove(pos);
        self.mark_stale(&edge.target_id);
        Ok(edge)
    }

    pub fn add_evidence(&mut self, claim_id: &str, new: NewEvidence) -> Result<&Evidence, GraphError> {
        if new.excerpt.trim().is_empty() {
            return Err(GraphError::EmptyExcerpt);
        }
        if self.node(claim_id).is_none() {
            return Err(GraphError::NodeNotFound(claim_id.into()));
        }
        let id = match new.id {
            Some(id) => {
                if id.is_empty() || self.evidence(&id).is_some() {
                    return Err(GraphError::DuplicateId(id));
                }
                id
            }
            None => {
                let count = self.nodes.iter().map(|n| n.evidence.len()).sum();
                fresh_id("ev", count, |c| self.evidence(c).is_some())
            }
        };
        let node = self.node_mut(claim_id).expect("checked above");
        node.credibility_stale = true;
        node.evidence.push(Evidence {
            id,
            claim_id: claim_id.into(),
            excerpt: new.excerpt,
            polarity: new.polarity,
            strength: new.strength,
            justification: new.justification,
            origin: new.origin,
            source_document: new.source_document,
        });
        Ok(node.evidence.last().expect("evidence just pushed"))
    }

    pub fn relabel_evidence(
        &mut self,
        id: &str,
        polarity: Polarity,
        strength: QualitativeStrength,
        justification: impl Into<String>,
        origin: Origin,
    ) -> Result<&Evidence, GraphError> {
        let (node_pos, ev_pos) = self
            .locate_evidence(id)
            .ok_or_else(|| GraphError::EvidenceNotFound(id.into()))?;
        let node = &mut self.nodes[node_pos];
        node.credibility_stale = true;
        let item = &mut node.evidence[ev_pos];
        item.polarity = polarity;
        item.strength = strength;
        item.justification = justification.into();
        item.origin = origin;
        Ok(&self.nodes[node_pos].evidence[ev_pos])
    }

    pub fn remove_evidence(&mut self, id: &str) -> Result<Evidence, GraphError> {
        let (node_pos, ev_pos) = self
            .locate_evidence(id)
            .ok_or_else(|| GraphError::EvidenceNotFound(id.into()))?;
        let node = &mut self.nodes[node_pos];
        node.credibility_stale = true;
        Ok(node.evidence.remove(ev_pos))
    }

    /// Every invariant violation, in a deterministic order. Empty iff the
    /// graph is well-formed.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if !is_valid_delta(self.delta) {
            out.push(Violation {
                subject: Subject::Graph,
                kind: ViolationKind::NonPositiveDelta,
                reason: format!("delta must be finite and > 0, got {}", self.delta),
            });
        }

        let mut node_ids = BTreeSet::new();
        let mut evidence_ids = BTreeSet::new();
        for node in &self.nodes {
            let subject = || Subject::Node(node.id.clone());
            if !node_ids.insert(node.id.as_str()) {
                out.push(Violation {
                    subject: subject(),
                    kind: ViolationKind::DuplicateNodeId,
                    reason: format!("node id {} appears more than once", node.id),
                });
            }
            if node.text.trim().is_empty() {
                out.push(Violation {
                    subject: subject(),
                    kind: ViolationKind::EmptyClaimText,
                    reason: "claim text is empty".into(),
                });
            }
            // NaN fails this comparison too.
            if node.credibility.is_nan() || node.credibility.abs() >= 1.0 {
                out.push(Violation {
                    subject: subject(),
                    kind: ViolationKind::CredibilityOutOfRange,
                    reason: format!("credibility {} is outside (-1, 1)", node.credibility),
                });
            }
            for item in &node.evidence {
                let subject = || Subject::Evidence(item.id.clone());
                if !evidence_ids.insert(item.id.as_str()) {
                    out.push(Violation {
                        subject: subject(),
                        kind: ViolationKind::DuplicateEvidenceId,
                        reason: format!("evidence id {} appears more than once", item.id),
                    });
                }
                if item.excerpt.trim().is_empty() {
                    out.push(Violation {
                        subject: subject(),
                        kind: ViolationKind::EmptyExcerpt,
                        reason: "evidence excerpt is empty".into(),
                    });
                }
                if item.claim_id != node.id {
                    out.push(Violation {
                        subject: subject(),
                        kind: ViolationKind::EvidenceOwnerMismatch,
                        reason: format!(
                            "evidence claims owner {:?} but is attached to node {}",
                            item.claim_id, node.id
                        ),
                    });
                }
            }
        }

        let mut edge_ids = BTreeSet::new();
        let mut triples = BTreeSet::new();
        for edge in &self.edges {
            let subject = || Subject::Edge(edge.id.clone());
            if !edge_ids.insert(edge.id.as_str()) {
                out.push(Violation {
                    subject: subject(),
                    kind: ViolationKind::DuplicateEdgeId,
                    reason: format!("edge id {} appears more than once", edge.id),
                });
            }
            for (end, id) in [("source", &edge.source_id), ("target", &edge.target_id)] {
                if !node_ids.contains(id.as_str()) {
                    out.push(Violation {
                        subject: subject(),
                        kind: ViolationKind::DanglingEndpoint,
                        reason: format!("{end} {id} does not resolve to a node"),
                    });
                }
            }
            if edge.source_id == edge.target_id {
                out.push(Violation {
                    subject: subject(),
                    kind: ViolationKind::SelfLoop,
                    reason: format!("edge loops on node {}", edge.source_id),
                });
            }
            if !triples.insert((edge.source_id.as_str(), edge.target_id.as_str(), edge.relation)) {
                out.push(Violation {
                    subject: subject(),
                    kind: ViolationKind::DuplicateEdge,
                    reason: format!(
                        "another {} edge {} -> {} exists",
                        edge.relation.as_str(),
                        edge.source_id,
                        edge.target_id
                    ),
                });
            }
        }
        out
    }

    /// Node id → position in `nodes`. Assumes unique ids.
    pub fn node_index(&self) -> BTreeMap<&str, usize> {
        self.nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect()
    }

    fn ensure_unique_triple(
        &self,
        source: &str,
        target: &str,
        relation: Relation,
        except: Option<&str>,
    ) -> Result<(), GraphError> {
        let clash = self.edges.iter().any(|e| {
            e.source_id == source && e.target_id == target && e.relation == relation && Some(e.id.as_str()) != except
        });
        if clash {
            return Err(GraphError::DuplicateEdge {
                source_id: source.into(),
                target_id: target.into(),
                relation: relation.as_str(),
            });
        }
        Ok(())
    }

    fn mark_stale(&mut self, node_id: &str) {
        if let Some(node) = self.node_mut(node_id) {
            node.credibility_stale = true;
        }
    }

    fn locate_evidence(&self, id: &str) -> Option<(usize, usize)> {
        self.nodes
            .iter()
            .enumerate()
            .find_map(|(ni, n)| n.evidence.iter().position(|e| e.id == id).map(|ei| (ni, ei)))
    }
}

/// Free-function form of [`ArgumentGraph::validate`].
pub fn validate_graph(graph: &ArgumentGraph) -> Vec<Violation> {
    graph.validate()
}

pub(crate) fn is_valid_delta(delta: f64) -> bool {
    delta.is_finite() && delta > 0.0
}

fn fresh_id(prefix: &str, count: usize, taken: impl Fn(&str) -> bool) -> String {
    let mut n = count + 1;
    loop {
        let candidate = format!("{prefix}{n}");
        if !taken(&candidate) {
            return candidate;
        }
        n += 1;
    }
}

//! Claim credibility.
//!
//! Qualitative labels are converted to numbers through the Evans
//! correlation-strength bands, each label mapped to its band midpoint:
//!
//! | label       | band       | value |
//! |-------------|------------|-------|
//! | none        |  –         | 0.0   |
//! | very_weak   | 0.00–0.19  | 0.1   |
//! | weak        | 0.20–0.39  | 0.3   |
//! | moderate    | 0.40–0.59  | 0.5   |
//! | strong      | 0.60–0.79  | 0.7   |
//! | very_strong | 0.80–1.00  | 0.9   |
//!
//! Negating evidence and attack edges carry a negative sign.
//!
//! Scores are the fixed point of the synchronous update
//!
//! ```text
//! S_t(v) = tanh( delta * mean_i f_E(e_i)  +  sum_j f_ED(k_j) * S_{t-1}(source(k_j)) )
//! ```
//!
//! started from `S_0 = 0` everywhere. The evidence term is zero for a claim
//! without evidence.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{
    is_valid_delta, ArgumentGraph, ClaimNode, Edge, Evidence, Polarity, QualitativeStrength, Relation, Violation,
};

pub const DEFAULT_EPSILON: f64 = 1e-6;
pub const DEFAULT_MAX_ITERATIONS: usize = 1000;

/// Largest `f64` strictly below one. `tanh` rounds to exactly ±1 for
/// arguments beyond roughly 19.06; scores are pinned here instead.
const MAX_SCORE: f64 = 1.0 - f64::EPSILON / 2.0;

impl QualitativeStrength {
    /// Midpoint of the label's Evans band.
    pub fn evans_magnitude(self) -> f64 {
        match self {
            QualitativeStrength::None => 0.0,
            QualitativeStrength::VeryWeak => 0.1,
            QualitativeStrength::Weak => 0.3,
            QualitativeStrength::Moderate => 0.5,
            QualitativeStrength::Strong => 0.7,
            QualitativeStrength::VeryStrong => 0.9,
        }
    }
}

pub fn evans_magnitude(strength: QualitativeStrength) -> f64 {
    strength.evans_magnitude()
}

/// Signed evidence score `f_E`.
pub fn evidence_score(evidence: &Evidence) -> f64 {
    let magnitude = evidence.strength.evans_magnitude();
    match evidence.polarity {
        Polarity::Supporting => magnitude,
        Polarity::Negating => -magnitude,
    }
}

/// Signed edge weight `f_ED`.
pub fn edge_weight(edge: &Edge) -> f64 {
    let magnitude = edge.strength.evans_magnitude();
    match edge.relation {
        Relation::Support => magnitude,
        Relation::Attack => -magnitude,
    }
}

/// `delta` times the mean evidence score; zero when there is no evidence.
pub fn evidence_term(node: &ClaimNode, delta: f64) -> f64 {
    if node.evidence.is_empty() {
        return 0.0;
    }
    let sum: f64 = node.evidence.iter().map(evidence_score).sum();
    delta * (sum / node.evidence.len() as f64)
}

/// Argument of `tanh` for one node given its incoming edges paired with the
/// previous-iteration score of each edge's source.
pub fn node_preactivation<'a, I>(node: &ClaimNode, incoming: I, delta: f64) -> f64
where
    I: IntoIterator<Item = (&'a Edge, f64)>,
{
    let neighbours = incoming
        .into_iter()
        .fold(0.0, |acc, (edge, source_score)| acc + edge_weight(edge) * source_score);
    evidence_term(node, delta) + neighbours
}

fn squash(preactivation: f64) -> f64 {
    libm::tanh(preactivation).clamp(-MAX_SCORE, MAX_SCORE)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagationConfig {
    pub epsilon: f64,
    pub max_iterations: usize,
    pub delta: f64,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        PropagationConfig {
            epsilon: DEFAULT_EPSILON,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            delta: crate::graph::DEFAULT_DELTA,
        }
    }
}

impl PropagationConfig {
    /// Defaults, with delta taken from the graph.
    pub fn for_graph(graph: &ArgumentGraph) -> Self {
        PropagationConfig {
            delta: graph.delta,
            ..Default::default()
        }
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_max_iterations(mut self, max_iterations: usize) -> Self {
        self.max_iterations = max_iterations;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(ConfigError::Epsilon(self.epsilon));
        }
        if self.max_iterations == 0 {
            return Err(ConfigError::MaxIterations);
        }
        if !is_valid_delta(self.delta) {
            return Err(ConfigError::Delta(self.delta));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("epsilon must be a finite number greater than zero, got {0}")]
    Epsilon(f64),
    #[error("max_iterations must be at least 1")]
    MaxIterations,
    #[error("delta must be a finite number greater than zero, got {0}")]
    Delta(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PropagationError {
    #[error("graph has {} invariant violation(s)", .0.len())]
    InvalidGraph(Vec<Violation>),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// Outcome of a propagation run. Non-convergence is reported here, not as
/// an error; `scores` then holds the last iterate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagationResult {
    pub scores: BTreeMap<String, f64>,
    pub converged: bool,
    pub iterations_used: usize,
    pub max_residual: f64,
}

impl PropagationResult {
    pub fn score(&self, node_id: &str) -> Option<f64> {
        self.scores.get(node_id).copied()
    }
}

/// Runs the fixed-point iteration without touching the graph.
pub fn compute_scores(
    graph: &ArgumentGraph,
    config: &PropagationConfig,
) -> Result<PropagationResult, PropagationError> {
    config.validate()?;
    let violations = graph.validate();
    if !violations.is_empty() {
        return Err(PropagationError::InvalidGraph(violations));
    }

    let index = graph.node_index();
    let bias: Vec<f64> = graph.nodes.iter().map(|n| evidence_term(n, config.delta)).collect();
    let mut incoming: Vec<Vec<(f64, usize)>> = vec![Vec::new(); graph.nodes.len()];
    for edge in &graph.edges {
        incoming[index[edge.target_id.as_str()]].push((edge_weight(edge), index[edge.source_id.as_str()]));
    }

    let mut previous = vec![0.0; graph.nodes.len()];
    let mut current = vec![0.0; graph.nodes.len()];
    let mut iterations_used = 0;
    let mut max_residual = 0.0;
    let mut converged = false;
    while iterations_used < config.max_iterations {
        iterations_used += 1;
        max_residual = 0.0;
        for (v, slot) in current.iter_mut().enumerate() {
            let neighbours = incoming[v]
                .iter()
                .fold(0.0, |acc, &(weight, source)| acc + weight * previous[source]);
            *slot = squash(bias[v] + neighbours);
            let residual = libm::fabs(*slot - previous[v]);
            if residual > max_residual {
                max_residual = residual;
            }
        }
        core::mem::swap(&mut previous, &mut current);
        if max_residual < config.epsilon {
            converged = true;
            break;
        }
    }

    let scores = graph
        .nodes
        .iter()
        .zip(previous)
        .map(|(node, score)| (node.id.clone(), score))
        .collect();
    Ok(PropagationResult {
        scores,
        converged,
        iterations_used,
        max_residual,
    })
}

/// Computes scores and writes them back onto the nodes, clearing their
/// stale flags.
pub fn propagate(graph: &mut ArgumentGraph, config: &PropagationConfig) -> Result<PropagationResult, PropagationError> {
    let result = compute_scores(graph, config)?;
    apply_scores(graph, &result);
    Ok(result)
}

/// Writes `result` onto the matching nodes. Nodes missing from the result
/// are left untouched.
pub fn apply_scores(graph: &mut ArgumentGraph, result: &PropagationResult) {
    for node in &mut graph.nodes {
        if let Some(score) = result.score(&node.id) {
            node.credibility = score;
            node.credibility_stale = false;
        }
    }
}

//! Semantic pattern detection through the chat provider.

use std::collections::BTreeSet;

use argugraph_core::critique::{sort_findings, Finding, FindingOrigin, Pattern, PatternBank};
use argugraph_core::graph::{ArgumentGraph, Violation};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assist::{call_with_retries, graph_summary, parse_json, CallFailure};
use crate::provider::{ChatMessage, ChatProvider, ProviderError, Task};

#[derive(Debug, Error)]
pub enum SemanticError {
    #[error("graph violates {} invariant(s)", .0.len())]
    InvalidGraph(Vec<Violation>),
    #[error("provider error on pattern {pattern_id} after {attempts} attempt(s): {source}")]
    Provider {
        pattern_id: String,
        attempts: u32,
        #[source]
        source: ProviderError,
    },
}

/// Findings plus notes about replies that were discarded.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SemanticOutcome {
    pub findings: Vec<Finding>,
    pub diagnostics: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Reply {
    findings: Vec<ReplyFinding>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ReplyFinding {
    #[serde(default)]
    node_ids: Vec<String>,
    #[serde(default)]
    edge_ids: Vec<String>,
    explanation: String,
}

const REPLY_SCHEMA: &str = "Reply with only a JSON object: {\"findings\": [{\"node_ids\": [...], \"edge_ids\": [...], \
\"explanation\": ...}]}. Use only ids that appear in the graph. Reply {\"findings\": []} if the pattern does not occur.";

pub fn render_template(pattern: &Pattern, graph_text: &str) -> String {
    pattern
        .prompt_template
        .as_deref()
        .unwrap_or("{{pattern_name}}: {{description}}\n{{graph}}")
        .replace("{{pattern_id}}", &pattern.id)
        .replace("{{pattern_name}}", &pattern.name)
        .replace("{{description}}", &pattern.description)
        .replace("{{graph}}", graph_text)
}

/// Runs every semantic pattern in `bank` against `graph`.
///
/// An empty graph makes no calls. A reply that never passes the schema, or a
/// finding naming ids absent from the graph, is dropped with a diagnostic.
/// Transport errors abort the run.
pub fn detect_semantic(
    graph: &ArgumentGraph,
    bank: &PatternBank,
    provider: &dyn ChatProvider,
) -> Result<SemanticOutcome, SemanticError> {
    let violations = graph.validate();
    if !violations.is_empty() {
        return Err(SemanticError::InvalidGraph(violations));
    }
    let mut outcome = SemanticOutcome::default();
    if graph.nodes.is_empty() {
        return Ok(outcome);
    }
    let summary = graph_summary(graph);
    for pattern in bank.semantic() {
        let messages = vec![
            ChatMessage::system(format!(
                "You review argument graphs for reasoning patterns. Report each occurrence of the given pattern. \
                 {REPLY_SCHEMA}"
            )),
            ChatMessage::user(render_template(pattern, &summary)),
        ];
        let reply = match call_with_retries(provider, Task::SemanticPattern, messages, parse_json::<Reply>) {
            Ok(reply) => reply,
            Err(CallFailure::Rejected { reason, .. }) => {
                outcome
                    .diagnostics
                    .push(format!("{}: reply discarded: {reason}", pattern.id));
                continue;
            }
            Err(CallFailure::Provider { attempts, source }) => {
                return Err(SemanticError::Provider {
                    pattern_id: pattern.id.clone(),
                    attempts,
                    source,
                })
            }
        };
        for item in reply.findings {
            let unknown: Vec<&str> = item
                .node_ids
                .iter()
                .filter(|id| graph.node(id).is_none())
                .chain(item.edge_ids.iter().filter(|id| graph.edge(id).is_none()))
                .map(String::as_str)
                .collect();
            if !unknown.is_empty() {
                outcome.diagnostics.push(format!(
                    "{}: finding dropped, unknown id(s) {}",
                    pattern.id,
                    unknown.join(", ")
                ));
                continue;
            }
            if item.node_ids.is_empty() && item.edge_ids.is_empty() {
                outcome
                    .diagnostics
                    .push(format!("{}: finding dropped, it names no nodes or edges", pattern.id));
                continue;
            }
            let nodes: BTreeSet<String> = item.node_ids.into_iter().collect();
            let edges: BTreeSet<String> = item.edge_ids.into_iter().collect();
            outcome.findings.push(Finding {
                pattern_id: pattern.id.clone(),
                category: pattern.category,
                involved_node_ids: nodes.into_iter().collect(),
                involved_edge_ids: edges.into_iter().collect(),
                explanation: item.explanation,
                severity: pattern.severity,
                origin: FindingOrigin::Semantic,
            });
        }
    }
    sort_findings(&mut outcome.findings);
    Ok(outcome)
}

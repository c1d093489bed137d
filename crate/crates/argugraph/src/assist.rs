//! Language-model assisted operations.
//!
//! The model only ever answers with closed-set labels inside a strict JSON
//! reply; numbers used for scoring come from the Evans table in the core
//! crate. Replies that fail their schema are retried with the schema error
//! echoed back, up to the provider's retry budget.

use argugraph_core::graph::{ArgumentGraph, Polarity, QualitativeStrength, Relation, Violation};
use argugraph_core::report::Assumption;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::provider::{ChatMessage, ChatProvider, ChatRequest, ProviderError, Task, SNAPSHOT_MARKER};

const EXEMPLARS: &str = include_str!("../assets/assumption_exemplars.txt");

pub const ASSUMPTION_COUNT: usize = 3;

const LABEL_RULES: &str = "Never answer with a number for strength or relevance. \
Use exactly one of the labels: none, very_weak, weak, moderate, strong, very_strong.";

#[derive(Debug, Error)]
pub enum AssistError {
    #[error("precondition failed: {0}")]
    Precondition(&'static str),
    #[error("graph violates {} invariant(s)", .0.len())]
    InvalidGraph(Vec<Violation>),
    #[error("provider error after {attempts} attempt(s): {source}")]
    Provider {
        attempts: u32,
        #[source]
        source: ProviderError,
    },
    #[error("classification failed after {attempts} attempt(s): {reason}")]
    ClassificationFailed { attempts: u32, reason: String },
    #[error("assumption generation failed after {attempts} attempt(s): {reason}")]
    GenerationFailed { attempts: u32, reason: String },
    #[error("extract suggestion failed after {attempts} attempt(s): {reason}")]
    SuggestionFailed { attempts: u32, reason: String },
}

pub(crate) enum CallFailure {
    Provider { attempts: u32, source: ProviderError },
    Rejected { attempts: u32, reason: String },
}

impl CallFailure {
    fn into_error(self, rejected: impl FnOnce(u32, String) -> AssistError) -> AssistError {
        match self {
            CallFailure::Provider { attempts, source } => AssistError::Provider { attempts, source },
            CallFailure::Rejected { attempts, reason } => rejected(attempts, reason),
        }
    }
}

/// Sends `messages`, parsing each reply with `parse`. Transport failures
/// that are retryable and rejected replies consume the retry budget.
pub(crate) fn call_with_retries<T>(
    provider: &dyn ChatProvider,
    task: Task,
    mut messages: Vec<ChatMessage>,
    parse: impl Fn(&str) -> Result<T, String>,
) -> Result<T, CallFailure> {
    let budget = provider.max_retries() + 1;
    let mut attempts = 0;
    loop {
        attempts += 1;
        let request = ChatRequest::new(task, messages.clone());
        match provider.complete(&request) {
            Ok(reply) => match parse(&reply) {
                Ok(value) => return Ok(value),
                Err(reason) => {
                    tracing::warn!(?task, attempts, %reason, "provider reply rejected");
                    if attempts >= budget {
                        return Err(CallFailure::Rejected { attempts, reason });
                    }
                    messages.push(ChatMessage::assistant(reply));
                    messages.push(ChatMessage::user(format!(
                        "Your previous reply was rejected: {reason}. \
                         Reply again with only a JSON object matching the required schema."
                    )));
                }
            },
            Err(source) => {
                tracing::warn!(?task, attempts, error = %source, "provider call failed");
                if !source.is_retryable() || attempts >= budget {
                    return Err(CallFailure::Provider { attempts, source });
                }
            }
        }
    }
}

/// Strict JSON parse of a reply, tolerating a surrounding Markdown fence.
pub(crate) fn parse_json<T: DeserializeOwned>(reply: &str) -> Result<T, String> {
    let mut body = reply.trim();
    if let Some(rest) = body.strip_prefix("```") {
        body = rest.trim_start_matches("json").trim_start();
        body = body.strip_suffix("```").unwrap_or(body).trim();
    }
    serde_json::from_str(body).map_err(|e| format!("reply is not valid JSON for the schema ({e})"))
}

pub(crate) fn snapshot_message(graph: &ArgumentGraph) -> ChatMessage {
    let json = serde_json::to_string(graph).expect("graph documents always serialize");
    ChatMessage::system(format!("{SNAPSHOT_MARKER}\n{json}"))
}

/// Compact, id-preserving text rendering of a graph for prompts.
pub fn graph_summary(graph: &ArgumentGraph) -> String {
    let mut out = format!("Title: {}\nClaims:\n", graph.title);
    for n in &graph.nodes {
        let supporting = n.evidence.iter().filter(|e| e.polarity == Polarity::Supporting).count();
        out.push_str(&format!(
            "- {} [{}] {:?} (evidence: {} supporting, {} negating)\n",
            n.id,
            n.claim_type.as_str(),
            n.text,
            supporting,
            n.evidence.len() - supporting
        ));
        for e in &n.evidence {
            out.push_str(&format!(
                "  - evidence {} {} {}: {:?}\n",
                e.id,
                e.polarity.as_str(),
                e.strength,
                e.excerpt
            ));
        }
    }
    out.push_str("Edges:\n");
    for e in &graph.edges {
        out.push_str(&format!(
            "- {}: {} -> {} {} ({})\n",
            e.id,
            e.source_id,
            e.target_id,
            e.relation.as_str(),
            e.strength
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeClassification {
    pub relation: Relation,
    pub strength: QualitativeStrength,
    pub justification: String,
}

pub fn classify_edge(
    provider: &dyn ChatProvider,
    source_claim: &str,
    target_claim: &str,
) -> Result<EdgeClassification, AssistError> {
    if source_claim.trim().is_empty() || target_claim.trim().is_empty() {
        return Err(AssistError::Precondition("both claim texts must be non-empty"));
    }
    let messages = vec![
        ChatMessage::system(format!(
            "You classify the relation between two claims in an argumentative essay. \
             Decide whether the SOURCE claim supports or attacks the TARGET claim and how strongly. {LABEL_RULES} \
             Reply with only a JSON object: \
             {{\"relation\": \"support\" | \"attack\", \"strength\": <label>, \"justification\": <one or two sentences>}}"
        )),
        ChatMessage::user(format!("SOURCE: {source_claim}\nTARGET: {target_claim}")),
    ];
    call_with_retries(provider, Task::ClassifyEdge, messages, parse_json::<EdgeClassification>)
        .map_err(|f| f.into_error(|attempts, reason| AssistError::ClassificationFailed { attempts, reason }))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvidenceAssessment {
    pub polarity: Polarity,
    pub strength: QualitativeStrength,
    pub justification: String,
}

pub fn assess_evidence(
    provider: &dyn ChatProvider,
    claim: &str,
    evidence_excerpt: &str,
) -> Result<EvidenceAssessment, AssistError> {
    if claim.trim().is_empty() || evidence_excerpt.trim().is_empty() {
        return Err(AssistError::Precondition(
            "claim and evidence excerpt must be non-empty",
        ));
    }
    let messages = vec![
        ChatMessage::system(format!(
            "You assess how a piece of evidence bears on a claim. Decide whether it supports or negates the claim \
             and how strongly. {LABEL_RULES} Reply with only a JSON object: \
             {{\"polarity\": \"supporting\" | \"negating\", \"strength\": <label>, \"justification\": <one or two sentences>}}"
        )),
        ChatMessage::user(format!("CLAIM: {claim}\nEVIDENCE: {evidence_excerpt}")),
    ];
    call_with_retries(
        provider,
        Task::AssessEvidence,
        messages,
        parse_json::<EvidenceAssessment>,
    )
    .map_err(|f| f.into_error(|attempts, reason| AssistError::ClassificationFailed { attempts, reason }))
}

/// A plain-text source document that extracts are suggested from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceDocument {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    pub text: String,
}

/// A verbatim slice of a document. Offsets count Unicode scalar values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractSuggestion {
    pub document_id: String,
    pub start_offset: usize,
    pub end_offset: usize,
    pub excerpt: String,
    pub relevance: QualitativeStrength,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Suggestions {
    pub suggestions: Vec<ExtractSuggestion>,
    pub diagnostics: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExtractReply {
    extracts: Vec<QuotedExtract>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct QuotedExtract {
    excerpt: String,
    relevance: QualitativeStrength,
}

/// Character span of the first verbatim occurrence of `needle`.
fn locate(haystack: &str, needle: &str) -> Option<(usize, usize)> {
    if needle.is_empty() {
        return None;
    }
    let byte = haystack.find(needle)?;
    let start = haystack[..byte].chars().count();
    Some((start, start + needle.chars().count()))
}

pub fn suggest_extracts(
    provider: &dyn ChatProvider,
    document: &SourceDocument,
    claim: &str,
    max_suggestions: usize,
) -> Result<Suggestions, AssistError> {
    if document.text.trim().is_empty() {
        return Err(AssistError::Precondition("document must be non-empty"));
    }
    if max_suggestions == 0 {
        return Err(AssistError::Precondition("max_suggestions must be at least 1"));
    }
    if claim.trim().is_empty() {
        return Err(AssistError::Precondition("claim must be non-empty"));
    }
    let messages = vec![
        ChatMessage::system(format!(
            "You find passages in a document that are relevant evidence for a claim. Quote each passage exactly \
             as it appears, character for character. Suggest at most {max_suggestions} passages. {LABEL_RULES} \
             Reply with only a JSON object: {{\"extracts\": [{{\"excerpt\": <verbatim quote>, \"relevance\": <label>}}]}}"
        )),
        ChatMessage::user(format!("CLAIM: {claim}\n<document>\n{}\n</document>", document.text)),
    ];
    let reply = call_with_retries(provider, Task::SuggestExtracts, messages, parse_json::<ExtractReply>)
        .map_err(|f| f.into_error(|attempts, reason| AssistError::SuggestionFailed { attempts, reason }))?;

    let mut out = Suggestions::default();
    for quoted in reply.extracts {
        if out.suggestions.len() == max_suggestions {
            break;
        }
        if out.suggestions.iter().any(|s| s.excerpt == quoted.excerpt) {
            out.diagnostics
                .push(format!("duplicate excerpt dropped: {:?}", quoted.excerpt));
            continue;
        }
        match locate(&document.text, &quoted.excerpt) {
            Some((start_offset, end_offset)) => out.suggestions.push(ExtractSuggestion {
                document_id: document.id.clone(),
                start_offset,
                end_offset,
                excerpt: quoted.excerpt,
                relevance: quoted.relevance,
            }),
            None => out
                .diagnostics
                .push(format!("excerpt not found verbatim in document: {:?}", quoted.excerpt)),
        }
    }
    Ok(out)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AssumptionReply {
    assumptions: Vec<Assumption>,
}

fn exemplars() -> String {
    EXEMPLARS
        .lines()
        .filter(|l| !l.starts_with('#'))
        .collect::<Vec<_>>()
        .join("\n")
        .trim()
        .to_string()
}

fn parse_assumptions(reply: &str) -> Result<Vec<Assumption>, String> {
    let parsed: AssumptionReply = parse_json(reply)?;
    if parsed.assumptions.len() != ASSUMPTION_COUNT {
        return Err(format!(
            "expected exactly {ASSUMPTION_COUNT} assumptions, got {}",
            parsed.assumptions.len()
        ));
    }
    for a in &parsed.assumptions {
        a.check()?;
    }
    Ok(parsed.assumptions)
}

/// Three implicit premises that would strengthen the link from source to
/// target, each with an importance rating from 1 to 5.
pub fn generate_assumptions(
    provider: &dyn ChatProvider,
    source_claim: &str,
    target_claim: &str,
    relation: Relation,
) -> Result<Vec<Assumption>, AssistError> {
    if source_claim.trim().is_empty() || target_claim.trim().is_empty() {
        return Err(AssistError::Precondition("both claim texts must be non-empty"));
    }
    let messages = vec![
        ChatMessage::system(format!(
            "You identify hidden premises in arguments. Given a SOURCE claim, a TARGET claim and their RELATION, \
             state exactly three implicit assumptions that would make the relation hold more robustly. \
             Rate each assumption's importance as an integer from 1 (minor) to 5 (essential) and justify it. \
             Reply with only a JSON object: {{\"assumptions\": [{{\"text\": ..., \"importance\": 1-5, \
             \"justification\": ...}}, ...]}}\n\nExamples:\n{}",
            exemplars()
        )),
        ChatMessage::user(format!(
            "SOURCE: {source_claim}\nTARGET: {target_claim}\nRELATION: {}\nASSUMPTIONS:",
            relation.as_str()
        )),
    ];
    call_with_retries(provider, Task::GenerateAssumptions, messages, parse_assumptions)
        .map_err(|f| f.into_error(|attempts, reason| AssistError::GenerationFailed { attempts, reason }))
}

/// Copilot conversation state. Only the user/assistant turns are kept; the
/// graph snapshot is rebuilt on every call.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatSession {
    pub id: String,
    pub turns: Vec<ChatMessage>,
}

impl ChatSession {
    pub fn new(id: impl Into<String>) -> Self {
        ChatSession {
            id: id.into(),
            turns: Vec::new(),
        }
    }
}

/// One copilot exchange. The session is left untouched on failure.
pub fn chat(
    provider: &dyn ChatProvider,
    session: &mut ChatSession,
    graph: &ArgumentGraph,
    user_message: &str,
) -> Result<String, AssistError> {
    if user_message.trim().is_empty() {
        return Err(AssistError::Precondition("message must be non-empty"));
    }
    let mut messages = vec![
        ChatMessage::system(
            "You are a writing copilot helping a user understand and improve an argumentative essay modelled as a \
             graph of claims, evidence and support/attack edges. Ground every answer in the current graph below; \
             point out strengths, weaknesses and gaps, and refer to claims by id.",
        ),
        snapshot_message(graph),
    ];
    messages.extend(session.turns.iter().cloned());
    messages.push(ChatMessage::user(user_message));
    let reply = call_with_retries(provider, Task::Chat, messages, |reply| {
        if reply.trim().is_empty() {
            Err("reply is empty".to_string())
        } else {
            Ok(reply.to_string())
        }
    })
    .map_err(|f| match f {
        CallFailure::Provider { attempts, source } => AssistError::Provider { attempts, source },
        CallFailure::Rejected { attempts, reason } => AssistError::Provider {
            attempts,
            source: ProviderError::Malformed(reason),
        },
    })?;
    session.turns.push(ChatMessage::user(user_message));
    session.turns.push(ChatMessage::assistant(reply.clone()));
    Ok(reply)
}

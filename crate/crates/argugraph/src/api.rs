//! HTTP service.
//!
//! All bodies are JSON except `POST /documents`, which also takes raw text.
//! Errors are `{code, message, details}` objects. Handlers run their storage
//! and provider work on the blocking pool; storage is synchronous file IO and
//! live providers use a blocking HTTP client.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::Path;
use std::sync::{Arc, Mutex};

use argugraph_core::credibility::{compute_scores, PropagationConfig, PropagationError, PropagationResult};
use argugraph_core::critique::{detect_structural, sort_findings, CritiqueError, Finding, PatternBank};
use argugraph_core::graph::{
    ArgumentGraph, ClaimNode, ClaimType, Edge, ErrorClass, Evidence, GraphError, NewEdge, NewEvidence, Origin,
    Polarity, QualitativeStrength, Relation,
};
use argugraph_core::report::{EdgeAssumptions, Report};
use axum::body::Bytes;
use axum::extract::rejection::QueryRejection;
use axum::extract::{Path as UrlPath, Query, Request, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::assist::{self, AssistError, ChatSession, EdgeClassification, SourceDocument, Suggestions};
use crate::document::{self, DocumentError};
use crate::provider::{ChatProvider, ProviderError, Unconfigured};
use crate::reporting::generate_report;
use crate::semantic::{detect_semantic, SemanticError};
use crate::store::{DocumentStore, GraphStore, StoreError, StoredGraph, TaggedPropagation};

pub const ENV_API_TOKEN: &str = "ARGUGRAPH_API_TOKEN";

const DEFAULT_SUGGESTIONS: usize = 3;
const MAX_SUGGESTIONS: usize = 20;

pub struct AppState {
    pub graphs: GraphStore,
    pub documents: DocumentStore,
    pub provider: Option<Arc<dyn ChatProvider>>,
    pub bank: PatternBank,
    /// Bearer token required on every route but `/health`. `None` disables
    /// authentication.
    pub token: Option<String>,
    sessions: Mutex<HashMap<(String, String), ChatSession>>,
}

impl AppState {
    pub fn new(
        data_dir: impl AsRef<Path>,
        provider: Option<Arc<dyn ChatProvider>>,
        bank: PatternBank,
        token: Option<String>,
    ) -> Result<Self, StoreError> {
        Ok(AppState {
            graphs: GraphStore::open(&data_dir)?,
            documents: DocumentStore::open(&data_dir)?,
            provider,
            bank,
            token: token.filter(|t| !t.is_empty()),
            sessions: Mutex::new(HashMap::new()),
        })
    }

    fn provider(&self) -> Arc<dyn ChatProvider> {
        self.provider.clone().unwrap_or_else(|| Arc::new(Unconfigured))
    }
}

type Shared = Arc<AppState>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    #[serde(default)]
    pub details: Value,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
    details: Value,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
            details: Value::Null,
        }
    }

    fn details(mut self, details: Value) -> Self {
        self.details = details;
        self
    }

    fn unprocessable(code: &'static str, message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, code, message)
    }

    fn not_found(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "not_found", message)
    }

    fn internal(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal_error", message)
    }

    pub fn status(&self) -> StatusCode {
        self.status
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        if self.status.is_server_error() {
            tracing::error!(code = self.code, message = %self.message, "request failed");
        }
        let body = ErrorBody {
            code: self.code.to_string(),
            message: self.message,
            details: self.details,
        };
        (self.status, Json(body)).into_response()
    }
}

impl From<StoreError> for ApiError {
    fn from(err: StoreError) -> Self {
        let message = err.to_string();
        match err {
            StoreError::NotFound { .. } => ApiError::not_found(message),
            StoreError::AlreadyExists(id) => {
                ApiError::new(StatusCode::CONFLICT, "already_exists", message).details(json!({ "id": id }))
            }
            StoreError::Conflict { expected, actual } => {
                ApiError::new(StatusCode::CONFLICT, "revision_conflict", message)
                    .details(json!({ "expected_revision": expected, "current_revision": actual }))
            }
            StoreError::InvalidId(_) => ApiError::unprocessable("invalid_id", message),
            StoreError::Invalid(violations) => {
                ApiError::unprocessable("invalid_graph", message).details(json!({ "violations": violations }))
            }
            StoreError::Corrupt { .. } | StoreError::Io(_) => ApiError::internal(message),
        }
    }
}

impl From<GraphError> for ApiError {
    fn from(err: GraphError) -> Self {
        let message = err.to_string();
        match err.class() {
            ErrorClass::Validation => ApiError::unprocessable("validation_error", message),
            ErrorClass::NotFound => ApiError::not_found(message),
            ErrorClass::Conflict => ApiError::new(StatusCode::CONFLICT, "duplicate", message),
        }
    }
}

impl From<DocumentError> for ApiError {
    fn from(err: DocumentError) -> Self {
        let message = err.to_string();
        match err {
            DocumentError::Parse { line, column, .. } => {
                ApiError::new(StatusCode::BAD_REQUEST, "invalid_json", message)
                    .details(json!({ "line": line, "column": column }))
            }
            DocumentError::Timestamp { field, value } => {
                ApiError::unprocessable("invalid_timestamp", message).details(json!({ "field": field, "value": value }))
            }
            DocumentError::Invalid(violations) => {
                ApiError::unprocessable("invalid_graph", message).details(json!({ "violations": violations }))
            }
        }
    }
}

fn provider_error(attempts: u32, source: ProviderError) -> ApiError {
    let message = format!("{source} (after {attempts} attempt(s))");
    let (status, code) = match source {
        ProviderError::NotConfigured => (StatusCode::SERVICE_UNAVAILABLE, "provider_unavailable"),
        ProviderError::Timeout { .. } => (StatusCode::GATEWAY_TIMEOUT, "provider_timeout"),
        _ => (StatusCode::BAD_GATEWAY, "provider_error"),
    };
    ApiError::new(status, code, message).details(json!({ "attempts": attempts }))
}

impl From<AssistError> for ApiError {
    fn from(err: AssistError) -> Self {
        let message = err.to_string();
        match err {
            AssistError::Precondition(_) => ApiError::unprocessable("precondition_failed", message),
            AssistError::InvalidGraph(violations) => {
                ApiError::unprocessable("invalid_graph", message).details(json!({ "violations": violations }))
            }
            AssistError::Provider { attempts, source } => provider_error(attempts, source),
            AssistError::ClassificationFailed { attempts, .. }
            | AssistError::GenerationFailed { attempts, .. }
            | AssistError::SuggestionFailed { attempts, .. } => {
                ApiError::new(StatusCode::BAD_GATEWAY, "provider_reply_rejected", message)
                    .details(json!({ "attempts": attempts }))
            }
        }
    }
}

impl From<SemanticError> for ApiError {
    fn from(err: SemanticError) -> Self {
        match err {
            SemanticError::InvalidGraph(violations) => ApiError::unprocessable("invalid_graph", "graph is invalid")
                .details(json!({ "violations": violations })),
            SemanticError::Provider { attempts, source, .. } => provider_error(attempts, source),
        }
    }
}

impl From<CritiqueError> for ApiError {
    fn from(err: CritiqueError) -> Self {
        let CritiqueError::InvalidGraph(violations) = &err;
        let details = json!({ "violations": violations });
        ApiError::unprocessable("invalid_graph", err.to_string()).details(details)
    }
}

impl From<PropagationError> for ApiError {
    fn from(err: PropagationError) -> Self {
        let message = err.to_string();
        match err {
            PropagationError::InvalidGraph(violations) => {
                ApiError::unprocessable("invalid_graph", message).details(json!({ "violations": violations }))
            }
            PropagationError::Config(_) => ApiError::unprocessable("invalid_parameters", message),
        }
    }
}

fn parse_body<T: DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| {
        ApiError::new(StatusCode::BAD_REQUEST, "invalid_json", e.to_string())
            .details(json!({ "line": e.line(), "column": e.column() }))
    })
}

/// Like [`parse_body`], with an empty body meaning the default.
fn parse_optional_body<T: DeserializeOwned + Default>(body: &[u8]) -> Result<T, ApiError> {
    if body.iter().all(u8::is_ascii_whitespace) {
        Ok(T::default())
    } else {
        parse_body(body)
    }
}

fn query<T>(q: Result<Query<T>, QueryRejection>) -> Result<T, ApiError> {
    q.map(|Query(v)| v)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid_query", e.body_text()))
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(format!("worker failed: {e}")))?
}

/// A stored graph as returned to clients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphView {
    pub revision: u64,
    /// True while any claim's score predates the latest edit.
    pub credibility_stale: bool,
    pub stale_node_ids: Vec<String>,
    pub graph: ArgumentGraph,
    pub last_propagation: Option<TaggedPropagation>,
}

fn stale_ids(graph: &ArgumentGraph) -> Vec<String> {
    graph.stale_node_ids().into_iter().map(str::to_string).collect()
}

impl From<StoredGraph> for GraphView {
    fn from(stored: StoredGraph) -> Self {
        let stale_node_ids = stale_ids(&stored.graph);
        GraphView {
            revision: stored.revision,
            credibility_stale: !stale_node_ids.is_empty(),
            stale_node_ids,
            graph: stored.graph,
            last_propagation: stored.last_propagation,
        }
    }
}

/// Response to an incremental edit: the touched element plus stale markers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MutationView<T> {
    pub revision: u64,
    pub credibility_stale: bool,
    pub stale_node_ids: Vec<String>,
    pub item: T,
}

impl<T> MutationView<T> {
    fn new(item: T, stored: &StoredGraph) -> Self {
        let stale_node_ids = stale_ids(&stored.graph);
        MutationView {
            revision: stored.revision,
            credibility_stale: !stale_node_ids.is_empty(),
            stale_node_ids,
            item,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RevisionQuery {
    /// Reject the edit with a conflict unless this is the stored revision.
    pub expected_revision: Option<u64>,
}

fn mutate<T: Clone>(
    state: &AppState,
    id: &str,
    expected_revision: Option<u64>,
    f: impl FnOnce(&mut ArgumentGraph) -> Result<T, GraphError>,
) -> Result<MutationView<T>, ApiError> {
    let (item, stored) = state.graphs.update(id, expected_revision, |g| {
        let item = f(g)?;
        document::touch(g);
        Ok::<_, GraphError>(item)
    })??;
    Ok(MutationView::new(item, &stored))
}

async fn health() -> Json<Value> {
    Json(json!({ "status": "ok" }))
}

async fn list_graphs(State(state): State<Shared>) -> Result<Json<Value>, ApiError> {
    let ids = blocking(move || Ok(state.graphs.list()?)).await?;
    Ok(Json(json!({ "graph_ids": ids })))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NewGraphBody {
    id: Option<String>,
    title: String,
    delta: Option<f64>,
}

/// Accepts either `{title, id?, delta?}` or a complete graph document.
async fn create_graph(State(state): State<Shared>, body: Bytes) -> Result<(StatusCode, Json<GraphView>), ApiError> {
    let value: Value = parse_body(&body)?;
    let graph = if value.get("nodes").is_some() {
        document::deserialize(&String::from_utf8_lossy(&body))?
    } else {
        let new: NewGraphBody = parse_body(&body)?;
        let id = new.id.unwrap_or_else(|| uuid::Uuid::new_v4().simple().to_string());
        let mut graph = ArgumentGraph::new(id, new.title, document::now_rfc3339());
        if let Some(delta) = new.delta {
            graph.set_delta(delta)?;
        }
        graph
    };
    let stored = blocking(move || Ok(state.graphs.create(graph)?)).await?;
    Ok((StatusCode::CREATED, Json(stored.into())))
}

async fn get_graph(State(state): State<Shared>, UrlPath(id): UrlPath<String>) -> Result<Json<GraphView>, ApiError> {
    let stored = blocking(move || Ok(state.graphs.load(&id)?)).await?;
    Ok(Json(stored.into()))
}

async fn put_graph(
    State(state): State<Shared>,
    UrlPath(id): UrlPath<String>,
    q: Result<Query<RevisionQuery>, QueryRejection>,
    body: Bytes,
) -> Result<Json<GraphView>, ApiError> {
    let expected = query(q)?.expected_revision;
    let graph = document::deserialize(&String::from_utf8_lossy(&body))?;
    if graph.id != id {
        return Err(ApiError::unprocessable(
            "id_mismatch",
            format!("document id {:?} does not match path id {id:?}", graph.id),
        ));
    }
    let stored = blocking(move || {
        state.graphs.persist(graph, expected)?;
        Ok(state.graphs.load(&id)?)
    })
    .await?;
    Ok(Json(stored.into()))
}

async fn delete_graph(State(state): State<Shared>, UrlPath(id): UrlPath<String>) -> Result<StatusCode, ApiError> {
    blocking(move || Ok(state.graphs.delete(&id)?)).await?;
    Ok(StatusCode::NO_CONTENT)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NewClaimBody {
    id: Option<String>,
    text: String,
    claim_type: ClaimType,
}

async fn add_claim(
    State(state): State<Shared>,
    UrlPath(id): UrlPath<String>,
    q: Result<Query<RevisionQuery>, QueryRejection>,
    body: Bytes,
) -> Result<(StatusCode, Json<MutationView<ClaimNode>>), ApiError> {
    let expected = query(q)?.expected_revision;
    let new: NewClaimBody = parse_body(&body)?;
    let view = blocking(move || {
        mutate(&state, &id, expected, |g| match new.id {
            Some(cid) => g.add_claim_with_id(cid, new.text, new.claim_type).cloned(),
            None => g.add_claim(new.text, new.claim_type).cloned(),
        })
    })
    .await?;
    Ok((StatusCode::CREATED, Json(view)))
}

async fn delete_claim(
    State(state): State<Shared>,
    UrlPath((id, cid)): UrlPath<(String, String)>,
    q: Result<Query<RevisionQuery>, QueryRejection>,
) -> Result<Json<MutationView<ClaimNode>>, ApiError> {
    let expected = query(q)?.expected_revision;
    let view = blocking(move || mutate(&state, &id, expected, |g| g.remove_claim(&cid))).await?;
    Ok(Json(view))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NewEdgeBody {
    id: Option<String>,
    source_id: String,
    target_id: String,
    relation: Relation,
    strength: QualitativeStrength,
    #[serde(default)]
    justification: String,
    origin: Option<Origin>,
}

async fn add_edge(
    State(state): State<Shared>,
    UrlPath(id): UrlPath<String>,
    q: Result<Query<RevisionQuery>, QueryRejection>,
    body: Bytes,
) -> Result<(StatusCode, Json<MutationView<Edge>>), ApiError> {
    let expected = query(q)?.expected_revision;
    let new: NewEdgeBody = parse_body(&body)?;
    let mut edge = NewEdge::new(new.source_id, new.target_id, new.relation, new.strength)
        .justification(new.justification)
        .origin(new.origin.unwrap_or(Origin::HumanOverride));
    if let Some(eid) = new.id {
        edge = edge.with_id(eid);
    }
    let view = blocking(move || mutate(&state, &id, expected, |g| g.add_edge(edge).cloned())).await?;
    Ok((StatusCode::CREATED, Json(view)))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RelabelEdgeBody {
    relation: Relation,
    strength: QualitativeStrength,
    #[serde(default)]
    justification: String,
    origin: Option<Origin>,
}

async fn relabel_edge(
    State(state): State<Shared>,
    UrlPath((id, eid)): UrlPath<(String, String)>,
    q: Result<Query<RevisionQuery>, QueryRejection>,
    body: Bytes,
) -> Result<Json<MutationView<Edge>>, ApiError> {
    let expected = query(q)?.expected_revision;
    let b: RelabelEdgeBody = parse_body(&body)?;
    let origin = b.origin.unwrap_or(Origin::HumanOverride);
    let view = blocking(move || {
        mutate(&state, &id, expected, |g| {
            g.relabel_edge(&eid, b.relation, b.strength, b.justification, origin)
                .cloned()
        })
    })
    .await?;
    Ok(Json(view))
}

async fn delete_edge(
    State(state): State<Shared>,
    UrlPath((id, eid)): UrlPath<(String, String)>,
    q: Result<Query<RevisionQuery>, QueryRejection>,
) -> Result<Json<MutationView<Edge>>, ApiError> {
    let expected = query(q)?.expected_revision;
    let view = blocking(move || mutate(&state, &id, expected, |g| g.remove_edge(&eid))).await?;
    Ok(Json(view))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NewEvidenceBody {
    id: Option<String>,
    excerpt: String,
    polarity: Option<Polarity>,
    strength: Option<QualitativeStrength>,
    #[serde(default)]
    justification: String,
    origin: Option<Origin>,
    source_document: Option<String>,
    /// Ask the provider for polarity, strength and justification.
    #[serde(default)]
    assess: bool,
}

async fn add_evidence(
    State(state): State<Shared>,
    UrlPath((id, cid)): UrlPath<(String, String)>,
    q: Result<Query<RevisionQuery>, QueryRejection>,
    body: Bytes,
) -> Result<(StatusCode, Json<MutationView<Evidence>>), ApiError> {
    let expected = query(q)?.expected_revision;
    let b: NewEvidenceBody = parse_body(&body)?;
    let view = blocking(move || {
        let (polarity, strength, justification, origin) = if b.assess {
            let snapshot = state.graphs.load(&id)?;
            let claim = snapshot
                .graph
                .node(&cid)
                .ok_or_else(|| ApiError::from(GraphError::NodeNotFound(cid.clone())))?;
            let a = assist::assess_evidence(&state.provider(), &claim.text, &b.excerpt)?;
            (a.polarity, a.strength, a.justification, Origin::Machine)
        } else {
            match (b.polarity, b.strength) {
                (Some(p), Some(s)) => (p, s, b.justification, b.origin.unwrap_or(Origin::HumanOverride)),
                _ => {
                    return Err(ApiError::unprocessable(
                        "validation_error",
                        "polarity and strength are required unless assess is true",
                    ))
                }
            }
        };
        let mut new = NewEvidence::new(b.excerpt, polarity, strength)
            .justification(justification)
            .origin(origin);
        if let Some(eid) = b.id {
            new = new.with_id(eid);
        }
        if let Some(doc) = b.source_document {
            new = new.source_document(doc);
        }
        mutate(&state, &id, expected, |g| g.add_evidence(&cid, new).cloned())
    })
    .await?;
    Ok((StatusCode::CREATED, Json(view)))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassifyBody {
    source_id: String,
    target_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationView {
    pub source_id: String,
    pub target_id: String,
    pub origin: Origin,
    #[serde(flatten)]
    pub classification: EdgeClassification,
}

async fn classify_edge(
    State(state): State<Shared>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> Result<Json<ClassificationView>, ApiError> {
    let b: ClassifyBody = parse_body(&body)?;
    let view = blocking(move || {
        let stored = state.graphs.load(&id)?;
        let text = |nid: &str| {
            stored
                .graph
                .node(nid)
                .map(|n| n.text.clone())
                .ok_or_else(|| ApiError::from(GraphError::NodeNotFound(nid.into())))
        };
        let classification = assist::classify_edge(&state.provider(), &text(&b.source_id)?, &text(&b.target_id)?)?;
        Ok(ClassificationView {
            source_id: b.source_id,
            target_id: b.target_id,
            origin: Origin::Machine,
            classification,
        })
    })
    .await?;
    Ok(Json(view))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagateQuery {
    pub delta: Option<f64>,
    pub epsilon: Option<f64>,
    pub max_iters: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagationView {
    /// Revision holding the written-back scores.
    pub revision: u64,
    #[serde(flatten)]
    pub result: PropagationResult,
}

async fn propagate(
    State(state): State<Shared>,
    UrlPath(id): UrlPath<String>,
    q: Result<Query<PropagateQuery>, QueryRejection>,
) -> Result<Json<PropagationView>, ApiError> {
    let q = query(q)?;
    let view = blocking(move || {
        let snapshot = state.graphs.load(&id)?;
        let mut config = PropagationConfig::for_graph(&snapshot.graph);
        if let Some(d) = q.delta {
            config = config.with_delta(d);
        }
        if let Some(e) = q.epsilon {
            config = config.with_epsilon(e);
        }
        if let Some(m) = q.max_iters {
            config = config.with_max_iterations(m);
        }
        let result = compute_scores(&snapshot.graph, &config)?;
        if !result.converged {
            tracing::warn!(graph = %id, iterations = result.iterations_used, "propagation did not converge");
        }
        let stored = state
            .graphs
            .persist_propagation(&id, snapshot.revision, result.clone())?;
        Ok(PropagationView {
            revision: stored.revision,
            result,
        })
    })
    .await?;
    Ok(Json(view))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CritiqueBody {
    #[serde(default)]
    semantic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CritiqueView {
    pub revision: u64,
    pub findings: Vec<Finding>,
    pub diagnostics: Vec<String>,
}

async fn critique(
    State(state): State<Shared>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> Result<Json<CritiqueView>, ApiError> {
    let b: CritiqueBody = parse_optional_body(&body)?;
    let view = blocking(move || {
        let snapshot = state.graphs.load(&id)?;
        let mut findings = detect_structural(&snapshot.graph, &state.bank)?;
        let mut diagnostics = Vec::new();
        if b.semantic {
            let outcome = detect_semantic(&snapshot.graph, &state.bank, &state.provider())?;
            findings.extend(outcome.findings);
            diagnostics = outcome.diagnostics;
        }
        sort_findings(&mut findings);
        Ok(CritiqueView {
            revision: snapshot.revision,
            findings,
            diagnostics,
        })
    })
    .await?;
    Ok(Json(view))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AssumptionsBody {
    edge_id: String,
}

async fn assumptions(
    State(state): State<Shared>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> Result<Json<EdgeAssumptions>, ApiError> {
    let b: AssumptionsBody = parse_body(&body)?;
    let view = blocking(move || {
        let snapshot = state.graphs.load(&id)?;
        let g = &snapshot.graph;
        let edge = g
            .edge(&b.edge_id)
            .ok_or_else(|| ApiError::from(GraphError::EdgeNotFound(b.edge_id.clone())))?;
        let text = |nid: &str| g.node(nid).map_or("", |n| n.text.as_str());
        let assumptions = assist::generate_assumptions(
            &state.provider(),
            text(&edge.source_id),
            text(&edge.target_id),
            edge.relation,
        )?;
        Ok(EdgeAssumptions {
            edge_id: b.edge_id,
            assumptions,
        })
    })
    .await?;
    Ok(Json(view))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReportBody {
    #[serde(default)]
    assumptions: Vec<EdgeAssumptions>,
}

/// Uses the stored propagation when it matches the current revision, and a
/// fresh (unsaved) computation otherwise.
async fn report(
    State(state): State<Shared>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> Result<Json<Report>, ApiError> {
    let b: ReportBody = parse_optional_body(&body)?;
    for ea in &b.assumptions {
        for a in &ea.assumptions {
            a.check().map_err(|reason| {
                ApiError::unprocessable("validation_error", format!("edge {}: {reason}", ea.edge_id))
            })?;
        }
    }
    let report = blocking(move || {
        let snapshot = state.graphs.load(&id)?;
        let g = &snapshot.graph;
        let propagation = match snapshot.last_propagation {
            Some(p) if p.revision == snapshot.revision => p.result,
            _ => compute_scores(g, &PropagationConfig::for_graph(g))?,
        };
        let findings = detect_structural(g, &state.bank)?;
        let provider = state.provider.as_deref();
        Ok(generate_report(
            g,
            &propagation,
            &findings,
            &b.assumptions,
            provider,
            &g.metadata.modified_at,
        ))
    })
    .await?;
    Ok(Json(report))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ChatBody {
    message: String,
    session_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatView {
    pub session_id: String,
    pub revision: u64,
    pub reply: String,
}

async fn chat(
    State(state): State<Shared>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> Result<Json<ChatView>, ApiError> {
    let b: ChatBody = parse_body(&body)?;
    let view = blocking(move || {
        let snapshot = state.graphs.load(&id)?;
        let session_id = b
            .session_id
            .unwrap_or_else(|| uuid::Uuid::new_v4().simple().to_string());
        let key = (id.clone(), session_id.clone());
        let mut session = {
            let sessions = state.sessions.lock().expect("session table poisoned");
            sessions
                .get(&key)
                .cloned()
                .unwrap_or_else(|| ChatSession::new(session_id.clone()))
        };
        let reply = assist::chat(&state.provider(), &mut session, &snapshot.graph, &b.message)?;
        state
            .sessions
            .lock()
            .expect("session table poisoned")
            .insert(key, session);
        Ok(ChatView {
            session_id,
            revision: snapshot.revision,
            reply,
        })
    })
    .await?;
    Ok(Json(view))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DocumentBody {
    title: Option<String>,
    text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentView {
    pub document_id: String,
    pub title: Option<String>,
    /// Length in characters; suggestion offsets index into this.
    pub length: usize,
}

/// Stores plain text. A JSON body `{text, title?}` is accepted when the
/// content type says so; anything else is taken as UTF-8 text.
async fn upload_document(
    State(state): State<Shared>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<(StatusCode, Json<DocumentView>), ApiError> {
    let is_json = headers
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.starts_with("application/json"));
    let (title, text) = if is_json {
        let b: DocumentBody = parse_body(&body)?;
        (b.title, b.text)
    } else {
        let text = String::from_utf8(body.to_vec())
            .map_err(|_| ApiError::new(StatusCode::BAD_REQUEST, "invalid_text", "document is not valid UTF-8"))?;
        (None, text)
    };
    if text.trim().is_empty() {
        return Err(ApiError::unprocessable(
            "validation_error",
            "document text must not be empty",
        ));
    }
    let doc = SourceDocument {
        id: uuid::Uuid::new_v4().simple().to_string(),
        title,
        text,
    };
    let view = DocumentView {
        document_id: doc.id.clone(),
        title: doc.title.clone(),
        length: doc.text.chars().count(),
    };
    blocking(move || Ok(state.documents.put(&doc)?)).await?;
    Ok((StatusCode::CREATED, Json(view)))
}

async fn get_document(
    State(state): State<Shared>,
    UrlPath(id): UrlPath<String>,
) -> Result<Json<SourceDocument>, ApiError> {
    Ok(Json(blocking(move || Ok(state.documents.get(&id)?)).await?))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SuggestBody {
    graph_id: String,
    claim_id: String,
    max_suggestions: Option<usize>,
}

async fn suggest(
    State(state): State<Shared>,
    UrlPath(doc_id): UrlPath<String>,
    body: Bytes,
) -> Result<Json<Suggestions>, ApiError> {
    let b: SuggestBody = parse_body(&body)?;
    let max = b.max_suggestions.unwrap_or(DEFAULT_SUGGESTIONS);
    if !(1..=MAX_SUGGESTIONS).contains(&max) {
        return Err(ApiError::unprocessable(
            "validation_error",
            format!("max_suggestions must be between 1 and {MAX_SUGGESTIONS}"),
        ));
    }
    let out = blocking(move || {
        let doc = state.documents.get(&doc_id)?;
        let stored = state.graphs.load(&b.graph_id)?;
        let claim = stored
            .graph
            .node(&b.claim_id)
            .ok_or_else(|| ApiError::from(GraphError::NodeNotFound(b.claim_id.clone())))?;
        Ok(assist::suggest_extracts(&state.provider(), &doc, &claim.text, max)?)
    })
    .await?;
    Ok(Json(out))
}

async fn require_token(State(state): State<Shared>, request: Request, next: Next) -> Response {
    if let Some(token) = &state.token {
        let presented = request
            .headers()
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "));
        if presented != Some(token.as_str()) {
            return ApiError::new(
                StatusCode::UNAUTHORIZED,
                "unauthorized",
                "missing or invalid bearer token",
            )
            .into_response();
        }
    }
    next.run(request).await
}

async fn fallback() -> ApiError {
    ApiError::not_found("no such route")
}

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/graphs", get(list_graphs).post(create_graph))
        .route("/graphs/{id}", get(get_graph).put(put_graph).delete(delete_graph))
        .route("/graphs/{id}/claims", post(add_claim))
        .route("/graphs/{id}/claims/{cid}", axum::routing::delete(delete_claim))
        .route("/graphs/{id}/claims/{cid}/evidence", post(add_evidence))
        .route("/graphs/{id}/edges", post(add_edge))
        .route("/graphs/{id}/edges/{eid}", put(relabel_edge).delete(delete_edge))
        .route("/graphs/{id}/classify-edge", post(classify_edge))
        .route("/graphs/{id}/propagate", post(propagate))
        .route("/graphs/{id}/critique", post(critique))
        .route("/graphs/{id}/assumptions", post(assumptions))
        .route("/graphs/{id}/report", post(report))
        .route("/graphs/{id}/chat", post(chat))
        .route("/documents", post(upload_document))
        .route("/documents/{id}", get(get_document))
        .route("/documents/{id}/suggest", post(suggest))
        .fallback(fallback)
        .layer(middleware::from_fn_with_state(state.clone(), require_token))
        .route("/health", get(health))
        .with_state(state)
}

/// Serves until ctrl-c.
pub async fn serve(addr: SocketAddr, state: AppState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, auth = state.token.is_some(), "listening");
    axum::serve(listener, router(Arc::new(state)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

use std::sync::Arc;

use argugraph::api::{router, AppState, ErrorBody, GraphView};
use argugraph::bank::default_bank;
use argugraph::provider::{ChatProvider, MockProvider, Task};
use argugraph_core::credibility::{compute_scores, PropagationConfig};
use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

struct Harness {
    app: Router,
    state: Arc<AppState>,
    _dir: tempfile::TempDir,
}

fn harness(provider: Option<MockProvider>, token: Option<&str>) -> Harness {
    let dir = tempfile::tempdir().unwrap();
    let provider = provider.map(|p| Arc::new(p) as Arc<dyn ChatProvider>);
    let state = Arc::new(AppState::new(dir.path(), provider, default_bank(), token.map(str::to_string)).unwrap());
    Harness {
        app: router(state.clone()),
        state,
        _dir: dir,
    }
}

impl Harness {
    async fn send(&self, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
        self.send_with(method, uri, body.map(|b| b.to_string()), Some("application/json"), None)
            .await
    }

    async fn send_with(
        &self,
        method: Method,
        uri: &str,
        body: Option<String>,
        content_type: Option<&str>,
        token: Option<&str>,
    ) -> (StatusCode, Value) {
        let mut req = Request::builder().method(method).uri(uri);
        if let Some(ct) = content_type {
            req = req.header(header::CONTENT_TYPE, ct);
        }
        if let Some(t) = token {
            req = req.header(header::AUTHORIZATION, format!("Bearer {t}"));
        }
        let req = req.body(body.map(Body::from).unwrap_or_else(Body::empty)).unwrap();
        let resp = self.app.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes();
        let value = if bytes.is_empty() {
            Value::Null
        } else {
            serde_json::from_slice(&bytes)
                .unwrap_or_else(|_| panic!("non-JSON body: {}", String::from_utf8_lossy(&bytes)))
        };
        (status, value)
    }
}

fn error(value: &Value) -> ErrorBody {
    serde_json::from_value(value.clone()).expect("structured error body")
}

async fn build_demo(h: &Harness) {
    let (s, _) = h
        .send(Method::POST, "/graphs", Some(json!({"id": "g", "title": "Parks"})))
        .await;
    assert_eq!(s, StatusCode::CREATED);
    for (id, text, ty) in [
        ("a", "Parks are cooler", "fact"),
        ("b", "Build parks", "policy"),
        ("c", "Parks cost money", "fact"),
    ] {
        let (s, v) = h
            .send(
                Method::POST,
                "/graphs/g/claims",
                Some(json!({"id": id, "text": text, "claim_type": ty})),
            )
            .await;
        assert_eq!(s, StatusCode::CREATED, "{v}");
        assert_eq!(v["credibility_stale"], true);
    }
    for (s_id, t_id, rel, st) in [("a", "b", "support", "strong"), ("c", "b", "attack", "weak")] {
        let (s, v) = h
            .send(
                Method::POST,
                "/graphs/g/edges",
                Some(json!({"source_id": s_id, "target_id": t_id, "relation": rel, "strength": st})),
            )
            .await;
        assert_eq!(s, StatusCode::CREATED, "{v}");
    }
    let (s, v) = h
        .send(
            Method::POST,
            "/graphs/g/claims/a/evidence",
            Some(json!({"excerpt": "3 degrees cooler", "polarity": "supporting", "strength": "very_strong"})),
        )
        .await;
    assert_eq!(s, StatusCode::CREATED, "{v}");
    assert_eq!(v["stale_node_ids"], json!(["a", "b", "c"]));
}

#[tokio::test]
async fn roundtrip_matches_direct_engine() {
    let h = harness(None, None);
    build_demo(&h).await;
    let (_, before) = h.send(Method::GET, "/graphs/g", None).await;
    let before: GraphView = serde_json::from_value(before).unwrap();
    let (s, prop) = h.send(Method::POST, "/graphs/g/propagate", None).await;
    assert_eq!(s, StatusCode::OK, "{prop}");
    let (_, after) = h.send(Method::GET, "/graphs/g", None).await;
    let after: GraphView = serde_json::from_value(after).unwrap();

    let direct = compute_scores(&before.graph, &PropagationConfig::for_graph(&before.graph)).unwrap();
    for node in &after.graph.nodes {
        assert_eq!(
            node.credibility.to_bits(),
            direct.scores[&node.id].to_bits(),
            "{}",
            node.id
        );
        assert_eq!(
            prop["scores"][&node.id].as_f64().unwrap().to_bits(),
            direct.scores[&node.id].to_bits()
        );
    }
    assert!(!after.credibility_stale);
    assert_eq!(after.revision, before.revision + 1);
    assert_eq!(after.last_propagation.as_ref().unwrap().revision, after.revision);
    assert_eq!(after.last_propagation.unwrap().result, direct);

    let stored = h.state.graphs.load("g").unwrap();
    assert_eq!(stored.graph, after.graph);
}

#[tokio::test]
async fn mutation_marks_scores_stale_again() {
    let h = harness(None, None);
    build_demo(&h).await;
    h.send(Method::POST, "/graphs/g/propagate", None).await;
    let (s, v) = h
        .send(
            Method::PUT,
            "/graphs/g/edges/e2",
            Some(json!({"relation": "attack", "strength": "strong"})),
        )
        .await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(v["credibility_stale"], true);
    assert_eq!(v["stale_node_ids"], json!(["b"]));
    assert_eq!(v["item"]["origin"], "human_override");
}

#[tokio::test]
async fn propagate_query_parameters() {
    let h = harness(None, None);
    build_demo(&h).await;
    let (s, v) = h.send(Method::POST, "/graphs/g/propagate?max_iters=1", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["converged"], false);
    let (s, v) = h.send(Method::POST, "/graphs/g/propagate?delta=-1", None).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(error(&v).code, "invalid_parameters");
    let (s, v) = h.send(Method::POST, "/graphs/g/propagate?delta=abc", None).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(error(&v).code, "invalid_query");
}

#[tokio::test]
async fn invariant_violations_are_structured_4xx() {
    let h = harness(None, None);
    build_demo(&h).await;
    let cases = [
        (
            "/graphs/g/claims",
            json!({"text": " ", "claim_type": "fact"}),
            StatusCode::UNPROCESSABLE_ENTITY,
        ),
        (
            "/graphs/g/edges",
            json!({"source_id": "a", "target_id": "a", "relation": "support", "strength": "weak"}),
            StatusCode::UNPROCESSABLE_ENTITY,
        ),
        (
            "/graphs/g/edges",
            json!({"source_id": "a", "target_id": "zz", "relation": "support", "strength": "weak"}),
            StatusCode::NOT_FOUND,
        ),
        (
            "/graphs/g/edges",
            json!({"source_id": "a", "target_id": "b", "relation": "support", "strength": "weak"}),
            StatusCode::CONFLICT,
        ),
        (
            "/graphs/g/edges",
            json!({"source_id": "a", "target_id": "b", "relation": "support", "strength": 0.7}),
            StatusCode::BAD_REQUEST,
        ),
        (
            "/graphs/g/claims/a/evidence",
            json!({"excerpt": "x"}),
            StatusCode::UNPROCESSABLE_ENTITY,
        ),
    ];
    for (uri, body, status) in cases {
        let (s, v) = h.send(Method::POST, uri, Some(body.clone())).await;
        assert_eq!(s, status, "{uri} {body} -> {v}");
        let e = error(&v);
        assert!(!e.code.is_empty() && !e.message.is_empty());
    }
    // a whole document with a dangling edge
    let (_, g) = h.send(Method::GET, "/graphs/g", None).await;
    let mut doc = g["graph"].clone();
    doc["edges"][0]["target_id"] = "nope".into();
    let (s, v) = h.send(Method::PUT, "/graphs/g", Some(doc)).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["details"]["violations"][0]["kind"], "dangling_endpoint");
    assert_eq!(h.state.graphs.load("g").unwrap().revision, 7);
}

#[tokio::test]
async fn crud_and_conflicts() {
    let h = harness(None, None);
    build_demo(&h).await;
    let (_, g) = h.send(Method::GET, "/graphs/g", None).await;
    let rev = g["revision"].as_u64().unwrap();
    let doc = g["graph"].clone();
    let (s, v) = h
        .send(
            Method::PUT,
            &format!("/graphs/g?expected_revision={}", rev - 1),
            Some(doc.clone()),
        )
        .await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_eq!(error(&v).code, "revision_conflict");
    let (s, v) = h
        .send(
            Method::PUT,
            &format!("/graphs/g?expected_revision={rev}"),
            Some(doc.clone()),
        )
        .await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(v["revision"], rev + 1);
    assert_eq!(v["graph"], doc);

    let (s, v) = h
        .send(
            Method::POST,
            "/graphs/g/claims?expected_revision=1",
            Some(json!({"text": "x", "claim_type": "value"})),
        )
        .await;
    assert_eq!(s, StatusCode::CONFLICT, "{v}");

    let (s, _) = h
        .send(Method::POST, "/graphs", Some(json!({"id": "g", "title": "dup"})))
        .await;
    assert_eq!(s, StatusCode::CONFLICT);
    let mut other = doc.clone();
    other["id"] = "h".into();
    let (s, v) = h.send(Method::POST, "/graphs", Some(other)).await;
    assert_eq!(s, StatusCode::CREATED, "{v}");
    let (_, list) = h.send(Method::GET, "/graphs", None).await;
    assert_eq!(list["graph_ids"], json!(["g", "h"]));

    let (s, _) = h.send(Method::DELETE, "/graphs/h", None).await;
    assert_eq!(s, StatusCode::NO_CONTENT);
    let (s, v) = h.send(Method::GET, "/graphs/h", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_eq!(error(&v).code, "not_found");
    let (s, _) = h.send(Method::GET, "/graphs/..%2Fetc", None).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);

    let (s, v) = h.send(Method::DELETE, "/graphs/g/claims/c", None).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(v["stale_node_ids"], json!(["a", "b"]));
    let (_, g) = h.send(Method::GET, "/graphs/g", None).await;
    assert_eq!(g["graph"]["edges"].as_array().unwrap().len(), 1);
}

#[tokio::test]
async fn auth_is_enforced_when_configured() {
    let h = harness(None, Some("s3cret"));
    let (s, v) = h.send_with(Method::GET, "/graphs", None, None, None).await;
    assert_eq!(s, StatusCode::UNAUTHORIZED);
    assert_eq!(error(&v).code, "unauthorized");
    let (s, _) = h.send_with(Method::GET, "/graphs", None, None, Some("wrong")).await;
    assert_eq!(s, StatusCode::UNAUTHORIZED);
    let (s, _) = h.send_with(Method::GET, "/graphs", None, None, Some("s3cret")).await;
    assert_eq!(s, StatusCode::OK);
    let (s, _) = h.send_with(Method::GET, "/health", None, None, None).await;
    assert_eq!(s, StatusCode::OK);
}

#[tokio::test]
async fn provider_backed_endpoints() {
    let mock = MockProvider::new(3)
        .reply(
            Task::ClassifyEdge,
            r#"{"relation":"attack","strength":"moderate","justification":"cost undercuts the policy"}"#,
        )
        .reply(
            Task::AssessEvidence,
            r#"{"polarity":"supporting","strength":"strong","justification":"measured"}"#,
        );
    let h = harness(Some(mock), None);
    build_demo(&h).await;

    let (s, v) = h
        .send(
            Method::POST,
            "/graphs/g/classify-edge",
            Some(json!({"source_id": "c", "target_id": "b"})),
        )
        .await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(v["relation"], "attack");
    assert_eq!(v["strength"], "moderate");
    assert_eq!(v["origin"], "machine");
    // classification alone does not change the graph
    assert_eq!(h.state.graphs.load("g").unwrap().revision, 7);

    let (s, v) = h
        .send(
            Method::POST,
            "/graphs/g/claims/a/evidence",
            Some(json!({"excerpt": "Sensors agree", "assess": true})),
        )
        .await;
    assert_eq!(s, StatusCode::CREATED, "{v}");
    assert_eq!(v["item"]["strength"], "strong");
    assert_eq!(v["item"]["origin"], "machine");

    let (s, v) = h
        .send(Method::POST, "/graphs/g/assumptions", Some(json!({"edge_id": "e1"})))
        .await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(v["assumptions"].as_array().unwrap().len(), 3);

    let (s, first) = h
        .send(
            Method::POST,
            "/graphs/g/chat",
            Some(json!({"message": "How many claims?"})),
        )
        .await;
    assert_eq!(s, StatusCode::OK, "{first}");
    assert!(first["reply"].as_str().unwrap().contains("3 claims"));
    let session = first["session_id"].as_str().unwrap().to_string();
    h.send(
        Method::POST,
        "/graphs/g/claims",
        Some(json!({"text": "d", "claim_type": "value"})),
    )
    .await;
    let (_, second) = h
        .send(
            Method::POST,
            "/graphs/g/chat",
            Some(json!({"message": "And now?", "session_id": session})),
        )
        .await;
    assert!(second["reply"].as_str().unwrap().contains("4 claims"), "{second}");
    assert_eq!(second["session_id"], first["session_id"]);
    assert!(second["revision"].as_u64() > first["revision"].as_u64());

    let (s, v) = h
        .send(Method::POST, "/graphs/g/critique", Some(json!({"semantic": true})))
        .await;
    assert_eq!(s, StatusCode::OK, "{v}");
    let (s, v) = h.send(Method::POST, "/graphs/g/report", None).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(v["sections"].as_array().unwrap().len(), 8);
    assert!(v["sections"][0]["body"]
        .as_str()
        .unwrap()
        .starts_with("Mock executive summary"));
}

#[tokio::test]
async fn provider_endpoints_without_provider() {
    let h = harness(None, None);
    build_demo(&h).await;
    let (s, v) = h
        .send(
            Method::POST,
            "/graphs/g/classify-edge",
            Some(json!({"source_id": "a", "target_id": "b"})),
        )
        .await;
    assert_eq!(s, StatusCode::SERVICE_UNAVAILABLE);
    assert_eq!(error(&v).code, "provider_unavailable");
    // reports still work, with fallback prose
    let (s, v) = h.send(Method::POST, "/graphs/g/report", Some(json!({}))).await;
    assert_eq!(s, StatusCode::OK);
    assert!(v["sections"][7]["body"]
        .as_str()
        .unwrap()
        .starts_with("Fallback notice"));
}

#[tokio::test]
async fn documents_and_suggestions() {
    let h = harness(Some(MockProvider::new(0)), None);
    build_demo(&h).await;
    let text = "Parks are cooler. Sensors agree on it. Costs rose. Shade helps.";
    let (s, v) = h
        .send_with(
            Method::POST,
            "/documents",
            Some(text.to_string()),
            Some("text/plain"),
            None,
        )
        .await;
    assert_eq!(s, StatusCode::CREATED, "{v}");
    let doc_id = v["document_id"].as_str().unwrap().to_string();
    assert_eq!(v["length"], text.chars().count());
    let (s, v) = h
        .send(
            Method::POST,
            &format!("/documents/{doc_id}/suggest"),
            Some(json!({"graph_id": "g", "claim_id": "a", "max_suggestions": 2})),
        )
        .await;
    assert_eq!(s, StatusCode::OK, "{v}");
    let suggestions = v["suggestions"].as_array().unwrap();
    assert_eq!(suggestions.len(), 2);
    for sug in suggestions {
        let (a, b) = (
            sug["start_offset"].as_u64().unwrap() as usize,
            sug["end_offset"].as_u64().unwrap() as usize,
        );
        let slice: String = text.chars().skip(a).take(b - a).collect();
        assert_eq!(slice, sug["excerpt"].as_str().unwrap());
    }
    let (s, _) = h
        .send(
            Method::POST,
            "/documents/nope/suggest",
            Some(json!({"graph_id": "g", "claim_id": "a"})),
        )
        .await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let (s, _) = h
        .send_with(Method::POST, "/documents", Some("  ".into()), Some("text/plain"), None)
        .await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
}

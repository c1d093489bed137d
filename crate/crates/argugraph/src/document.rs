//! JSON graph documents.

use argugraph_core::graph::{ArgumentGraph, Violation};
use chrono::{DateTime, SecondsFormat, Utc};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DocumentError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("metadata.{field} is not an RFC 3339 timestamp: {value:?}")]
    Timestamp { field: &'static str, value: String },
    #[error("graph violates {} invariant(s)", .0.len())]
    Invalid(Vec<Violation>),
}

impl From<serde_json::Error> for DocumentError {
    fn from(err: serde_json::Error) -> Self {
        // serde_json appends " at line L column C" to its Display output
        let message = err.to_string();
        let message = match message.rfind(" at line ") {
            Some(pos) => message[..pos].to_string(),
            None => message,
        };
        DocumentError::Parse {
            line: err.line(),
            column: err.column(),
            message,
        }
    }
}

pub fn now_rfc3339() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true)
}

pub fn serialize(graph: &ArgumentGraph) -> String {
    serde_json::to_string_pretty(graph).expect("graph documents always serialize")
}

/// Parses and schema-checks a document without checking graph invariants.
pub fn parse(text: &str) -> Result<ArgumentGraph, DocumentError> {
    let graph: ArgumentGraph = serde_json::from_str(text)?;
    for (field, value) in [
        ("created_at", &graph.metadata.created_at),
        ("modified_at", &graph.metadata.modified_at),
    ] {
        if DateTime::parse_from_rfc3339(value).is_err() {
            return Err(DocumentError::Timestamp {
                field,
                value: value.clone(),
            });
        }
    }
    Ok(graph)
}

/// Parses a document and rejects graphs that break any invariant.
pub fn deserialize(text: &str) -> Result<ArgumentGraph, DocumentError> {
    let graph = parse(text)?;
    let violations = graph.validate();
    if violations.is_empty() {
        Ok(graph)
    } else {
        Err(DocumentError::Invalid(violations))
    }
}

/// Stamps `modified_at` with the current time.
pub fn touch(graph: &mut ArgumentGraph) {
    graph.metadata.modified_at = now_rfc3339();
}

#[cfg(test)]
mod tests {
    use super::*;
    use argugraph_core::graph::{ClaimType, NewEdge, Origin, QualitativeStrength, Relation};

    fn sample() -> ArgumentGraph {
        let mut g = ArgumentGraph::new("g1", "Parks", "2026-03-01T12:00:00Z");
        g.add_claim_with_id("a", "Parks cool cities", ClaimType::Fact).unwrap();
        g.add_claim_with_id("b", "Build parks", ClaimType::Policy).unwrap();
        g.add_edge(
            NewEdge::new("a", "b", Relation::Support, QualitativeStrength::Strong).origin(Origin::HumanOverride),
        )
        .unwrap();
        g
    }

    #[test]
    fn roundtrip() {
        let g = sample();
        assert_eq!(deserialize(&serialize(&g)).unwrap(), g);
    }

    #[test]
    fn wire_names() {
        let text = serialize(&sample());
        for needle in [
            "\"claim_type\": \"policy\"",
            "\"relation\": \"support\"",
            "\"origin\": \"human_override\"",
            "\"strength\": \"strong\"",
            "\"created_at\": \"2026-03-01T12:00:00Z\"",
        ] {
            assert!(text.contains(needle), "{needle} missing");
        }
    }

    #[test]
    fn parse_error_has_location() {
        let err = deserialize("{\n  \"id\": \"g\",\n  \"title\": 3\n}").unwrap_err();
        match err {
            DocumentError::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_delta() {
        let text = serialize(&sample()).replace("\"delta\": 1.0,", "");
        match deserialize(&text).unwrap_err() {
            DocumentError::Parse { message, .. } => assert!(message.contains("delta"), "{message}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn invariant_violations_are_listed() {
        let text = serialize(&sample()).replace("\"target_id\": \"b\"", "\"target_id\": \"zz\"");
        match deserialize(&text).unwrap_err() {
            DocumentError::Invalid(v) => assert_eq!(v.len(), 1),
            other => panic!("{other:?}"),
        }
        // parse() alone accepts it
        assert!(parse(&text).is_ok());
    }

    #[test]
    fn bad_timestamp() {
        let text = serialize(&sample()).replace("2026-03-01T12:00:00Z", "yesterday");
        assert!(matches!(deserialize(&text), Err(DocumentError::Timestamp { .. })));
    }
}

//! File-backed graph and document storage.
//!
//! Each graph lives in `<data_dir>/graphs/<id>.json` together with its
//! revision and the last propagation result. Writes go to a temporary file in
//! the same directory that is then renamed over the target, so readers always
//! see a complete document and need no lock. Writers to one graph id are
//! serialized by a per-id mutex.

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use argugraph_core::credibility::PropagationResult;
use argugraph_core::graph::{ArgumentGraph, Violation};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assist::SourceDocument;

pub const ENV_DATA_DIR: &str = "ARGUGRAPH_DATA_DIR";
pub const DEFAULT_DATA_DIR: &str = "argugraph-data";

const MAX_ID_LEN: usize = 128;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaggedPropagation {
    /// Revision of the stored graph that carries these scores.
    pub revision: u64,
    pub result: PropagationResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StoredGraph {
    pub revision: u64,
    pub graph: ArgumentGraph,
    #[serde(default)]
    pub last_propagation: Option<TaggedPropagation>,
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{kind} {id:?} not found")]
    NotFound { kind: &'static str, id: String },
    #[error("graph {0:?} already exists")]
    AlreadyExists(String),
    #[error("revision conflict: expected {expected}, stored is {actual}")]
    Conflict { expected: u64, actual: u64 },
    #[error("invalid id {0:?}: use 1-128 ASCII letters, digits, '-' or '_'")]
    InvalidId(String),
    #[error("graph violates {} invariant(s)", .0.len())]
    Invalid(Vec<Violation>),
    #[error("stored file {path} is corrupt: {message}")]
    Corrupt { path: String, message: String },
    #[error("storage IO error: {0}")]
    Io(#[from] std::io::Error),
}

/// Ids become file names, so only a conservative character set is allowed.
pub fn is_valid_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= MAX_ID_LEN && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_')
}

fn check_id(id: &str) -> Result<(), StoreError> {
    if is_valid_id(id) {
        Ok(())
    } else {
        Err(StoreError::InvalidId(id.to_string()))
    }
}

fn check_graph(graph: &ArgumentGraph) -> Result<(), StoreError> {
    check_id(&graph.id)?;
    let violations = graph.validate();
    if violations.is_empty() {
        Ok(())
    } else {
        Err(StoreError::Invalid(violations))
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    let dir = path.parent().expect("store paths have a parent");
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| StoreError::Io(e.error))?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path, kind: &'static str, id: &str) -> Result<T, StoreError> {
    let text = match std::fs::read_to_string(path) {
        Ok(text) => text,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(StoreError::NotFound { kind, id: id.into() }),
        Err(e) => return Err(e.into()),
    };
    serde_json::from_str(&text).map_err(|e| StoreError::Corrupt {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

#[derive(Debug)]
pub struct GraphStore {
    dir: PathBuf,
    locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
}

impl GraphStore {
    pub fn open(data_dir: impl AsRef<Path>) -> Result<Self, StoreError> {
        let dir = data_dir.as_ref().join("graphs");
        std::fs::create_dir_all(&dir)?;
        Ok(GraphStore {
            dir,
            locks: Mutex::new(HashMap::new()),
        })
    }

    fn path(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.json"))
    }

    fn lock(&self, id: &str) -> Arc<Mutex<()>> {
        let mut locks = self.locks.lock().expect("lock table poisoned");
        locks.entry(id.to_string()).or_default().clone()
    }

    fn write(&self, stored: &StoredGraph) -> Result<(), StoreError> {
        let json = serde_json::to_vec_pretty(stored).expect("stored graphs always serialize");
        write_atomic(&self.path(&stored.graph.id), &json)
    }

    /// Latest durable revision. Takes no lock.
    pub fn load(&self, id: &str) -> Result<StoredGraph, StoreError> {
        check_id(id)?;
        read_json(&self.path(id), "graph", id)
    }

    pub fn exists(&self, id: &str) -> bool {
        is_valid_id(id) && self.path(id).exists()
    }

    /// Stores a new graph at revision 1.
    pub fn create(&self, graph: ArgumentGraph) -> Result<StoredGraph, StoreError> {
        check_graph(&graph)?;
        let lock = self.lock(&graph.id);
        let _guard = lock.lock().expect("graph lock poisoned");
        if self.path(&graph.id).exists() {
            return Err(StoreError::AlreadyExists(graph.id));
        }
        let stored = StoredGraph {
            revision: 1,
            graph,
            last_propagation: None,
        };
        self.write(&stored)?;
        Ok(stored)
    }

    /// Writes `graph` as the next revision, creating it if absent. With
    /// `expected_revision`, fails with a conflict unless the stored revision
    /// matches.
    pub fn persist(&self, graph: ArgumentGraph, expected_revision: Option<u64>) -> Result<u64, StoreError> {
        check_graph(&graph)?;
        let lock = self.lock(&graph.id);
        let _guard = lock.lock().expect("graph lock poisoned");
        let current = match self.load(&graph.id) {
            Ok(stored) => Some(stored),
            Err(StoreError::NotFound { .. }) => None,
            Err(e) => return Err(e),
        };
        let actual = current.as_ref().map_or(0, |s| s.revision);
        if let Some(expected) = expected_revision {
            if expected != actual {
                return Err(StoreError::Conflict { expected, actual });
            }
        }
        let stored = StoredGraph {
            revision: actual + 1,
            graph,
            last_propagation: current.and_then(|s| s.last_propagation),
        };
        self.write(&stored)?;
        Ok(stored.revision)
    }

    /// Applies `mutate` to the latest revision under the graph's write lock.
    /// Nothing is written if `mutate` fails or leaves the graph invalid, or if
    /// `expected_revision` is given and differs from the stored one.
    pub fn update<T, E>(
        &self,
        id: &str,
        expected_revision: Option<u64>,
        mutate: impl FnOnce(&mut ArgumentGraph) -> Result<T, E>,
    ) -> Result<Result<(T, StoredGraph), E>, StoreError> {
        check_id(id)?;
        let lock = self.lock(id);
        let _guard = lock.lock().expect("graph lock poisoned");
        let mut stored = self.load(id)?;
        if let Some(expected) = expected_revision.filter(|e| *e != stored.revision) {
            return Err(StoreError::Conflict {
                expected,
                actual: stored.revision,
            });
        }
        let value = match mutate(&mut stored.graph) {
            Ok(v) => v,
            Err(e) => return Ok(Err(e)),
        };
        check_graph(&stored.graph)?;
        stored.revision += 1;
        self.write(&stored)?;
        Ok(Ok((value, stored)))
    }

    /// Writes scores computed from the snapshot at `computed_at`. Fails with a
    /// conflict if the graph changed since.
    pub fn persist_propagation(
        &self,
        id: &str,
        computed_at: u64,
        result: PropagationResult,
    ) -> Result<StoredGraph, StoreError> {
        check_id(id)?;
        let lock = self.lock(id);
        let _guard = lock.lock().expect("graph lock poisoned");
        let mut stored = self.load(id)?;
        if stored.revision != computed_at {
            return Err(StoreError::Conflict {
                expected: computed_at,
                actual: stored.revision,
            });
        }
        argugraph_core::credibility::apply_scores(&mut stored.graph, &result);
        stored.revision += 1;
        stored.last_propagation = Some(TaggedPropagation {
            revision: stored.revision,
            result,
        });
        self.write(&stored)?;
        Ok(stored)
    }

    pub fn delete(&self, id: &str) -> Result<(), StoreError> {
        check_id(id)?;
        let lock = self.lock(id);
        let _guard = lock.lock().expect("graph lock poisoned");
        match std::fs::remove_file(self.path(id)) {
            Ok(()) => Ok(()),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(StoreError::NotFound {
                kind: "graph",
                id: id.into(),
            }),
            Err(e) => Err(e.into()),
        }
    }

    /// Sorted ids of stored graphs.
    pub fn list(&self) -> Result<Vec<String>, StoreError> {
        let mut ids = Vec::new();
        for entry in std::fs::read_dir(&self.dir)? {
            let name = entry?.file_name();
            if let Some(id) = name.to_str().and_then(|n| n.strip_suffix(".json")) {
                if is_valid_id(id) {
                    ids.push(id.to_string());
                }
            }
        }
        ids.sort();
        Ok(ids)
    }
}

/// Uploaded plain-text documents, one JSON file each.
#[derive(Debug)]
pub struct DocumentStore {
    dir: PathBuf,
}

impl DocumentStore {
    pub fn open(data_dir: impl AsRef<Path>) -> Result<Self, StoreError> {
        let dir = data_dir.as_ref().join("documents");
        std::fs::create_dir_all(&dir)?;
        Ok(DocumentStore { dir })
    }

    pub fn put(&self, document: &SourceDocument) -> Result<(), StoreError> {
        check_id(&document.id)?;
        let json = serde_json::to_vec_pretty(document).expect("documents always serialize");
        write_atomic(&self.dir.join(format!("{}.json", document.id)), &json)
    }

    pub fn get(&self, id: &str) -> Result<SourceDocument, StoreError> {
        check_id(id)?;
        read_json(&self.dir.join(format!("{id}.json")), "document", id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use argugraph_core::credibility::{compute_scores, PropagationConfig};
    use argugraph_core::graph::ClaimType;

    fn graph(id: &str) -> ArgumentGraph {
        let mut g = ArgumentGraph::new(id, "t", "2026-01-01T00:00:00Z");
        g.add_claim("a", ClaimType::Fact).unwrap();
        g
    }

    #[test]
    fn roundtrip_and_monotonic_revisions() {
        let dir = tempfile::tempdir().unwrap();
        let store = GraphStore::open(dir.path()).unwrap();
        let r1 = store.persist(graph("g1"), None).unwrap();
        let r2 = store.persist(graph("g1"), Some(r1)).unwrap();
        assert_eq!(r2, r1 + 1);
        let loaded = store.load("g1").unwrap();
        assert_eq!(loaded.graph, graph("g1"));
        assert_eq!(loaded.revision, r2);
        assert!(matches!(
            store.persist(graph("g1"), Some(r1)),
            Err(StoreError::Conflict { .. })
        ));
        assert_eq!(store.list().unwrap(), ["g1"]);
    }

    #[test]
    fn missing_and_unsafe_ids() {
        let dir = tempfile::tempdir().unwrap();
        let store = GraphStore::open(dir.path()).unwrap();
        assert!(matches!(store.load("nope"), Err(StoreError::NotFound { .. })));
        assert!(matches!(store.load("../etc/passwd"), Err(StoreError::InvalidId(_))));
        assert!(matches!(store.delete("nope"), Err(StoreError::NotFound { .. })));
        assert!(matches!(store.create(graph("a b")), Err(StoreError::InvalidId(_))));
    }

    #[test]
    fn failed_update_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let store = GraphStore::open(dir.path()).unwrap();
        store.create(graph("g")).unwrap();
        let out = store
            .update("g", None, |g| g.add_claim("", ClaimType::Fact).map(|_| ()))
            .unwrap();
        assert!(out.is_err());
        assert_eq!(store.load("g").unwrap().revision, 1);
    }

    #[test]
    fn propagation_is_tagged_and_conflicts_on_change() {
        let dir = tempfile::tempdir().unwrap();
        let store = GraphStore::open(dir.path()).unwrap();
        let stored = store.create(graph("g")).unwrap();
        let result = compute_scores(&stored.graph, &PropagationConfig::for_graph(&stored.graph)).unwrap();
        let after = store.persist_propagation("g", 1, result.clone()).unwrap();
        assert_eq!(after.revision, 2);
        assert_eq!(after.last_propagation.as_ref().unwrap().revision, 2);
        assert!(after.graph.stale_node_ids().is_empty());
        assert!(matches!(
            store.persist_propagation("g", 1, result),
            Err(StoreError::Conflict { .. })
        ));
    }

    #[test]
    fn concurrent_updates_are_serialized() {
        let dir = tempfile::tempdir().unwrap();
        let store = Arc::new(GraphStore::open(dir.path()).unwrap());
        store.create(graph("g")).unwrap();
        let handles: Vec<_> = (0..8)
            .map(|i| {
                let store = store.clone();
                std::thread::spawn(move || {
                    store
                        .update("g", None, |g| {
                            g.add_claim(format!("c{i}"), ClaimType::Value).map(|_| ())
                        })
                        .unwrap()
                        .unwrap();
                })
            })
            .collect();
        for h in handles {
            h.join().unwrap();
        }
        let loaded = store.load("g").unwrap();
        assert_eq!(loaded.revision, 9);
        assert_eq!(loaded.graph.nodes.len(), 9);
    }

    #[test]
    fn documents() {
        let dir = tempfile::tempdir().unwrap();
        let docs = DocumentStore::open(dir.path()).unwrap();
        let d = SourceDocument {
            id: "d1".into(),
            title: Some("T".into()),
            text: "body".into(),
        };
        docs.put(&d).unwrap();
        assert_eq!(docs.get("d1").unwrap(), d);
        assert!(matches!(docs.get("d2"), Err(StoreError::NotFound { .. })));
    }
}

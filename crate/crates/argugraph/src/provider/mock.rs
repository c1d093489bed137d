use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde_json::json;

use super::{ChatProvider, ChatRequest, ProviderError, Role, Task, SNAPSHOT_MARKER};

const LABELS: [&str; 5] = ["very_weak", "weak", "moderate", "strong", "very_strong"];

struct Rule {
    task: Task,
    needle: Option<String>,
    reply: Result<String, ProviderError>,
}

/// Deterministic offline provider.
///
/// Replies are a pure function of the request content and the seed: scripted
/// rules are tried in insertion order (first match wins), then a built-in
/// reply for the request's task is produced. Calls are counted and recorded
/// for inspection, which never affects the reply.
pub struct MockProvider {
    seed: u64,
    max_retries: u32,
    rules: Vec<Rule>,
    calls: AtomicUsize,
    log: Mutex<Vec<ChatRequest>>,
}

impl MockProvider {
    pub fn new(seed: u64) -> Self {
        MockProvider {
            seed,
            max_retries: super::DEFAULT_MAX_RETRIES,
            rules: Vec::new(),
            calls: AtomicUsize::new(0),
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn with_max_retries(mut self, max_retries: u32) -> Self {
        self.max_retries = max_retries;
        self
    }

    /// Always answer `task` with `reply`.
    pub fn reply(self, task: Task, reply: impl Into<String>) -> Self {
        self.rule(task, None, Ok(reply.into()))
    }

    /// Answer `task` with `reply` when the request text contains `needle`.
    pub fn reply_when(self, task: Task, needle: impl Into<String>, reply: impl Into<String>) -> Self {
        self.rule(task, Some(needle.into()), Ok(reply.into()))
    }

    pub fn fail(self, task: Task, error: ProviderError) -> Self {
        self.rule(task, None, Err(error))
    }

    fn rule(mut self, task: Task, needle: Option<String>, reply: Result<String, ProviderError>) -> Self {
        self.rules.push(Rule { task, needle, reply });
        self
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn requests(&self) -> Vec<ChatRequest> {
        self.log.lock().expect("mock log poisoned").clone()
    }

    fn hash(&self, text: &str) -> u64 {
        // FNV-1a
        let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ self.seed;
        for b in text.bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        h
    }

    fn builtin(&self, request: &ChatRequest) -> String {
        let text = request.transcript();
        let h = self.hash(&text);
        let label = |shift: u32| LABELS[((h >> shift) % LABELS.len() as u64) as usize];
        match request.task {
            Task::ClassifyEdge => json!({
                "relation": if h.is_multiple_of(3) { "attack" } else { "support" },
                "strength": label(8),
                "justification": "Mock classification derived from the request text.",
            })
            .to_string(),
            Task::AssessEvidence => json!({
                "polarity": if h.is_multiple_of(3) { "negating" } else { "supporting" },
                "strength": label(8),
                "justification": "Mock assessment derived from the request text.",
            })
            .to_string(),
            Task::SuggestExtracts => {
                let document = between(&text, "<document>\n", "\n</document>").unwrap_or("");
                let extracts: Vec<_> = sentences(document)
                    .into_iter()
                    .take(3)
                    .enumerate()
                    .map(|(i, s)| json!({"excerpt": s, "relevance": label(8 + 4 * i as u32)}))
                    .collect();
                json!({ "extracts": extracts }).to_string()
            }
            Task::GenerateAssumptions => {
                let items: Vec<_> = (0..3u32)
                    .map(|i| {
                        json!({
                            "text": format!("Mock assumption {} linking the two claims.", i + 1),
                            "importance": 1 + (h >> (8 * i)) % 5,
                            "justification": "Fills an unstated step in the inference.",
                        })
                    })
                    .collect();
                json!({ "assumptions": items }).to_string()
            }
            Task::SemanticPattern => json!({ "findings": [] }).to_string(),
            Task::Chat => {
                let question = request
                    .messages
                    .iter()
                    .rev()
                    .find(|m| m.role == Role::User)
                    .map(|m| m.content.as_str())
                    .unwrap_or("");
                format!("{} You asked: {question}", describe_snapshot(request))
            }
            Task::ReportSummary => format!("Mock executive summary. {}", describe_snapshot(request)),
            Task::ReportRecommendations => {
                format!(
                    "Mock recommendations. {} Review weak links first.",
                    describe_snapshot(request)
                )
            }
        }
    }
}

fn between<'a>(text: &'a str, open: &str, close: &str) -> Option<&'a str> {
    let start = text.find(open)? + open.len();
    let end = start + text[start..].find(close)?;
    Some(&text[start..end])
}

/// Sentences ending in `.`, `!` or `?`, verbatim and trimmed.
fn sentences(document: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    for (i, c) in document.char_indices() {
        if matches!(c, '.' | '!' | '?') {
            let s = document[start..i + c.len_utf8()].trim();
            if !s.is_empty() {
                out.push(s);
            }
            start = i + c.len_utf8();
        }
    }
    out
}

fn describe_snapshot(request: &ChatRequest) -> String {
    let snapshot = request
        .messages
        .iter()
        .filter_map(|m| m.content.split_once(SNAPSHOT_MARKER))
        .filter_map(|(_, rest)| serde_json::from_str::<serde_json::Value>(rest.trim()).ok())
        .next_back();
    match snapshot {
        Some(graph) => {
            let count = |key: &str| graph[key].as_array().map_or(0, Vec::len);
            format!("The graph has {} claims and {} edges.", count("nodes"), count("edges"))
        }
        None => "No graph snapshot was provided.".to_string(),
    }
}

impl ChatProvider for MockProvider {
    fn name(&self) -> &str {
        "mock"
    }

    fn max_retries(&self) -> u32 {
        self.max_retries
    }

    fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.log.lock().expect("mock log poisoned").push(request.clone());
        let text = request.transcript();
        for rule in &self.rules {
            if rule.task == request.task && rule.needle.as_deref().is_none_or(|n| text.contains(n)) {
                return rule.reply.clone();
            }
        }
        Ok(self.builtin(request))
    }
}

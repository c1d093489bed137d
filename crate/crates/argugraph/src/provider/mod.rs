//! Chat-completion providers.
//!
//! Everything that talks to a language model goes through [`ChatProvider`].
//! Two implementations ship: [`MockProvider`], a pure function of request
//! content and seed used by every test, and [`OpenAiCompatible`], an HTTP
//! client for any OpenAI-style `chat/completions` endpoint.

mod http;
mod mock;

use std::fmt;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use http::{live_request_count, OpenAiCompatible};
pub use mock::MockProvider;

pub const DEFAULT_MAX_RETRIES: u32 = 2;
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

pub const ENV_PROVIDER: &str = "ARGUGRAPH_LLM_PROVIDER";
pub const ENV_ENDPOINT: &str = "ARGUGRAPH_LLM_ENDPOINT";
pub const ENV_MODEL: &str = "ARGUGRAPH_LLM_MODEL";
pub const ENV_API_KEY: &str = "ARGUGRAPH_LLM_API_KEY";
pub const ENV_TIMEOUT_SECS: &str = "ARGUGRAPH_LLM_TIMEOUT_SECS";
pub const ENV_MAX_RETRIES: &str = "ARGUGRAPH_LLM_MAX_RETRIES";
pub const ENV_SEED: &str = "ARGUGRAPH_LLM_SEED";

/// Prefix of the system message that carries a JSON graph snapshot.
pub const SNAPSHOT_MARKER: &str = "GRAPH SNAPSHOT (JSON):";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

/// What a request is for. Live providers ignore it; the mock uses it to pick
/// a reply shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    ClassifyEdge,
    AssessEvidence,
    SuggestExtracts,
    GenerateAssumptions,
    Chat,
    SemanticPattern,
    ReportSummary,
    ReportRecommendations,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChatRequest {
    pub task: Task,
    pub messages: Vec<ChatMessage>,
}

impl ChatRequest {
    pub fn new(task: Task, messages: Vec<ChatMessage>) -> Self {
        ChatRequest { task, messages }
    }

    /// All message contents joined by newlines.
    pub fn transcript(&self) -> String {
        let parts: Vec<&str> = self.messages.iter().map(|m| m.content.as_str()).collect();
        parts.join("\n")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProviderError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("request timed out after {after_ms} ms")]
    Timeout { after_ms: u64 },
    #[error("provider returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed provider response: {0}")]
    Malformed(String),
    #[error("no language model provider is configured")]
    NotConfigured,
}

impl ProviderError {
    pub fn is_retryable(&self) -> bool {
        match self {
            ProviderError::Transport(_) | ProviderError::Timeout { .. } => true,
            ProviderError::Status { status, .. } => *status == 429 || *status >= 500,
            ProviderError::Malformed(_) | ProviderError::NotConfigured => false,
        }
    }
}

pub trait ChatProvider: Send + Sync {
    fn name(&self) -> &str;

    /// Extra attempts allowed after a transport failure or a rejected reply.
    fn max_retries(&self) -> u32 {
        DEFAULT_MAX_RETRIES
    }

    fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError>;
}

impl<P: ChatProvider + ?Sized> ChatProvider for Arc<P> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn max_retries(&self) -> u32 {
        (**self).max_retries()
    }

    fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError> {
        (**self).complete(request)
    }
}

/// Stand-in used when nothing is configured. Every call fails without retry,
/// so callers with fallbacks degrade immediately.
#[derive(Debug, Default, Clone, Copy)]
pub struct Unconfigured;

impl ChatProvider for Unconfigured {
    fn name(&self) -> &str {
        "unconfigured"
    }

    fn max_retries(&self) -> u32 {
        0
    }

    fn complete(&self, _request: &ChatRequest) -> Result<String, ProviderError> {
        Err(ProviderError::NotConfigured)
    }
}

/// Secret string whose `Debug` output is redacted.
#[derive(Clone, PartialEq, Eq)]
pub struct ApiKey(String);

impl ApiKey {
    pub fn new(key: impl Into<String>) -> Self {
        ApiKey(key.into())
    }

    pub fn expose(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for ApiKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ApiKey(<redacted>)")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProviderConfig {
    pub endpoint: String,
    pub model_name: String,
    pub api_key: Option<ApiKey>,
    pub timeout: Duration,
    pub max_retries: u32,
}

impl ProviderConfig {
    pub fn new(endpoint: impl Into<String>, model_name: impl Into<String>) -> Self {
        ProviderConfig {
            endpoint: endpoint.into(),
            model_name: model_name.into(),
            api_key: None,
            timeout: DEFAULT_TIMEOUT,
            max_retries: DEFAULT_MAX_RETRIES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProviderConfigError {
    #[error("{0} must be set")]
    Missing(&'static str),
    #[error("{name} has an invalid value {value:?}")]
    Invalid { name: &'static str, value: String },
}

/// Provider chosen from configuration variables.
pub enum ProviderSelection {
    Mock(MockProvider),
    Live(OpenAiCompatible),
    None,
}

impl ProviderSelection {
    pub fn into_shared(self) -> Option<Arc<dyn ChatProvider>> {
        match self {
            ProviderSelection::Mock(p) => Some(Arc::new(p)),
            ProviderSelection::Live(p) => Some(Arc::new(p)),
            ProviderSelection::None => None,
        }
    }
}

/// Reads the `ARGUGRAPH_LLM_*` variables through `lookup`.
///
/// `ARGUGRAPH_LLM_PROVIDER=mock` selects the mock. Otherwise a live provider
/// is built when an endpoint is set, and nothing is selected when it is not.
pub fn select_provider(lookup: impl Fn(&str) -> Option<String>) -> Result<ProviderSelection, ProviderConfigError> {
    let get = |name: &str| lookup(name).filter(|v| !v.trim().is_empty());
    let kind = get(ENV_PROVIDER).map(|v| v.trim().to_ascii_lowercase());
    match kind.as_deref() {
        Some("mock") => {
            let seed = match get(ENV_SEED) {
                Some(v) => v.trim().parse().map_err(|_| ProviderConfigError::Invalid {
                    name: ENV_SEED,
                    value: v,
                })?,
                None => 0,
            };
            return Ok(ProviderSelection::Mock(MockProvider::new(seed)));
        }
        Some("openai" | "live" | "http") | None => {}
        Some(other) => {
            return Err(ProviderConfigError::Invalid {
                name: ENV_PROVIDER,
                value: other.to_string(),
            })
        }
    }
    let Some(endpoint) = get(ENV_ENDPOINT) else {
        return match kind {
            Some(_) => Err(ProviderConfigError::Missing(ENV_ENDPOINT)),
            None => Ok(ProviderSelection::None),
        };
    };
    let model = get(ENV_MODEL).ok_or(ProviderConfigError::Missing(ENV_MODEL))?;
    let mut config = ProviderConfig::new(endpoint, model);
    config.api_key = get(ENV_API_KEY).map(ApiKey::new);
    if let Some(v) = get(ENV_TIMEOUT_SECS) {
        let secs: f64 = v
            .trim()
            .parse()
            .ok()
            .filter(|s: &f64| *s > 0.0 && s.is_finite())
            .ok_or(ProviderConfigError::Invalid {
                name: ENV_TIMEOUT_SECS,
                value: v.clone(),
            })?;
        config.timeout = Duration::from_secs_f64(secs);
    }
    if let Some(v) = get(ENV_MAX_RETRIES) {
        config.max_retries = v.trim().parse().map_err(|_| ProviderConfigError::Invalid {
            name: ENV_MAX_RETRIES,
            value: v.clone(),
        })?;
    }
    Ok(ProviderSelection::Live(OpenAiCompatible::new(config)?))
}

pub fn select_provider_from_env() -> Result<ProviderSelection, ProviderConfigError> {
    select_provider(|name| std::env::var(name).ok())
}

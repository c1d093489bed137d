use serde::{Deserialize, Serialize};
use std::sync::atomic::{AtomicUsize, Ordering};

use super::{ChatMessage, ChatProvider, ChatRequest, ProviderConfig, ProviderConfigError, ProviderError};

static LIVE_REQUESTS: AtomicUsize = AtomicUsize::new(0);

/// Number of HTTP requests issued by live providers in this process.
pub fn live_request_count() -> usize {
    LIVE_REQUESTS.load(Ordering::SeqCst)
}

/// Client for an OpenAI-compatible `chat/completions` endpoint.
pub struct OpenAiCompatible {
    config: ProviderConfig,
    url: String,
    agent: ureq::Agent,
}

impl std::fmt::Debug for OpenAiCompatible {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OpenAiCompatible")
            .field("config", &self.config)
            .finish()
    }
}

#[derive(Serialize)]
struct CompletionBody<'a> {
    model: &'a str,
    messages: &'a [ChatMessage],
    temperature: f32,
}

#[derive(Deserialize)]
struct CompletionResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ReplyMessage,
}

#[derive(Deserialize)]
struct ReplyMessage {
    content: Option<String>,
}

impl OpenAiCompatible {
    pub fn new(config: ProviderConfig) -> Result<Self, ProviderConfigError> {
        if config.timeout.is_zero() {
            return Err(ProviderConfigError::Invalid {
                name: super::ENV_TIMEOUT_SECS,
                value: "0".into(),
            });
        }
        let endpoint = config.endpoint.trim_end_matches('/');
        if !(endpoint.starts_with("http://") || endpoint.starts_with("https://")) {
            return Err(ProviderConfigError::Invalid {
                name: super::ENV_ENDPOINT,
                value: config.endpoint.clone(),
            });
        }
        let url = if endpoint.ends_with("/chat/completions") {
            endpoint.to_string()
        } else {
            format!("{endpoint}/chat/completions")
        };
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(OpenAiCompatible { config, url, agent })
    }

    pub fn config(&self) -> &ProviderConfig {
        &self.config
    }

    fn timeout_ms(&self) -> u64 {
        u64::try_from(self.config.timeout.as_millis()).unwrap_or(u64::MAX)
    }
}

fn truncate(mut text: String, max: usize) -> String {
    if text.len() > max {
        let mut cut = max;
        while !text.is_char_boundary(cut) {
            cut -= 1;
        }
        text.truncate(cut);
        text.push('…');
    }
    text
}

impl ChatProvider for OpenAiCompatible {
    fn name(&self) -> &str {
        &self.config.model_name
    }

    fn max_retries(&self) -> u32 {
        self.config.max_retries
    }

    fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError> {
        LIVE_REQUESTS.fetch_add(1, Ordering::SeqCst);
        tracing::debug!(model = %self.config.model_name, task = ?request.task, url = %self.url, "chat completion request");
        let body = CompletionBody {
            model: &self.config.model_name,
            messages: &request.messages,
            temperature: 0.0,
        };
        let mut call = self.agent.post(&self.url);
        if let Some(key) = &self.config.api_key {
            call = call.header("Authorization", &format!("Bearer {}", key.expose()));
        }
        let mut response = call.send_json(&body).map_err(|err| match err {
            ureq::Error::Timeout(_) => ProviderError::Timeout {
                after_ms: self.timeout_ms(),
            },
            other => ProviderError::Transport(other.to_string()),
        })?;
        let status = response.status().as_u16();
        if !(200..300).contains(&status) {
            let text = response.body_mut().read_to_string().unwrap_or_default();
            return Err(ProviderError::Status {
                status,
                body: truncate(text, 512),
            });
        }
        let parsed: CompletionResponse = response
            .body_mut()
            .read_json()
            .map_err(|err| ProviderError::Malformed(err.to_string()))?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| ProviderError::Malformed("response has no message content".into()))
    }
}
